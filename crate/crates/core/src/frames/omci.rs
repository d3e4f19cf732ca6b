use serde::{Deserialize, Serialize};

use super::{be16, be32, need, FrameError};

pub const OMCI_HEADER_LEN: usize = 8;
pub const OMCI_MIC_LEN: usize = 4;
const LEN_FIELD: usize = 2;
/// Bit in `device_flags` marking the routed (extended) form.
pub const OMCI_FLAG_EXTENDED: u8 = 0x01;
const ROUTING_LEN: usize = 2;

/// Action codes in the low five bits of `msg_type`, with the usual
/// acknowledge-request (AR, 0x40) and acknowledgement (AK, 0x20) bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MsgType {
    Create,
    Delete,
    Set,
    Get,
    MibReset,
}

impl MsgType {
    pub const AR: u8 = 0x40;
    pub const AK: u8 = 0x20;

    pub fn action(self) -> u8 {
        match self {
            MsgType::Create => 4,
            MsgType::Delete => 6,
            MsgType::Set => 8,
            MsgType::Get => 9,
            MsgType::MibReset => 15,
        }
    }

    pub fn from_action(code: u8) -> Option<MsgType> {
        match code & 0x1F {
            4 => Some(MsgType::Create),
            6 => Some(MsgType::Delete),
            8 => Some(MsgType::Set),
            9 => Some(MsgType::Get),
            15 => Some(MsgType::MibReset),
            _ => None,
        }
    }

    pub fn request(self) -> u8 {
        self.action() | Self::AR
    }

    pub fn response(self) -> u8 {
        self.action() | Self::AK
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmciHeader {
    pub transaction_id: u16,
    pub msg_type: u8,
    /// Device flags excluding [`OMCI_FLAG_EXTENDED`], which the codec derives
    /// from the presence of routing bytes.
    pub device_flags: u8,
    pub entity_class: u16,
    pub entity_instance: u16,
}

/// Routing bytes appended to the content of an extended message.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Routing {
    pub mfu_port_id: u8,
    pub sfu_id: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmciMessage {
    pub header: OmciHeader,
    /// Application content, not including routing bytes.
    pub content: Vec<u8>,
    pub routing: Option<Routing>,
}

impl OmciMessage {
    pub fn is_extended(&self) -> bool {
        self.routing.is_some()
    }

    /// Value of the content length field.
    pub fn content_len(&self) -> usize {
        self.content.len() + if self.is_extended() { ROUTING_LEN } else { 0 }
    }

    pub fn serialized_len(&self) -> usize {
        OMCI_HEADER_LEN + LEN_FIELD + self.content_len() + OMCI_MIC_LEN
    }

    /// Same message with routing bytes removed.
    pub fn to_standard(&self) -> OmciMessage {
        OmciMessage { routing: None, ..self.clone() }
    }

    pub fn with_routing(&self, routing: Routing) -> OmciMessage {
        OmciMessage { routing: Some(routing), ..self.clone() }
    }
}

pub fn encode_omci(msg: &OmciMessage) -> Result<Vec<u8>, FrameError> {
    let clen = msg.content_len();
    if clen > u16::MAX as usize {
        return Err(FrameError::Oversize(clen));
    }
    let mut out = Vec::with_capacity(msg.serialized_len());
    let h = &msg.header;
    let flags = (h.device_flags & !OMCI_FLAG_EXTENDED) | if msg.is_extended() { OMCI_FLAG_EXTENDED } else { 0 };
    out.extend_from_slice(&h.transaction_id.to_be_bytes());
    out.push(h.msg_type);
    out.push(flags);
    out.extend_from_slice(&h.entity_class.to_be_bytes());
    out.extend_from_slice(&h.entity_instance.to_be_bytes());
    out.extend_from_slice(&(clen as u16).to_be_bytes());
    out.extend_from_slice(&msg.content);
    if let Some(r) = msg.routing {
        out.push(r.mfu_port_id);
        out.push(r.sfu_id);
    }
    let mic = crc32fast::hash(&out);
    out.extend_from_slice(&mic.to_be_bytes());
    Ok(out)
}

pub fn decode_omci(buf: &[u8]) -> Result<OmciMessage, FrameError> {
    need(buf, OMCI_HEADER_LEN + LEN_FIELD + OMCI_MIC_LEN)?;
    let clen = be16(&buf[OMCI_HEADER_LEN..]) as usize;
    let total = OMCI_HEADER_LEN + LEN_FIELD + clen + OMCI_MIC_LEN;
    if buf.len() != total {
        return Err(FrameError::LengthMismatch { declared: total, actual: buf.len() });
    }
    let body = &buf[..total - OMCI_MIC_LEN];
    if crc32fast::hash(body) != be32(&buf[total - OMCI_MIC_LEN..]) {
        return Err(FrameError::Integrity);
    }
    let flags = buf[3];
    let header = OmciHeader {
        transaction_id: be16(&buf[0..]),
        msg_type: buf[2],
        device_flags: flags & !OMCI_FLAG_EXTENDED,
        entity_class: be16(&buf[4..]),
        entity_instance: be16(&buf[6..]),
    };
    let content = &body[OMCI_HEADER_LEN + LEN_FIELD..];
    let (content, routing) = if flags & OMCI_FLAG_EXTENDED != 0 {
        if content.len() < ROUTING_LEN {
            return Err(FrameError::LengthMismatch { declared: ROUTING_LEN, actual: content.len() });
        }
        let (app, r) = content.split_at(content.len() - ROUTING_LEN);
        (app, Some(Routing { mfu_port_id: r[0], sfu_id: r[1] }))
    } else {
        (content, None)
    };
    Ok(OmciMessage { header, content: content.to_vec(), routing })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> OmciHeader {
        OmciHeader { transaction_id: 0x1234, msg_type: MsgType::Set.request(), device_flags: 0x0A, entity_class: 2, entity_instance: 1 }
    }

    #[test]
    fn extended_layout_is_26_bytes() {
        let m = OmciMessage { header: header(), content: (0..10).collect(), routing: Some(Routing { mfu_port_id: 3, sfu_id: 7 }) };
        let b = encode_omci(&m).unwrap();
        assert_eq!(m.content_len(), 12);
        assert_eq!(b.len(), 8 + 2 + 12 + 4);
        assert_eq!(&b[8..10], &[0, 12]);
        assert_eq!(&b[20..22], &[3, 7]);
        assert_eq!(b[3], 0x0A | OMCI_FLAG_EXTENDED);
        assert_eq!(decode_omci(&b).unwrap(), m);
    }

    #[test]
    fn standard_empty_is_14_bytes() {
        let m = OmciMessage { header: header(), content: vec![], routing: None };
        let b = encode_omci(&m).unwrap();
        assert_eq!(b.len(), 14);
        assert_eq!(decode_omci(&b).unwrap(), m);
    }

    #[test]
    fn every_single_bit_flip_rejected() {
        let m = OmciMessage { header: header(), content: (0..10).collect(), routing: Some(Routing { mfu_port_id: 3, sfu_id: 7 }) };
        let b = encode_omci(&m).unwrap();
        for i in 0..b.len() * 8 {
            let mut c = b.clone();
            c[i / 8] ^= 1 << (i % 8);
            assert!(decode_omci(&c).is_err(), "bit {i}");
        }
    }

    #[test]
    fn routing_strip_and_append_are_inverse() {
        let m = OmciMessage { header: header(), content: vec![1, 2, 3], routing: None };
        let r = Routing { mfu_port_id: 1, sfu_id: 4 };
        assert_eq!(m.with_routing(r).to_standard(), m);
        assert_eq!(m.with_routing(r).content, m.content);
    }

    #[test]
    fn length_mismatch_is_framing_error() {
        let m = OmciMessage { header: header(), content: vec![1, 2, 3], routing: None };
        let mut b = encode_omci(&m).unwrap();
        b.push(0);
        assert!(matches!(decode_omci(&b), Err(FrameError::LengthMismatch { .. })));
    }
}

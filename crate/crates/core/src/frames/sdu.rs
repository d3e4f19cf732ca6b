use serde::{Deserialize, Serialize};

use super::{be16, be32, be64, need, FrameError};
use crate::sim::{NodeId, SimTime};

/// Number of data classification queues (one per priority level).
pub const NUM_DATA_TAGS: u8 = 8;
/// Reserved queue for control-class SDUs and FMCI/WMCI data units. It is
/// always drained before the data queues.
pub const MGMT_TAG: u8 = 8;

/// Serialized APDU header: target(2) tag(1) priority(1) class(1) flow(4)
/// created_at(8) payload_len(4).
pub const APDU_HEADER_LEN: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceClass {
    Control,
    Video,
    Gaming,
    Iot,
    Background,
}

impl ServiceClass {
    pub const ALL: [ServiceClass; 5] = [
        ServiceClass::Control,
        ServiceClass::Video,
        ServiceClass::Gaming,
        ServiceClass::Iot,
        ServiceClass::Background,
    ];

    pub fn code(self) -> u8 {
        match self {
            ServiceClass::Control => 0,
            ServiceClass::Video => 1,
            ServiceClass::Gaming => 2,
            ServiceClass::Iot => 3,
            ServiceClass::Background => 4,
        }
    }

    pub fn from_code(code: u8) -> Result<Self, FrameError> {
        Self::ALL
            .get(code as usize)
            .copied()
            .ok_or(FrameError::UnknownCode { what: "service class", code })
    }

    pub fn name(self) -> &'static str {
        match self {
            ServiceClass::Control => "control",
            ServiceClass::Video => "video",
            ServiceClass::Gaming => "gaming",
            ServiceClass::Iot => "iot",
            ServiceClass::Background => "background",
        }
    }
}

/// A service data unit entering the convergence sublayer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sdu {
    pub dest: NodeId,
    pub payload_len: u32,
    pub priority: u8,
    pub service_class: ServiceClass,
    pub created_at: SimTime,
    pub flow_id: u32,
}

impl Sdu {
    pub fn validate(&self) -> Result<(), FrameError> {
        if self.payload_len == 0 {
            return Err(FrameError::InvalidSdu("payload_len must be at least 1"));
        }
        if self.priority > 7 {
            return Err(FrameError::InvalidSdu("priority must be in 0..=7"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Apdu {
    pub inner: Sdu,
    pub target_node: NodeId,
    pub classification_tag: u8,
}

/// Queue tag for a `(priority, class)` pair. Tag 0 is the most urgent data
/// queue; control-class traffic goes to [`MGMT_TAG`].
pub fn classification_tag(priority: u8, class: ServiceClass) -> u8 {
    match class {
        ServiceClass::Control => MGMT_TAG,
        _ => 7 - priority.min(7),
    }
}

/// Map an SDU onto an APDU addressed to its destination node.
pub fn encapsulate_sdu(sdu: Sdu, known_nodes: &[NodeId]) -> Result<Apdu, FrameError> {
    sdu.validate()?;
    if !known_nodes.contains(&sdu.dest) {
        return Err(FrameError::UnknownDestination(sdu.dest));
    }
    Ok(Apdu {
        target_node: sdu.dest,
        classification_tag: classification_tag(sdu.priority, sdu.service_class),
        inner: sdu,
    })
}

impl Apdu {
    pub fn serialized_len(&self) -> usize {
        APDU_HEADER_LEN + self.inner.payload_len as usize
    }

    /// Serialize header plus `payload_len` bytes of zero filler; the
    /// simulator does not carry application bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        out.extend_from_slice(&self.target_node.0.to_be_bytes());
        out.push(self.classification_tag);
        out.push(self.inner.priority);
        out.push(self.inner.service_class.code());
        out.extend_from_slice(&self.inner.flow_id.to_be_bytes());
        out.extend_from_slice(&self.inner.created_at.0.to_be_bytes());
        out.extend_from_slice(&self.inner.payload_len.to_be_bytes());
        out.resize(self.serialized_len(), 0);
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Apdu, FrameError> {
        need(buf, APDU_HEADER_LEN)?;
        let target_node = NodeId(be16(&buf[0..]));
        let classification_tag = buf[2];
        let priority = buf[3];
        let service_class = ServiceClass::from_code(buf[4])?;
        let flow_id = be32(&buf[5..]);
        let created_at = SimTime(be64(&buf[9..]));
        let payload_len = be32(&buf[17..]);
        let actual = buf.len() - APDU_HEADER_LEN;
        if actual != payload_len as usize {
            return Err(FrameError::LengthMismatch { declared: payload_len as usize, actual });
        }
        let sdu = Sdu { dest: target_node, payload_len, priority, service_class, created_at, flow_id };
        sdu.validate()?;
        if classification_tag != super::classification_tag(priority, service_class) {
            return Err(FrameError::UnknownCode { what: "classification tag", code: classification_tag });
        }
        Ok(Apdu { inner: sdu, target_node, classification_tag })
    }
}

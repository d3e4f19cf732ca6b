//! Management payloads carried inside FEM frames on the fiber, and the LLC
//! queue item that becomes one FEM frame.

use crate::frames::{
    build_fem_frame, decode_omci, encode_omci, Apdu, FemFrame, FemKind, FemUnit, FrameError, OmciMessage, Sdu,
    WireLen, FEM_HEADER_LEN,
};
use crate::scheduling::{AirGrant, GrantReason, RuAllocation};
use crate::sim::{NodeId, SimTime};

use super::flows::Packet;

/// WMCI message type for an airtime grant.
pub const WMCI_GRANT: u8 = 0x01;
/// Fixed part of a grant message: type, sfu, start, duration, reason,
/// flags, RU count.
pub const WMCI_GRANT_FIXED: usize = 1 + 2 + 8 + 4 + 1 + 1 + 1;
/// Station id (2) and RU bytes (4).
pub const WMCI_RU_LEN: usize = 6;
/// Bit 0 of the grant flags: the uplink slot is pre-reserved.
pub const GRANT_FLAG_ANCHORED: u8 = 0x01;

/// Airtime grant as sent to an SFU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrantMsg {
    pub grant: AirGrant,
    pub anchored: bool,
    pub rus: Vec<RuAllocation>,
}

impl GrantMsg {
    pub fn encoded_len(&self) -> usize {
        WMCI_GRANT_FIXED + WMCI_RU_LEN * self.rus.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let g = &self.grant;
        let mut out = Vec::with_capacity(self.encoded_len());
        out.push(WMCI_GRANT);
        out.extend_from_slice(&g.sfu.0.to_be_bytes());
        out.extend_from_slice(&g.start.0.to_be_bytes());
        out.extend_from_slice(&(g.max_duration_ns as u32).to_be_bytes());
        out.push(match g.reason {
            GrantReason::Downlink => 0,
            GrantReason::UplinkTrigger => 1,
        });
        out.push(if self.anchored { GRANT_FLAG_ANCHORED } else { 0 });
        out.push(self.rus.len() as u8);
        for r in &self.rus {
            out.extend_from_slice(&(r.sta as u16).to_be_bytes());
            out.extend_from_slice(&(r.ru_bytes as u32).to_be_bytes());
        }
        out
    }

    pub fn decode(buf: &[u8]) -> Result<GrantMsg, FrameError> {
        if buf.len() < WMCI_GRANT_FIXED {
            return Err(FrameError::Truncated { need: WMCI_GRANT_FIXED, have: buf.len() });
        }
        if buf[0] != WMCI_GRANT {
            return Err(FrameError::UnknownCode { what: "WMCI type", code: buf[0] });
        }
        let sfu = NodeId(u16::from_be_bytes([buf[1], buf[2]]));
        let start = SimTime(u64::from_be_bytes(buf[3..11].try_into().expect("8 bytes")));
        let dur = u32::from_be_bytes(buf[11..15].try_into().expect("4 bytes")) as u64;
        let reason = match buf[15] {
            0 => GrantReason::Downlink,
            1 => GrantReason::UplinkTrigger,
            code => return Err(FrameError::UnknownCode { what: "grant reason", code }),
        };
        let anchored = buf[16] & GRANT_FLAG_ANCHORED != 0;
        let n = buf[17] as usize;
        let need = WMCI_GRANT_FIXED + n * WMCI_RU_LEN;
        if buf.len() != need {
            return Err(FrameError::LengthMismatch { declared: need, actual: buf.len() });
        }
        let rus = (0..n)
            .map(|i| {
                let r = &buf[WMCI_GRANT_FIXED + i * WMCI_RU_LEN..];
                RuAllocation {
                    sta: u16::from_be_bytes([r[0], r[1]]) as u32,
                    ru_bytes: u32::from_be_bytes([r[2], r[3], r[4], r[5]]) as u64,
                }
            })
            .collect();
        Ok(GrantMsg { grant: AirGrant { sfu, start, max_duration_ns: dur, reason }, anchored, rus })
    }
}

/// FMCI payload: target SFU (2 bytes) then the standard OMCI message.
pub fn encode_fmci(target: NodeId, msg: &OmciMessage) -> Vec<u8> {
    let mut out = target.0.to_be_bytes().to_vec();
    out.extend(encode_omci(msg).expect("standard OMCI message fits"));
    out
}

pub fn decode_fmci(buf: &[u8]) -> Result<(NodeId, OmciMessage), FrameError> {
    if buf.len() < 2 {
        return Err(FrameError::Truncated { need: 2, have: buf.len() });
    }
    Ok((NodeId(u16::from_be_bytes([buf[0], buf[1]])), decode_omci(&buf[2..])?))
}

/// One unit in the MFU's downstream LLC queues.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DownItem {
    Data(Packet),
    Omci { sfu: NodeId, msg: OmciMessage },
    Grant(GrantMsg),
}

impl DownItem {
    pub fn target(&self) -> NodeId {
        match self {
            DownItem::Data(p) => p.sfu,
            DownItem::Omci { sfu, .. } => *sfu,
            DownItem::Grant(g) => g.grant.sfu,
        }
    }

    pub fn to_fem(&self, seq: u16) -> Result<FemFrame, FrameError> {
        let unit = match self {
            DownItem::Data(p) => FemUnit::Apdu(Apdu {
                inner: Sdu {
                    dest: p.sfu,
                    payload_len: p.bytes,
                    priority: p.priority,
                    service_class: p.class,
                    created_at: p.created,
                    flow_id: p.flow,
                },
                target_node: p.sfu,
                classification_tag: p.tag,
            }),
            DownItem::Omci { sfu, msg } => FemUnit::Fmci(encode_fmci(*sfu, msg)),
            DownItem::Grant(g) => FemUnit::Wmci(g.encode()),
        };
        build_fem_frame(unit, seq)
    }

    /// Recover the item from a parsed FEM frame.
    pub fn from_fem(f: &FemFrame) -> Result<DownItem, FrameError> {
        match f.kind {
            FemKind::Apdu => {
                let a = Apdu::from_bytes(&f.payload)?;
                Ok(DownItem::Data(Packet {
                    id: 0,
                    flow: a.inner.flow_id,
                    sfu: a.target_node,
                    sta: 0,
                    bytes: a.inner.payload_len,
                    class: a.inner.service_class,
                    priority: a.inner.priority,
                    tag: a.classification_tag,
                    created: a.inner.created_at,
                    ready: a.inner.created_at,
                }))
            }
            FemKind::FmciDu => {
                let (sfu, msg) = decode_fmci(&f.payload)?;
                Ok(DownItem::Omci { sfu, msg })
            }
            FemKind::WmciDu => Ok(DownItem::Grant(GrantMsg::decode(&f.payload)?)),
        }
    }

    /// Whether `other`, recovered from the wire, carries the same content.
    /// Packet fields that never travel (id, station, hop time) are ignored.
    pub fn same_on_wire(&self, other: &DownItem) -> bool {
        match (self, other) {
            (DownItem::Data(a), DownItem::Data(b)) => {
                (a.flow, a.sfu, a.bytes, a.class, a.priority, a.tag, a.created)
                    == (b.flow, b.sfu, b.bytes, b.class, b.priority, b.tag, b.created)
            }
            _ => self == other,
        }
    }
}

impl WireLen for DownItem {
    fn wire_len(&self) -> usize {
        match self {
            DownItem::Data(p) => p.fiber_len(),
            DownItem::Omci { msg, .. } => FEM_HEADER_LEN + 2 + msg.serialized_len(),
            DownItem::Grant(g) => FEM_HEADER_LEN + g.encoded_len(),
        }
    }
}

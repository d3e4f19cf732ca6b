//! Byte-exact codecs for the in-premises DLL/PHY frame family and the
//! extended OMCI message. Everything here is a pure function of its input.
//!
//! Layouts are documented field by field in `FORMATS.md` at the repository
//! root. All multi-byte integers are big-endian.

mod fem;
mod mpdu;
mod omci;
mod pcs;
mod pma;
mod sdu;

pub use fem::{build_fem_frame, parse_fem_frame, FemFrame, FemKind, FemUnit, FEM_HEADER_LEN, FEM_MAX_PAYLOAD};
pub use mpdu::{aggregate_mpdu, DrrState, Mpdu, TagQueues, WireLen};
pub use omci::{
    decode_omci, encode_omci, MsgType, OmciHeader, OmciMessage, Routing, OMCI_FLAG_EXTENDED,
    OMCI_HEADER_LEN, OMCI_MIC_LEN,
};
pub use pcs::{
    build_pcs_frame, parse_pcs_frame, pcs_header_len, PcsFrame, PloamKind, PloamMsg, Tamap,
    TamapEntry, TamapError, TcontId, PLOAM_LEN, TAMAP_ENTRY_LEN,
};
pub use pma::{
    pma_decode, pma_encode, pma_encoded_len, pma_max_payload, pma_transform, Direction, FEC_DATA,
    FEC_PARITY,
};
pub use sdu::{
    classification_tag, encapsulate_sdu, Apdu, ServiceClass, Sdu, APDU_HEADER_LEN, MGMT_TAG,
    NUM_DATA_TAGS,
};

use thiserror::Error;

use crate::sim::NodeId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("unknown destination {0}")]
    UnknownDestination(NodeId),
    #[error("invalid SDU: {0}")]
    InvalidSdu(&'static str),
    #[error("payload of {0} bytes exceeds the 65535-byte length field")]
    Oversize(usize),
    #[error("empty payload")]
    EmptyPayload,
    #[error("truncated input: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("unknown {what} code {code:#04x}")]
    UnknownCode { what: &'static str, code: u8 },
    #[error("length field says {declared}, measured {actual}")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("header check failed")]
    HeaderCheck,
    #[error("message integrity check failed")]
    Integrity,
    #[error("FEC parity mismatch in block {0}")]
    Corrupted(usize),
    #[error("invalid time assignment map: {0}")]
    Tamap(#[from] TamapError),
}

pub(crate) fn need(buf: &[u8], n: usize) -> Result<(), FrameError> {
    if buf.len() < n {
        Err(FrameError::Truncated { need: n, have: buf.len() })
    } else {
        Ok(())
    }
}

pub(crate) fn be16(b: &[u8]) -> u16 {
    u16::from_be_bytes([b[0], b[1]])
}

pub(crate) fn be32(b: &[u8]) -> u32 {
    u32::from_be_bytes([b[0], b[1], b[2], b[3]])
}

pub(crate) fn be64(b: &[u8]) -> u64 {
    let mut a = [0u8; 8];
    a.copy_from_slice(&b[..8]);
    u64::from_be_bytes(a)
}

use serde::{Deserialize, Serialize};

use super::{be16, need, Apdu, FrameError};

/// kind(1) + sequence(2) + length(2).
pub const FEM_HEADER_LEN: usize = 5;
pub const FEM_MAX_PAYLOAD: usize = u16::MAX as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FemKind {
    Apdu,
    FmciDu,
    WmciDu,
}

impl FemKind {
    pub fn code(self) -> u8 {
        match self {
            FemKind::Apdu => 0x01,
            FemKind::FmciDu => 0x02,
            FemKind::WmciDu => 0x03,
        }
    }

    pub fn from_code(code: u8) -> Result<Self, FrameError> {
        match code {
            0x01 => Ok(FemKind::Apdu),
            0x02 => Ok(FemKind::FmciDu),
            0x03 => Ok(FemKind::WmciDu),
            _ => Err(FrameError::UnknownCode { what: "FEM kind", code }),
        }
    }
}

/// Units accepted by the LLC for FEM encapsulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FemUnit {
    Apdu(Apdu),
    Fmci(Vec<u8>),
    Wmci(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FemFrame {
    pub kind: FemKind,
    pub seq: u16,
    pub payload: Vec<u8>,
}

impl FemFrame {
    pub fn new(kind: FemKind, seq: u16, payload: Vec<u8>) -> Result<Self, FrameError> {
        if payload.is_empty() {
            return Err(FrameError::EmptyPayload);
        }
        if payload.len() > FEM_MAX_PAYLOAD {
            return Err(FrameError::Oversize(payload.len()));
        }
        Ok(FemFrame { kind, seq, payload })
    }

    pub fn serialized_len(&self) -> usize {
        FEM_HEADER_LEN + self.payload.len()
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.push(self.kind.code());
        out.extend_from_slice(&self.seq.to_be_bytes());
        out.extend_from_slice(&(self.payload.len() as u16).to_be_bytes());
        out.extend_from_slice(&self.payload);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        self.write_to(&mut out);
        out
    }
}

pub fn build_fem_frame(unit: FemUnit, seq: u16) -> Result<FemFrame, FrameError> {
    let (kind, payload) = match unit {
        FemUnit::Apdu(a) => {
            if a.serialized_len() > FEM_MAX_PAYLOAD {
                return Err(FrameError::Oversize(a.serialized_len()));
            }
            (FemKind::Apdu, a.to_bytes())
        }
        FemUnit::Fmci(b) => (FemKind::FmciDu, b),
        FemUnit::Wmci(b) => (FemKind::WmciDu, b),
    };
    FemFrame::new(kind, seq, payload)
}

/// Parse one FEM frame from the front of `buf`, returning it and the number
/// of bytes consumed.
pub fn parse_fem_frame(buf: &[u8]) -> Result<(FemFrame, usize), FrameError> {
    need(buf, FEM_HEADER_LEN)?;
    let kind = FemKind::from_code(buf[0])?;
    let seq = be16(&buf[1..]);
    let len = be16(&buf[3..]) as usize;
    if len == 0 {
        return Err(FrameError::EmptyPayload);
    }
    need(buf, FEM_HEADER_LEN + len)?;
    let payload = buf[FEM_HEADER_LEN..FEM_HEADER_LEN + len].to_vec();
    Ok((FemFrame { kind, seq, payload }, FEM_HEADER_LEN + len))
}

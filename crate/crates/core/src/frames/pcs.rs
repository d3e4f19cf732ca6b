use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{be16, be32, be64, need, FrameError, Mpdu};
use crate::sim::{NodeId, SimTime};

/// kind(1) + target(2) + arg(4).
pub const PLOAM_LEN: usize = 7;
/// sfu(2) + offset(4) + duration(4) + tcont(2).
pub const TAMAP_ENTRY_LEN: usize = 12;
const TAMAP_FIXED_LEN: usize = 8 + 4 + 2;

/// Transmission container identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TcontId(pub u16);

impl TcontId {
    /// The dedicated management container shared by all SFUs.
    pub const OMCI: TcontId = TcontId(0);

    /// Data container of an SFU.
    pub fn data(sfu: NodeId) -> TcontId {
        TcontId(0x100 + sfu.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PloamKind {
    Register,
    RangingGrant,
    SleepAllow,
    WakeCommand,
    DeepSleepCommand,
}

impl PloamKind {
    pub const ALL: [PloamKind; 5] = [
        PloamKind::Register,
        PloamKind::RangingGrant,
        PloamKind::SleepAllow,
        PloamKind::WakeCommand,
        PloamKind::DeepSleepCommand,
    ];

    pub fn code(self) -> u8 {
        match self {
            PloamKind::Register => 0x01,
            PloamKind::RangingGrant => 0x02,
            PloamKind::SleepAllow => 0x10,
            PloamKind::WakeCommand => 0x11,
            PloamKind::DeepSleepCommand => 0x12,
        }
    }

    pub fn from_code(code: u8) -> Result<Self, FrameError> {
        Self::ALL
            .into_iter()
            .find(|k| k.code() == code)
            .ok_or(FrameError::UnknownCode { what: "PLOAM kind", code })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PloamMsg {
    pub kind: PloamKind,
    pub target_sfu: NodeId,
    pub arg: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TamapEntry {
    pub sfu: NodeId,
    pub offset_ns: u32,
    pub duration_ns: u32,
    pub tcont: TcontId,
}

impl TamapEntry {
    pub fn end_ns(&self) -> u64 {
        self.offset_ns as u64 + self.duration_ns as u64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TamapError {
    #[error("entries {0} and {1} overlap")]
    Overlap(usize, usize),
    #[error("entry {0} extends past the end of the cycle")]
    OutOfCycle(usize),
    #[error("entry {0} has zero duration")]
    ZeroDuration(usize),
    #[error("expected exactly one OMCI entry, found {0}")]
    OmciSlots(usize),
    #[error("too many entries ({0})")]
    TooMany(usize),
}

/// Upstream slot map for one allocation cycle. Offsets are relative to
/// `cycle_start`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tamap {
    pub cycle_start: SimTime,
    pub cycle_len_ns: u32,
    pub entries: Vec<TamapEntry>,
}

impl Tamap {
    pub fn empty() -> Self {
        Tamap::default()
    }

    /// A map with no entries carries no allocation and is valid. A non-empty
    /// map must have exactly one OMCI entry and pairwise disjoint entries
    /// inside the cycle.
    pub fn validate(&self) -> Result<(), TamapError> {
        if self.entries.is_empty() {
            return Ok(());
        }
        if self.entries.len() > u16::MAX as usize {
            return Err(TamapError::TooMany(self.entries.len()));
        }
        for (i, e) in self.entries.iter().enumerate() {
            if e.duration_ns == 0 {
                return Err(TamapError::ZeroDuration(i));
            }
            if e.end_ns() > self.cycle_len_ns as u64 {
                return Err(TamapError::OutOfCycle(i));
            }
        }
        let omci = self.entries.iter().filter(|e| e.tcont == TcontId::OMCI).count();
        if omci != 1 {
            return Err(TamapError::OmciSlots(omci));
        }
        let mut order: Vec<usize> = (0..self.entries.len()).collect();
        order.sort_by_key(|&i| (self.entries[i].offset_ns, i));
        for w in order.windows(2) {
            let (a, b) = (&self.entries[w[0]], &self.entries[w[1]]);
            if a.end_ns() > b.offset_ns as u64 {
                return Err(TamapError::Overlap(w[0].min(w[1]), w[0].max(w[1])));
            }
        }
        Ok(())
    }

    pub fn serialized_len(&self) -> usize {
        TAMAP_FIXED_LEN + TAMAP_ENTRY_LEN * self.entries.len()
    }

    pub fn entry_for(&self, sfu: NodeId) -> impl Iterator<Item = &TamapEntry> {
        self.entries.iter().filter(move |e| e.sfu == sfu)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PcsFrame {
    pub ploam: Vec<PloamMsg>,
    pub tamap: Tamap,
    pub payload: Mpdu,
}

/// Serialized PCS header length for a given PLOAM count and TAMap size.
pub fn pcs_header_len(ploam_count: usize, tamap_entries: usize) -> usize {
    1 + PLOAM_LEN * ploam_count + TAMAP_FIXED_LEN + TAMAP_ENTRY_LEN * tamap_entries + 4 + 4
}

pub fn build_pcs_frame(mpdu: Mpdu, ploam: Vec<PloamMsg>, tamap: Tamap) -> Result<PcsFrame, FrameError> {
    tamap.validate()?;
    if ploam.len() > u8::MAX as usize {
        return Err(FrameError::Oversize(ploam.len()));
    }
    Ok(PcsFrame { ploam, tamap, payload: mpdu })
}

impl PcsFrame {
    pub fn header_len(&self) -> usize {
        pcs_header_len(self.ploam.len(), self.tamap.entries.len())
    }

    pub fn serialized_len(&self) -> usize {
        self.header_len() + self.payload.total_len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        out.push(self.ploam.len() as u8);
        for p in &self.ploam {
            out.push(p.kind.code());
            out.extend_from_slice(&p.target_sfu.0.to_be_bytes());
            out.extend_from_slice(&p.arg.to_be_bytes());
        }
        out.extend_from_slice(&self.tamap.cycle_start.0.to_be_bytes());
        out.extend_from_slice(&self.tamap.cycle_len_ns.to_be_bytes());
        out.extend_from_slice(&(self.tamap.entries.len() as u16).to_be_bytes());
        for e in &self.tamap.entries {
            out.extend_from_slice(&e.sfu.0.to_be_bytes());
            out.extend_from_slice(&e.offset_ns.to_be_bytes());
            out.extend_from_slice(&e.duration_ns.to_be_bytes());
            out.extend_from_slice(&e.tcont.0.to_be_bytes());
        }
        out.extend_from_slice(&(self.payload.total_len() as u32).to_be_bytes());
        let check = crc32fast::hash(&out);
        out.extend_from_slice(&check.to_be_bytes());
        out.extend_from_slice(&self.payload.to_bytes());
        out
    }
}

pub fn parse_pcs_frame(buf: &[u8]) -> Result<PcsFrame, FrameError> {
    need(buf, 1)?;
    let nploam = buf[0] as usize;
    let tamap_at = 1 + PLOAM_LEN * nploam;
    need(buf, tamap_at + TAMAP_FIXED_LEN)?;
    let nent = be16(&buf[tamap_at + 12..]) as usize;
    let hlen = pcs_header_len(nploam, nent);
    need(buf, hlen)?;
    let check = be32(&buf[hlen - 4..]);
    if crc32fast::hash(&buf[..hlen - 4]) != check {
        return Err(FrameError::HeaderCheck);
    }
    let mut ploam = Vec::with_capacity(nploam);
    for i in 0..nploam {
        let p = &buf[1 + i * PLOAM_LEN..];
        ploam.push(PloamMsg {
            kind: PloamKind::from_code(p[0])?,
            target_sfu: NodeId(be16(&p[1..])),
            arg: be32(&p[3..]),
        });
    }
    let cycle_start = SimTime(be64(&buf[tamap_at..]));
    let cycle_len_ns = be32(&buf[tamap_at + 8..]);
    let mut entries = Vec::with_capacity(nent);
    for i in 0..nent {
        let e = &buf[tamap_at + TAMAP_FIXED_LEN + i * TAMAP_ENTRY_LEN..];
        entries.push(TamapEntry {
            sfu: NodeId(be16(e)),
            offset_ns: be32(&e[2..]),
            duration_ns: be32(&e[6..]),
            tcont: TcontId(be16(&e[10..])),
        });
    }
    let tamap = Tamap { cycle_start, cycle_len_ns, entries };
    tamap.validate()?;
    let payload_len = be32(&buf[hlen - 8..]) as usize;
    let actual = buf.len() - hlen;
    if payload_len != actual {
        return Err(FrameError::LengthMismatch { declared: payload_len, actual });
    }
    let payload = Mpdu::parse(&buf[hlen..])?;
    Ok(PcsFrame { ploam, tamap, payload })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{FemFrame, FemKind};

    fn tamap() -> Tamap {
        Tamap {
            cycle_start: SimTime(1_000),
            cycle_len_ns: 125_000,
            entries: vec![
                TamapEntry { sfu: NodeId(1), offset_ns: 0, duration_ns: 2_000, tcont: TcontId::OMCI },
                TamapEntry { sfu: NodeId(1), offset_ns: 2_100, duration_ns: 10_000, tcont: TcontId::data(NodeId(1)) },
                TamapEntry { sfu: NodeId(2), offset_ns: 12_200, duration_ns: 10_000, tcont: TcontId::data(NodeId(2)) },
            ],
        }
    }

    #[test]
    fn minimal_frame_round_trip() {
        let f = build_pcs_frame(Mpdu::default(), vec![], Tamap::empty()).unwrap();
        let b = f.to_bytes();
        assert_eq!(b.len(), pcs_header_len(0, 0));
        let p = parse_pcs_frame(&b).unwrap();
        assert!(p.ploam.is_empty() && p.tamap.entries.is_empty() && p.payload.frames.is_empty());
    }

    #[test]
    fn ploam_order_preserved() {
        let msgs = vec![
            PloamMsg { kind: PloamKind::WakeCommand, target_sfu: NodeId(3), arg: 1 },
            PloamMsg { kind: PloamKind::Register, target_sfu: NodeId(1), arg: 2 },
            PloamMsg { kind: PloamKind::DeepSleepCommand, target_sfu: NodeId::BROADCAST, arg: 3 },
        ];
        let mpdu = Mpdu { frames: vec![FemFrame::new(FemKind::Apdu, 7, vec![9; 30]).unwrap()] };
        let f = build_pcs_frame(mpdu, msgs.clone(), tamap()).unwrap();
        let p = parse_pcs_frame(&f.to_bytes()).unwrap();
        assert_eq!(p.ploam, msgs);
        assert_eq!(p, f);
    }

    #[test]
    fn every_single_header_byte_flip_detected() {
        let f = build_pcs_frame(Mpdu::default(), vec![PloamMsg { kind: PloamKind::SleepAllow, target_sfu: NodeId(2), arg: 0 }], tamap()).unwrap();
        let b = f.to_bytes();
        let hlen = f.header_len();
        for i in 0..hlen {
            for mask in [0x01u8, 0x80, 0xFF, 0x5A] {
                let mut c = b.clone();
                c[i] ^= mask;
                assert!(parse_pcs_frame(&c).is_err(), "flip at {i} mask {mask:#x} not detected");
            }
        }
    }

    #[test]
    fn invalid_tamap_refused() {
        let mut t = tamap();
        t.entries[2].offset_ns = 12_000; // overlaps entry 1
        assert!(matches!(build_pcs_frame(Mpdu::default(), vec![], t), Err(FrameError::Tamap(TamapError::Overlap(1, 2)))));
        let mut t = tamap();
        t.entries[2].duration_ns = 200_000;
        assert!(matches!(t.validate(), Err(TamapError::OutOfCycle(2))));
        let mut t = tamap();
        t.entries[0].tcont = TcontId::data(NodeId(1));
        assert!(matches!(t.validate(), Err(TamapError::OmciSlots(0))));
    }
}

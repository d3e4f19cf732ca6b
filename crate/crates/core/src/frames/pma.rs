//! Medium attachment stage: block parity at an RS(255,239)-style rate
//! followed by a frame-synchronous additive scrambler.
//!
//! Parity is a deterministic 16-byte check (four seeded CRC-32s) per block of
//! up to 239 data bytes. It detects corruption but does not correct it.

use std::sync::OnceLock;

use super::FrameError;

pub const FEC_DATA: usize = 239;
pub const FEC_PARITY: usize = 16;
const PARITY_SEEDS: [u32; 4] = [0x0000_0000, 0x5A5A_5A5A, 0xC3C3_C3C3, 0x0F1E_2D3C];
// x^7 + x^6 + 1 has period 127 bits, so the byte keystream repeats every 127 bytes.
const KEYSTREAM_LEN: usize = 127;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Encode,
    Decode,
}

fn keystream() -> &'static [u8; KEYSTREAM_LEN] {
    static KS: OnceLock<[u8; KEYSTREAM_LEN]> = OnceLock::new();
    KS.get_or_init(|| {
        let mut state: u8 = 0x7F;
        let mut ks = [0u8; KEYSTREAM_LEN];
        for byte in ks.iter_mut() {
            let mut b = 0u8;
            for _ in 0..8 {
                let out = ((state >> 6) ^ (state >> 5)) & 1;
                state = ((state << 1) | out) & 0x7F;
                b = (b << 1) | out;
            }
            *byte = b;
        }
        ks
    })
}

fn scramble(buf: &mut [u8]) {
    let ks = keystream();
    for chunk in buf.chunks_mut(KEYSTREAM_LEN) {
        for (b, k) in chunk.iter_mut().zip(ks.iter()) {
            *b ^= k;
        }
    }
}

fn parity(block: &[u8]) -> [u8; FEC_PARITY] {
    let mut out = [0u8; FEC_PARITY];
    for (i, seed) in PARITY_SEEDS.iter().enumerate() {
        let mut h = crc32fast::Hasher::new_with_initial(*seed);
        h.update(block);
        out[i * 4..i * 4 + 4].copy_from_slice(&h.finalize().to_be_bytes());
    }
    out
}

/// Encoded size of `n` data bytes (the last block is shortened).
pub fn pma_encoded_len(n: usize) -> usize {
    n + FEC_PARITY * n.div_ceil(FEC_DATA)
}

/// Largest data length whose encoding fits in `capacity` bytes.
pub fn pma_max_payload(capacity: usize) -> usize {
    let full = capacity / (FEC_DATA + FEC_PARITY);
    let rem = capacity % (FEC_DATA + FEC_PARITY);
    full * FEC_DATA + rem.saturating_sub(FEC_PARITY)
}

pub fn pma_encode(data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(pma_encoded_len(data.len()));
    for block in data.chunks(FEC_DATA) {
        out.extend_from_slice(block);
        out.extend_from_slice(&parity(block));
    }
    scramble(&mut out);
    out
}

pub fn pma_decode(wire: &[u8]) -> Result<Vec<u8>, FrameError> {
    let mut buf = wire.to_vec();
    scramble(&mut buf);
    let mut out = Vec::with_capacity(buf.len());
    for (i, cw) in buf.chunks(FEC_DATA + FEC_PARITY).enumerate() {
        if cw.len() <= FEC_PARITY {
            return Err(FrameError::Corrupted(i));
        }
        let (data, par) = cw.split_at(cw.len() - FEC_PARITY);
        if parity(data) != par {
            return Err(FrameError::Corrupted(i));
        }
        out.extend_from_slice(data);
    }
    Ok(out)
}

pub fn pma_transform(bytes: &[u8], direction: Direction) -> Result<Vec<u8>, FrameError> {
    match direction {
        Direction::Encode => Ok(pma_encode(bytes)),
        Direction::Decode => pma_decode(bytes),
    }
}

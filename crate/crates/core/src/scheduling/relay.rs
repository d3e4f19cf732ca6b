use crate::links::Rate;

/// Bytes of digitized baseband for a burst of `air_ns`, with I/Q folded into
/// `bit_width`. Exact when the product is a whole number of bytes; rounds up
/// otherwise.
pub fn relay_buffer_bytes(air_ns: u64, sample_rate_hz: u64, bit_width: u32) -> u64 {
    let bits = air_ns as u128 * sample_rate_hz as u128 * bit_width as u128;
    bits.div_ceil(8 * 1_000_000_000) as u64
}

/// Upstream slot needed to move `bytes` of baseband at the optical rate.
pub fn relay_slot_ns(bytes: u64, upstream: Rate) -> u64 {
    upstream.tx_time_ns(bytes as usize)
}

/// Baseband store at a relay SFU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelayBuffer {
    pub capacity: u64,
    pub used: u64,
    pub overflows: u64,
    pub peak: u64,
}

impl RelayBuffer {
    pub fn new(capacity: u64) -> Self {
        RelayBuffer { capacity, used: 0, overflows: 0, peak: 0 }
    }

    /// Store a burst, or count an overflow and refuse it.
    pub fn admit(&mut self, bytes: u64) -> bool {
        if self.used + bytes > self.capacity {
            self.overflows += 1;
            return false;
        }
        self.used += bytes;
        self.peak = self.peak.max(self.used);
        true
    }

    pub fn release(&mut self, bytes: u64) {
        self.used = self.used.saturating_sub(bytes);
    }
}

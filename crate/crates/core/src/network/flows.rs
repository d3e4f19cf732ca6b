use crate::config::{Arrival, FlowConfig};
use crate::frames::{classification_tag, ServiceClass, WireLen, APDU_HEADER_LEN, FEM_HEADER_LEN};
use crate::sim::{NodeId, RngStream, SimTime};

/// Bytes a data packet adds on the fiber on top of its payload.
pub const DATA_ENCAP_LEN: usize = FEM_HEADER_LEN + APDU_HEADER_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Direction {
    Down,
    Up,
}

/// One application frame moving through the network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub id: u64,
    pub flow: u32,
    pub sfu: NodeId,
    pub sta: u32,
    pub bytes: u32,
    pub class: ServiceClass,
    pub priority: u8,
    pub tag: u8,
    pub created: SimTime,
    /// When the packet last became ready at its current hop.
    pub ready: SimTime,
}

impl Packet {
    pub fn fiber_len(&self) -> usize {
        DATA_ENCAP_LEN + self.bytes as usize
    }

    /// Wi-Fi queue index: control traffic shares the most urgent data queue.
    pub fn air_tag(&self) -> u8 {
        if self.class == ServiceClass::Control {
            0
        } else {
            self.tag
        }
    }
}

impl WireLen for Packet {
    fn wire_len(&self) -> usize {
        self.fiber_len()
    }
}

/// Packet as held in a Wi-Fi queue, measured by payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AirPkt(pub Packet);

impl WireLen for AirPkt {
    fn wire_len(&self) -> usize {
        self.0.bytes as usize
    }
}

/// Lazily generated arrival process of one flow.
#[derive(Debug, Clone)]
pub struct FlowGen {
    pub id: u32,
    pub name: String,
    pub dir: Direction,
    pub sfu: NodeId,
    pub sta: u32,
    pub class: ServiceClass,
    pub priority: u8,
    pub tag: u8,
    pub size: u32,
    arrival: Arrival,
    stop: SimTime,
    rng: RngStream,
    next: Option<SimTime>,
    /// Start of the current on period or batch.
    phase_start: SimTime,
    phase_end: SimTime,
    k: u64,
    batch_left: u32,
    batch_idx: u64,
}

impl FlowGen {
    pub fn new(id: u32, cfg: &FlowConfig, dir: Direction, sfu: NodeId, seed: u64, horizon: SimTime) -> Self {
        let start = SimTime::from_millis(cfg.start_ms);
        let stop = cfg.stop_ms.map(SimTime::from_millis).unwrap_or(horizon).min(horizon);
        let mut g = FlowGen {
            id,
            name: cfg.name.clone(),
            dir,
            sfu,
            sta: cfg.sta,
            class: cfg.class,
            priority: cfg.priority,
            tag: classification_tag(cfg.priority, cfg.class),
            size: cfg.size_bytes,
            arrival: cfg.arrival,
            stop,
            rng: RngStream::new(seed, 0x1000 + id as u64),
            next: None,
            phase_start: start,
            phase_end: start,
            k: 0,
            batch_left: 0,
            batch_idx: 0,
        };
        g.next = match g.arrival {
            Arrival::Constant { .. } => Some(start),
            Arrival::OnOff { on_ms, .. } => {
                let on = g.period(on_ms);
                g.phase_end = start + on;
                Some(start)
            }
            Arrival::Batch { count, .. } => {
                g.batch_left = count;
                Some(start)
            }
        };
        g.clip();
        g
    }

    fn period(&mut self, mean_ms: u64) -> u64 {
        let ns = mean_ms * 1_000_000;
        match self.arrival {
            Arrival::OnOff { random: true, .. } => {
                let u = self.rng.unit_f64();
                (-(ns as f64) * (1.0 - u).ln()).round().max(1.0) as u64
            }
            _ => ns,
        }
    }

    fn spacing(&self, rate_bps: u64, k: u64) -> u64 {
        (k as u128 * self.size as u128 * 8_000_000_000 / rate_bps as u128) as u64
    }

    fn clip(&mut self) {
        if self.next.is_some_and(|t| t >= self.stop) {
            self.next = None;
        }
    }

    pub fn peek(&self) -> Option<SimTime> {
        self.next
    }

    /// Consume the pending arrival and compute the following one.
    pub fn advance(&mut self) {
        let Some(_) = self.next else { return };
        self.next = match self.arrival {
            Arrival::Constant { rate_bps } => {
                self.k += 1;
                Some(self.phase_start + self.spacing(rate_bps, self.k))
            }
            Arrival::OnOff { rate_bps, on_ms, off_ms, .. } => {
                self.k += 1;
                let t = self.phase_start + self.spacing(rate_bps, self.k);
                if t < self.phase_end {
                    Some(t)
                } else {
                    let off = self.period(off_ms);
                    let on = self.period(on_ms);
                    self.phase_start = self.phase_end + off;
                    self.phase_end = self.phase_start + on;
                    self.k = 0;
                    Some(self.phase_start)
                }
            }
            Arrival::Batch { count, every_ms } => {
                self.batch_left -= 1;
                if self.batch_left > 0 {
                    self.next
                } else if let Some(every) = every_ms {
                    self.batch_idx += 1;
                    self.batch_left = count;
                    Some(self.phase_start + self.batch_idx * every * 1_000_000)
                } else {
                    None
                }
            }
        };
        self.clip();
    }
}

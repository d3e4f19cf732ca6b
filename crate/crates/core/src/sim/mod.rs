//! Discrete-event engine.
//!
//! Time is an integer nanosecond count. Events are ordered by
//! `(fire_time, seq)` where `seq` is the insertion counter, so two events at
//! the same instant are dispatched in the order they were scheduled.

mod rng;

pub use rng::RngStream;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Simulated time in nanoseconds since the start of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_nanos(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us * 1_000)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000_000)
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e9
    }

    pub fn saturating_sub(self, other: SimTime) -> u64 {
        self.0.saturating_sub(other.0)
    }
}

impl std::ops::Add<u64> for SimTime {
    type Output = SimTime;
    fn add(self, ns: u64) -> SimTime {
        SimTime(self.0 + ns)
    }
}

impl std::ops::AddAssign<u64> for SimTime {
    fn add_assign(&mut self, ns: u64) {
        self.0 += ns;
    }
}

impl std::ops::Sub for SimTime {
    type Output = u64;
    fn sub(self, other: SimTime) -> u64 {
        self.0 - other.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ns", self.0)
    }
}

/// Identifier of a simulated node. The MFU is conventionally node 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u16);

impl NodeId {
    pub const MFU: NodeId = NodeId(0);
    pub const OLT: NodeId = NodeId(0xFFFE);
    /// Shadow single-gateway FTTH reference used for energy comparison.
    pub const GATEWAY: NodeId = NodeId(0xFFFD);
    pub const BROADCAST: NodeId = NodeId(0xFFFF);
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NodeId::MFU => write!(f, "mfu"),
            NodeId::OLT => write!(f, "olt"),
            NodeId::GATEWAY => write!(f, "ftth_gw"),
            NodeId::BROADCAST => write!(f, "bcast"),
            NodeId(n) => write!(f, "sfu{n}"),
        }
    }
}

/// Payloads carried by events must name their kind for the trace digest.
pub trait EventKind {
    fn kind(&self) -> &'static str;
}

/// Handle returned by [`Scheduler::schedule`], usable for cancellation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventId(u64);

#[derive(Debug, Clone)]
pub struct Event<P> {
    pub fire_time: SimTime,
    pub seq: u64,
    pub target: NodeId,
    pub payload: P,
}

struct Queued<P>(Event<P>);

impl<P> PartialEq for Queued<P> {
    fn eq(&self, other: &Self) -> bool {
        self.0.seq == other.0.seq
    }
}

impl<P> Eq for Queued<P> {}

impl<P> PartialOrd for Queued<P> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<P> Ord for Queued<P> {
    // BinaryHeap is a max-heap; invert so the earliest (time, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.0.fire_time, other.0.seq).cmp(&(self.0.fire_time, self.0.seq))
    }
}

/// Counters backing the event-conservation invariant.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventStats {
    pub scheduled: u64,
    pub dispatched: u64,
    pub cancelled: u64,
    pub beyond_horizon: u64,
}

impl EventStats {
    pub fn conserved(&self) -> bool {
        self.scheduled == self.dispatched + self.cancelled + self.beyond_horizon
    }
}

/// Hex-encoded SHA-256 over the ordered `(time, target, kind)` dispatch trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TraceDigest(pub String);

/// Receives dispatched events. Implemented by the simulated world.
pub trait Handler<P> {
    fn handle(&mut self, sched: &mut Scheduler<P>, event: Event<P>);
}

pub struct Scheduler<P> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Queued<P>>,
    live: HashSet<u64>,
    cancelled: HashSet<u64>,
    stats: EventStats,
    hasher: Sha256,
    horizon: SimTime,
}

impl<P: EventKind> Default for Scheduler<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P: EventKind> Scheduler<P> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
            live: HashSet::new(),
            cancelled: HashSet::new(),
            stats: EventStats::default(),
            hasher: Sha256::new(),
            horizon: SimTime::MAX,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// The horizon of the current (or last) `run_until` call.
    pub fn horizon(&self) -> SimTime {
        self.horizon
    }

    pub fn stats(&self) -> EventStats {
        self.stats
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Enqueue `payload` for `target` at `at`.
    ///
    /// Scheduling into the past is a logic error in the caller and aborts.
    pub fn schedule(&mut self, at: SimTime, target: NodeId, payload: P) -> EventId {
        assert!(
            at >= self.now,
            "causality violation: scheduling {} event for {target} at {at} while clock is {}",
            payload.kind(),
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.stats.scheduled += 1;
        self.live.insert(seq);
        self.queue.push(Queued(Event { fire_time: at, seq, target, payload }));
        EventId(seq)
    }

    pub fn schedule_in(&mut self, delay_ns: u64, target: NodeId, payload: P) -> EventId {
        let at = self.now + delay_ns;
        self.schedule(at, target, payload)
    }

    /// Cancel a pending event. Cancelling an already dispatched or cancelled
    /// event is a no-op and returns false.
    pub fn cancel(&mut self, id: EventId) -> bool {
        if !self.live.remove(&id.0) {
            return false;
        }
        self.cancelled.insert(id.0);
        true
    }

    /// Dispatch every event with `fire_time <= horizon` in `(fire_time, seq)`
    /// order. Events left in the queue are counted as beyond the horizon and
    /// the clock is left at `horizon`.
    pub fn run_until<H: Handler<P>>(&mut self, horizon: SimTime, handler: &mut H) -> TraceDigest {
        self.horizon = horizon;
        while let Some(head) = self.queue.peek() {
            if head.0.fire_time > horizon {
                break;
            }
            let Queued(ev) = self.queue.pop().expect("peeked");
            self.live.remove(&ev.seq);
            if self.cancelled.remove(&ev.seq) {
                self.stats.cancelled += 1;
                continue;
            }
            debug_assert!(ev.fire_time >= self.now);
            self.now = ev.fire_time;
            self.stats.dispatched += 1;
            self.hasher.update(ev.fire_time.0.to_be_bytes());
            self.hasher.update(ev.target.0.to_be_bytes());
            self.hasher.update(ev.payload.kind().as_bytes());
            self.hasher.update([0u8]);
            handler.handle(self, ev);
        }
        self.now = self.now.max(horizon);
        // Whatever is left never fires within this run.
        self.stats.beyond_horizon =
            self.queue.iter().filter(|q| !self.cancelled.contains(&q.0.seq)).count() as u64;
        TraceDigest(hex::encode(self.hasher.clone().finalize()))
    }

    /// Final statistics including cancelled events still sitting in the queue.
    pub fn final_stats(&self) -> EventStats {
        let queued_cancelled =
            self.queue.iter().filter(|q| self.cancelled.contains(&q.0.seq)).count() as u64;
        EventStats {
            cancelled: self.stats.cancelled + queued_cancelled,
            beyond_horizon: self.stats.beyond_horizon,
            ..self.stats
        }
    }
}

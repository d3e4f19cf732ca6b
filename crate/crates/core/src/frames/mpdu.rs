use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{parse_fem_frame, FemFrame, FrameError, MGMT_TAG, NUM_DATA_TAGS};

/// Anything the LLC can queue: it only needs to know its serialized size.
pub trait WireLen {
    fn wire_len(&self) -> usize;
}

impl WireLen for FemFrame {
    fn wire_len(&self) -> usize {
        self.serialized_len()
    }
}

/// Per-tag FIFO queues: data tags `0..NUM_DATA_TAGS` plus the management tag.
#[derive(Debug, Clone)]
pub struct TagQueues<T> {
    queues: Vec<VecDeque<T>>,
    bytes: Vec<usize>,
}

impl<T> Default for TagQueues<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> TagQueues<T> {
    pub fn new() -> Self {
        let n = NUM_DATA_TAGS as usize + 1;
        TagQueues { queues: (0..n).map(|_| VecDeque::new()).collect(), bytes: vec![0; n] }
    }

    pub fn is_empty(&self) -> bool {
        self.queues.iter().all(|q| q.is_empty())
    }

    pub fn len(&self) -> usize {
        self.queues.iter().map(|q| q.len()).sum()
    }

    pub fn queue(&self, tag: u8) -> &VecDeque<T> {
        &self.queues[tag as usize]
    }

    pub fn queued_bytes(&self) -> usize {
        self.bytes.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u8, &T)> {
        self.queues.iter().enumerate().flat_map(|(t, q)| q.iter().map(move |x| (t as u8, x)))
    }

    /// Remove every queued item, in tag order.
    pub fn drain_all(&mut self) -> Vec<(u8, T)> {
        let mut out = Vec::new();
        for (t, q) in self.queues.iter_mut().enumerate() {
            out.extend(q.drain(..).map(|x| (t as u8, x)));
            self.bytes[t] = 0;
        }
        out
    }
}

impl<T: WireLen> TagQueues<T> {
    pub fn push(&mut self, tag: u8, item: T) {
        let t = (tag as usize).min(self.queues.len() - 1);
        self.bytes[t] += item.wire_len();
        self.queues[t].push_back(item);
    }

    fn pop(&mut self, tag: usize) -> Option<T> {
        let item = self.queues[tag].pop_front()?;
        self.bytes[tag] -= item.wire_len();
        Some(item)
    }

    pub fn pop_front(&mut self, tag: u8) -> Option<T> {
        self.pop(tag as usize)
    }

    pub fn tag_bytes(&self, tag: u8) -> usize {
        self.bytes[tag as usize]
    }

    /// Lowest-numbered (most urgent) non-empty tag.
    pub fn first_nonempty(&self) -> Option<u8> {
        self.queues.iter().position(|q| !q.is_empty()).map(|t| t as u8)
    }
}

/// Weighted deficit round-robin state across the data tags. Deficits persist
/// between MPDUs so long-run shares follow the weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DrrState {
    weights: Vec<u32>,
    quantum: usize,
    deficits: Vec<usize>,
    cursor: usize,
    in_visit: bool,
}

impl DrrState {
    /// `weights[i]` applies to data tag `i`; missing tags get weight 1.
    pub fn new(weights: &[u32], quantum: usize) -> Self {
        let n = NUM_DATA_TAGS as usize;
        let mut w: Vec<u32> = weights.iter().copied().take(n).collect();
        w.resize(n, 1);
        DrrState { weights: w, quantum: quantum.max(1), deficits: vec![0; n], cursor: 0, in_visit: false }
    }

    /// Default: tag 0 weight 8 down to tag 7 weight 1, quantum of one
    /// Ethernet-sized FEM frame.
    pub fn default_weights() -> Self {
        DrrState::new(&[8, 7, 6, 5, 4, 3, 2, 1], 1540)
    }

    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Pull items within `budget` bytes: the management tag first, then data
    /// tags by deficit round-robin. Items are never split and stay FIFO
    /// within a tag.
    pub fn select<T: WireLen>(&mut self, queues: &mut TagQueues<T>, budget: usize) -> Vec<(u8, T)> {
        let mut out = Vec::new();
        let mut left = budget;
        let mgmt = MGMT_TAG as usize;
        while let Some(head) = queues.queues[mgmt].front() {
            if head.wire_len() > left {
                return out;
            }
            left -= head.wire_len();
            out.push((MGMT_TAG, queues.pop(mgmt).expect("head")));
        }
        let n = self.weights.len();
        loop {
            if (0..n).all(|t| queues.queues[t].is_empty() || self.weights[t] == 0) {
                self.deficits.iter_mut().for_each(|d| *d = 0);
                self.in_visit = false;
                return out;
            }
            let t = self.cursor;
            if queues.queues[t].is_empty() || self.weights[t] == 0 {
                self.deficits[t] = 0;
                self.advance();
                continue;
            }
            if !self.in_visit {
                self.deficits[t] += self.quantum * self.weights[t] as usize;
                self.in_visit = true;
            }
            while let Some(head) = queues.queues[t].front() {
                let len = head.wire_len();
                if len > self.deficits[t] {
                    break;
                }
                if len > left {
                    // Budget exhausted; resume this visit in the next MPDU.
                    return out;
                }
                self.deficits[t] -= len;
                left -= len;
                out.push((t as u8, queues.pop(t).expect("head")));
            }
            if queues.queues[t].is_empty() {
                self.deficits[t] = 0;
            }
            self.advance();
        }
    }

    fn advance(&mut self) {
        self.cursor = (self.cursor + 1) % self.weights.len();
        self.in_visit = false;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mpdu {
    pub frames: Vec<FemFrame>,
}

impl Mpdu {
    pub fn total_len(&self) -> usize {
        self.frames.iter().map(|f| f.serialized_len()).sum()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.total_len());
        for f in &self.frames {
            f.write_to(&mut out);
        }
        out
    }

    pub fn parse(mut buf: &[u8]) -> Result<Mpdu, FrameError> {
        let mut frames = Vec::new();
        while !buf.is_empty() {
            let (f, used) = parse_fem_frame(buf)?;
            frames.push(f);
            buf = &buf[used..];
        }
        Ok(Mpdu { frames })
    }
}

/// Build one MPDU of at most `budget` bytes from the tag queues.
pub fn aggregate_mpdu(queues: &mut TagQueues<FemFrame>, budget: usize, drr: &mut DrrState) -> Mpdu {
    let frames = drr.select(queues, budget).into_iter().map(|(_, f)| f).collect();
    Mpdu { frames }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::FemKind;

    fn frame(seq: u16, len: usize) -> FemFrame {
        FemFrame::new(FemKind::Apdu, seq, vec![0; len]).unwrap()
    }

    #[test]
    fn three_frames_fit_400_bytes() {
        let mut q = TagQueues::new();
        for i in 0..3 {
            q.push(0, frame(i, 100));
        }
        let mut drr = DrrState::new(&[1], 1540);
        let m = aggregate_mpdu(&mut q, 400, &mut drr);
        // 3 * (5 + 100) = 315 <= 400
        assert_eq!(m.frames.iter().map(|f| f.seq).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(m.total_len(), 315);
        assert!(q.is_empty());
    }

    #[test]
    fn budget_limits_and_never_splits() {
        let mut q = TagQueues::new();
        for i in 0..3 {
            q.push(0, frame(i, 100));
        }
        let mut drr = DrrState::new(&[1], 1540);
        let m = aggregate_mpdu(&mut q, 314, &mut drr);
        assert_eq!(m.frames.len(), 2);
        let m = aggregate_mpdu(&mut q, 314, &mut drr);
        assert_eq!(m.frames[0].seq, 2);
    }

    #[test]
    fn empty_queues_give_empty_mpdu() {
        let mut q = TagQueues::<FemFrame>::new();
        let m = aggregate_mpdu(&mut q, 1000, &mut DrrState::default_weights());
        assert_eq!(m.total_len(), 0);
        assert!(m.frames.is_empty());
    }

    #[test]
    fn weights_two_to_one_interleave() {
        // Hand simulation with quantum = frame size (105):
        // round 1: A deficit 210 -> A,A ; B deficit 105 -> B ; repeat.
        let mut q = TagQueues::new();
        for i in 0..10 {
            q.push(0, frame(i, 100));
            q.push(1, frame(100 + i, 100));
        }
        let mut drr = DrrState::new(&[2, 1], 105);
        let m = aggregate_mpdu(&mut q, 1 << 20, &mut drr);
        let tags: String =
            m.frames.iter().take(15).map(|f| if f.seq < 100 { 'A' } else { 'B' }).collect();
        assert_eq!(tags, "AAB".repeat(5));
        assert_eq!(m.frames.len(), 20);
    }

    #[test]
    fn management_tag_served_first() {
        let mut q = TagQueues::new();
        q.push(0, frame(1, 50));
        q.push(MGMT_TAG, FemFrame::new(FemKind::FmciDu, 2, vec![1; 10]).unwrap());
        let m = aggregate_mpdu(&mut q, 1000, &mut DrrState::default_weights());
        assert_eq!(m.frames[0].kind, FemKind::FmciDu);
    }

    #[test]
    fn mpdu_round_trip() {
        let m = Mpdu { frames: vec![frame(1, 3), frame(2, 7)] };
        assert_eq!(Mpdu::parse(&m.to_bytes()).unwrap(), m);
    }
}

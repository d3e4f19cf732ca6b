use std::collections::VecDeque;

/// Frames held at the MFU for a sleeping SFU. When full, the oldest frame
/// is dropped to make room.
#[derive(Debug, Clone)]
pub struct SleepBuffer<T> {
    capacity: usize,
    q: VecDeque<T>,
    pub dropped: u64,
    pub admitted: u64,
}

impl<T> SleepBuffer<T> {
    pub fn new(capacity_frames: usize) -> Self {
        SleepBuffer { capacity: capacity_frames, q: VecDeque::new(), dropped: 0, admitted: 0 }
    }

    /// Store a frame; returns the evicted frame on overflow.
    pub fn push(&mut self, item: T) -> Option<T> {
        self.admitted += 1;
        if self.capacity == 0 {
            self.dropped += 1;
            return Some(item);
        }
        let evicted = if self.q.len() >= self.capacity {
            self.dropped += 1;
            self.q.pop_front()
        } else {
            None
        };
        self.q.push_back(item);
        evicted
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Everything held, oldest first.
    pub fn flush(&mut self) -> Vec<T> {
        self.q.drain(..).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved_when_ample() {
        let mut b = SleepBuffer::new(16);
        for i in 0..10 {
            assert!(b.push(i).is_none());
        }
        assert_eq!(b.flush(), (0..10).collect::<Vec<_>>());
        assert_eq!(b.dropped, 0);
    }

    #[test]
    fn excess_equals_arrivals_minus_capacity() {
        for (arrivals, cap) in [(25usize, 10usize), (10, 10), (3, 10), (7, 0)] {
            let mut b = SleepBuffer::new(cap);
            for i in 0..arrivals {
                b.push(i);
            }
            assert_eq!(b.dropped as usize, arrivals.saturating_sub(cap));
            let kept = b.flush();
            assert_eq!(kept, (arrivals.saturating_sub(cap)..arrivals).collect::<Vec<_>>());
        }
    }
}

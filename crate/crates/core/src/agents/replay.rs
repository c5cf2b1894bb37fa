use alloc::vec::Vec;

use rand::Rng;

use super::SacRecord;

/// Fixed-capacity FIFO transition store.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    slots: Vec<SacRecord>,
    /// Slot the next record overwrites once full.
    head: usize,
    pushed: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            slots: Vec::with_capacity(capacity),
            head: 0,
            pushed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total records ever pushed.
    pub fn pushed(&self) -> u64 {
        self.pushed
    }

    pub fn push(&mut self, record: SacRecord) {
        if self.slots.len() < self.capacity {
            self.slots.push(record);
        } else {
            self.slots[self.head] = record;
            self.head = (self.head + 1) % self.capacity;
        }
        self.pushed += 1;
    }

    /// Records from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &SacRecord> {
        let (newer, older) = self.slots.split_at(self.head);
        older.iter().chain(newer.iter())
    }

    pub fn get(&self, i: usize) -> &SacRecord {
        &self.slots[i]
    }

    /// `n` slot indices drawn uniformly with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<usize> {
        assert!(!self.is_empty(), "sampling from an empty replay buffer");
        (0..n).map(|_| rng.random_range(0..self.slots.len())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rec(i: usize) -> SacRecord {
        SacRecord {
            obs: vec![i as f64],
            action: [0.0; 3],
            reward: i as f64,
            next_obs: vec![i as f64 + 1.0],
            done: false,
        }
    }

    #[test]
    fn evicts_oldest_first() {
        let mut buf = ReplayBuffer::new(4);
        for i in 0..11 {
            buf.push(rec(i));
            assert!(buf.len() <= 4);
        }
        let rewards: Vec<f64> = buf.iter().map(|r| r.reward).collect();
        assert_eq!(rewards, vec![7.0, 8.0, 9.0, 10.0]);
        assert_eq!(buf.pushed(), 11);
    }

    #[test]
    fn samples_stay_in_range() {
        let mut buf = ReplayBuffer::new(10);
        for i in 0..3 {
            buf.push(rec(i));
        }
        let mut rng = crate::rng::stream(1, 9);
        assert!(buf.sample_indices(&mut rng, 100).iter().all(|&i| i < 3));
    }
}

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};

/// `(s, a, r, s')` with states already featurized. `action` is a joint-action
/// index for the centralized learner and an own-side index otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
}

/// Bounded FIFO replay memory with uniform sampling (with replacement).
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T = TransitionRecord> {
    capacity: usize,
    records: VecDeque<T>,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            records: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends, evicting the oldest record when full.
    pub fn push(&mut self, record: T) {
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(record);
    }

    pub fn get(&self, i: usize) -> Option<&T> {
        self.records.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.records.iter()
    }

    pub fn sample_indices<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.records.len() < batch || batch == 0 {
            return Err(Error::BufferTooSmall {
                len: self.records.len(),
                requested: batch,
            });
        }
        Ok((0..batch)
            .map(|_| rng.gen_range(0..self.records.len()))
            .collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Vec<&T>> {
        Ok(self
            .sample_indices(batch, rng)?
            .into_iter()
            .map(|i| &self.records[i])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn evicts_oldest_at_capacity() {
        let mut buf = ReplayBuffer::new(10);
        for i in 0..15 {
            buf.push(i);
            assert!(buf.len() <= buf.capacity());
        }
        assert_eq!(buf.len(), 10);
        assert_eq!(
            buf.iter().copied().collect::<Vec<_>>(),
            (5..15).collect::<Vec<_>>()
        );
    }

    #[test]
    fn sampling_is_seeded() {
        let mut buf = ReplayBuffer::new(100);
        (0..50).for_each(|i| buf.push(i));
        let a = buf.sample_indices(32, &mut seeded(3)).unwrap();
        let b = buf.sample_indices(32, &mut seeded(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_small_buffer() {
        let mut buf = ReplayBuffer::new(8);
        buf.push(1);
        assert!(matches!(
            buf.sample_indices(2, &mut seeded(0)),
            Err(Error::BufferTooSmall {
                len: 1,
                requested: 2
            })
        ));
    }

    #[test]
    fn sampling_is_uniform() {
        let mut buf = ReplayBuffer::new(10);
        (0..10).for_each(|i| buf.push(i));
        let mut rng = seeded(4);
        let mut counts = [0usize; 10];
        let total = 100_000;
        for _ in 0..total / 10 {
            for &i in buf.sample(10, &mut rng).unwrap() {
                counts[i] += 1;
            }
        }
        for c in counts {
            assert!((c as f64 / total as f64 - 0.1).abs() <= 0.01, "{counts:?}");
        }
    }
}

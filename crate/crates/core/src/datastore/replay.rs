use crate::domain::{RandomStream, Transition};

/// FIFO ring buffer of online transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    /// Slot the next write goes to once the buffer is full.
    cursor: usize,
    written: u64,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 20)),
            cursor: 0,
            written: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Transitions ever written, including evicted ones.
    pub fn total_written(&self) -> u64 {
        self.written
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
            self.cursor = (self.cursor + 1) % self.capacity;
        }
        self.written += 1;
    }

    pub fn extend(&mut self, ts: impl IntoIterator<Item = Transition>) {
        for t in ts {
            self.push(t);
        }
    }

    /// The `i`-th oldest live transition.
    pub fn get(&self, i: usize) -> &Transition {
        let len = self.items.len();
        assert!(i < len, "replay index {i} out of range {len}");
        &self.items[(self.cursor + i) % len]
    }

    pub fn sample(&self, rng: &mut RandomStream) -> &Transition {
        &self.items[rng.below(self.items.len())]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        (0..self.items.len()).map(move |i| self.get(i))
    }
}

use crate::automata::{EventId, StateId};
use crate::policy::Rng;

/// One stored transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub state: StateId,
    pub action: EventId,
    pub reward: f64,
    pub next_state: StateId,
    /// Terminal transition (marked or deadlock). Horizon cutoffs are not done.
    pub done: bool,
    /// Events enabled at `next_state`; the target max only looks at these.
    pub next_enabled: Vec<EventId>,
}

/// Fixed-capacity ring buffer of experiences.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Experience>,
    next: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        ReplayBuffer { capacity, items: Vec::with_capacity(capacity.min(1 << 16)), next: 0 }
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

    /// Appends, overwriting the oldest item once full.
    pub fn push(&mut self, item: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[self.next] = item;
        }
        self.next = (self.next + 1) % self.capacity;
    }

    pub fn items(&self) -> &[Experience] {
        &self.items
    }

    /// Up to `batch` distinct items, uniformly at random.
    pub fn sample(&self, batch: usize, rng: &mut Rng) -> Vec<&Experience> {
        let k = batch.min(self.items.len());
        rng.sample_indices(self.items.len(), k).into_iter().map(|i| &self.items[i]).collect()
    }
}

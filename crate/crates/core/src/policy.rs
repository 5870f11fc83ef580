//! Action selection over partial Q-functions.
//!
//! [`epsilon_greedy`] is the plain exploration/exploitation switch.
//! [`controllable_epsilon_greedy`] is the training-time policy for models with
//! uncontrollable events: probability-specified uncontrollable events get a
//! chance to fire first, and exploitation only ever picks controllable events.
//! [`greedy_controllable`] is the deployment policy.

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::automata::{EventId, Fsm, StateId};
use crate::environment::{ActionSets, ProbMap};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error("no enabled actions at state {0}")]
    NoEnabledActions(StateId),
    /// Every candidate was a probability-specified uncontrollable event and
    /// none of them fired. The state is blocked for this tick.
    #[error("no action available at state {0} this tick")]
    NoActionAvailable(StateId),
    #[error("({state}, {event}) is not a defined transition")]
    UndefinedPair { state: StateId, event: EventId },
}

/// Seedable pseudo-random stream. Same seed, same stream.
#[derive(Debug, Clone)]
pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn seed_from(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform real in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.0.gen::<f64>()
    }

    /// Uniform integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n)
    }

    pub fn uniform_in(&mut self, low: f64, high: f64) -> f64 {
        self.0.gen_range(low..high)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.0);
    }

    pub fn choose<T: Copy>(&mut self, items: &[T]) -> Option<T> {
        items.choose(&mut self.0).copied()
    }

    /// `amount` distinct indices from `0..len`, in random order.
    pub fn sample_indices(&mut self, len: usize, amount: usize) -> Vec<usize> {
        rand::seq::index::sample(&mut self.0, len, amount).into_vec()
    }
}

/// Anything that can score a `(state, event)` pair.
pub trait QValues {
    fn q(&self, state: StateId, event: EventId) -> f64;
}

/// Partial map `(state, event) → value`, defined exactly on the transition
/// pairs of the model it was created from.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    num_states: usize,
    num_events: usize,
    cells: Vec<Option<f64>>,
}

impl QTable {
    /// Zero on every defined transition pair, undefined elsewhere.
    pub fn for_model(fsm: &Fsm) -> Self {
        let mut table = QTable::empty(fsm.num_states(), fsm.num_events());
        for t in fsm.transitions() {
            table.cells[t.source * table.num_events + t.event] = Some(0.0);
        }
        table
    }

    /// A table with no defined cells.
    pub fn empty(num_states: usize, num_events: usize) -> Self {
        QTable { num_states, num_events, cells: vec![None; num_states * num_events] }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_events(&self) -> usize {
        self.num_events
    }

    fn index(&self, state: StateId, event: EventId) -> Option<usize> {
        (state < self.num_states && event < self.num_events).then(|| state * self.num_events + event)
    }

    pub fn get(&self, state: StateId, event: EventId) -> Option<f64> {
        self.index(state, event).and_then(|i| self.cells[i])
    }

    pub fn is_defined(&self, state: StateId, event: EventId) -> bool {
        self.get(state, event).is_some()
    }

    /// Overwrites a defined cell.
    pub fn set(&mut self, state: StateId, event: EventId, value: f64) -> Result<(), PolicyError> {
        match self.index(state, event) {
            Some(i) if self.cells[i].is_some() => {
                self.cells[i] = Some(value);
                Ok(())
            }
            _ => Err(PolicyError::UndefinedPair { state, event }),
        }
    }

    /// Defines a cell, creating it if needed. Used when tabulating a
    /// function approximator or reading a table back from disk.
    pub fn define(&mut self, state: StateId, event: EventId, value: f64) {
        let i = self.index(state, event).expect("cell within table bounds");
        self.cells[i] = Some(value);
    }

    pub fn defined_cells(&self) -> impl Iterator<Item = (StateId, EventId, f64)> + '_ {
        self.cells.iter().enumerate().filter_map(move |(i, c)| {
            c.map(|v| (i / self.num_events, i % self.num_events, v))
        })
    }

    /// Largest defined value among `events` at `state`.
    pub fn max_over(&self, state: StateId, events: &[EventId]) -> Option<f64> {
        events
            .iter()
            .filter_map(|&e| self.get(state, e))
            .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }
}

impl QValues for QTable {
    fn q(&self, state: StateId, event: EventId) -> f64 {
        self.get(state, event).unwrap_or(0.0)
    }
}

/// Highest-valued event of `candidates`; ties go to the lowest event id.
pub fn argmax<Q: QValues + ?Sized>(q: &Q, state: StateId, candidates: &[EventId]) -> Option<EventId> {
    let mut best: Option<(EventId, f64)> = None;
    for &e in candidates {
        let v = q.q(state, e);
        match best {
            Some((b, bv)) if bv > v || (bv == v && b < e) => {}
            _ => best = Some((e, v)),
        }
    }
    best.map(|(e, _)| e)
}

/// Plain epsilon-greedy: draw `x`; exploit if `x > eps`, else pick uniformly.
pub fn epsilon_greedy<Q: QValues + ?Sized>(
    state: StateId,
    q: &Q,
    eps: f64,
    enabled: &[EventId],
    rng: &mut Rng,
) -> Result<EventId, PolicyError> {
    if enabled.is_empty() {
        return Err(PolicyError::NoEnabledActions(state));
    }
    let x = rng.uniform();
    if x > eps {
        Ok(argmax(q, state, enabled).expect("non-empty"))
    } else {
        Ok(enabled[rng.below(enabled.len())])
    }
}

/// Training-time policy for models with uncontrollable events.
///
/// Every enabled uncontrollable event with a specified probability draws
/// `ζ ∈ [0, 1)` and leaves the candidate pool. The draws are shuffled and
/// the first event with `ζ < P` fires. Otherwise, with controllable events
/// present, exploitation takes the best controllable event and exploration
/// picks uniformly from the remaining pool. Without controllable events the
/// pick is uniform from the remaining pool.
pub fn controllable_epsilon_greedy<Q: QValues + ?Sized>(
    state: StateId,
    q: &Q,
    eps: f64,
    actions: &ActionSets,
    probs: &ProbMap,
    rng: &mut Rng,
) -> Result<EventId, PolicyError> {
    if actions.all.is_empty() {
        return Err(PolicyError::NoEnabledActions(state));
    }
    let mut pool = actions.all.clone();
    let mut draws: Vec<(EventId, f64, f64)> = Vec::new();
    for &u in &actions.uncontrollable {
        if let Some(p) = probs.get(u) {
            draws.push((u, p, rng.uniform()));
            pool.retain(|&e| e != u);
        }
    }
    if !draws.is_empty() {
        rng.shuffle(&mut draws);
        if let Some(&(event, _, _)) = draws.iter().find(|(_, p, zeta)| zeta < p) {
            return Ok(event);
        }
    }

    if !actions.controllable.is_empty() {
        let x = rng.uniform();
        if x > eps {
            return Ok(argmax(q, state, &actions.controllable).expect("non-empty"));
        }
    }
    rng.choose(&pool).ok_or(PolicyError::NoActionAvailable(state))
}

/// Deployment policy: best controllable event, if any.
pub fn greedy_controllable<Q: QValues + ?Sized>(
    state: StateId,
    q: &Q,
    controllable: &[EventId],
) -> Option<EventId> {
    argmax(q, state, controllable)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<f64>);

    impl QValues for Fixed {
        fn q(&self, _: StateId, e: EventId) -> f64 {
            self.0[e]
        }
    }

    #[test]
    fn eps_zero_exploits() {
        let q = Fixed(vec![1.0, 2.0]);
        let mut rng = Rng::seed_from(1);
        for _ in 0..1000 {
            assert_eq!(epsilon_greedy(0, &q, 0.0, &[0, 1], &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let q = Fixed(vec![3.0; 4]);
        let mut rng = Rng::seed_from(2);
        for _ in 0..1000 {
            assert_eq!(epsilon_greedy(0, &q, 0.0, &[1, 2, 3], &mut rng).unwrap(), 1);
        }
        assert_eq!(argmax(&q, 0, &[3, 2]), Some(2));
    }

    #[test]
    fn eps_one_is_uniform() {
        let q = Fixed(vec![0.0, 100.0, 0.0]);
        let mut rng = Rng::seed_from(3);
        let n = 10_000;
        let mut counts = [0usize; 3];
        for _ in 0..n {
            counts[epsilon_greedy(0, &q, 1.0, &[0, 1, 2], &mut rng).unwrap()] += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn empty_enabled_set_errors() {
        let mut rng = Rng::seed_from(0);
        let q = Fixed(vec![]);
        assert_eq!(epsilon_greedy(4, &q, 0.5, &[], &mut rng), Err(PolicyError::NoEnabledActions(4)));
        assert_eq!(greedy_controllable(4, &q, &[]), None);
    }

    #[test]
    fn qtable_only_defined_on_transitions() {
        let mut t = QTable::empty(2, 2);
        assert_eq!(t.set(0, 0, 1.0), Err(PolicyError::UndefinedPair { state: 0, event: 0 }));
        t.define(0, 1, 2.5);
        assert_eq!(t.get(0, 1), Some(2.5));
        assert_eq!(t.get(5, 0), None);
        assert_eq!(t.max_over(0, &[0, 1]), Some(2.5));
        assert_eq!(t.max_over(1, &[0, 1]), None);
        assert_eq!(t.defined_cells().collect::<Vec<_>>(), [(0, 1, 2.5)]);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::seed_from(42);
        let mut b = Rng::seed_from(42);
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }
}

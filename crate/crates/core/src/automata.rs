//! Deterministic finite state machines over a controllability-partitioned
//! alphabet, and their synchronous composition.
//!
//! States and events are addressed by dense ids. Event ids follow the
//! alphabetical order of event names, so the same event set always yields the
//! same action indices. State ids follow declaration order for hand-built
//! machines and breadth-first discovery order for composed ones.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

pub type StateId = usize;
pub type EventId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("event `{0}` is declared twice")]
    DuplicateEvent(String),
    #[error("state `{0}` is declared twice")]
    DuplicateState(String),
    #[error("invalid event name `{0}`")]
    InvalidEventName(String),
    #[error("invalid state label `{0}`")]
    InvalidStateLabel(String),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("automaton `{0}` has no initial state")]
    MissingInitial(String),
    #[error("automaton `{automaton}` declares a second initial state `{state}`")]
    MultipleInitial { automaton: String, state: String },
    #[error("nondeterministic transitions from `{state}` on `{event}`")]
    Nondeterministic { state: String, event: String },
    #[error("event `{0}` is controllable in one component and uncontrollable in the other")]
    ControllabilityConflict(String),
    #[error("cannot compose an empty list of automata")]
    EmptyComposition,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    pub name: String,
    pub controllable: bool,
}

impl Event {
    pub fn controllable(name: impl Into<String>) -> Self {
        Event { name: name.into(), controllable: true }
    }

    pub fn uncontrollable(name: impl Into<String>) -> Self {
        Event { name: name.into(), controllable: false }
    }
}

/// A single `source -event-> target` edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Transition {
    pub source: StateId,
    pub event: EventId,
    pub target: StateId,
}

pub(crate) fn valid_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == '#' || c == '"')
}

/// A deterministic automaton `⟨Σ, Q, q°, Qω, →⟩`.
///
/// Values are immutable once built; every state is reachable from the
/// initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct Fsm {
    name: String,
    events: Vec<Event>,
    states: Vec<String>,
    initial: StateId,
    marked: Vec<bool>,
    // per source state, event id -> target
    delta: Vec<BTreeMap<EventId, StateId>>,
}

impl Fsm {
    pub fn builder(name: impl Into<String>) -> FsmBuilder {
        FsmBuilder::new(name)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn event(&self, id: EventId) -> &Event {
        &self.events[id]
    }

    pub fn event_id(&self, name: &str) -> Option<EventId> {
        self.events.binary_search_by(|e| e.name.as_str().cmp(name)).ok()
    }

    pub fn num_events(&self) -> usize {
        self.events.len()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.delta.iter().map(BTreeMap::len).sum()
    }

    pub fn state_labels(&self) -> &[String] {
        &self.states
    }

    pub fn state_label(&self, id: StateId) -> &str {
        &self.states[id]
    }

    pub fn state_id(&self, label: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == label)
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_marked(&self, state: StateId) -> bool {
        self.marked[state]
    }

    pub fn marked_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.marked.iter().enumerate().filter(|(_, m)| **m).map(|(i, _)| i)
    }

    pub fn target(&self, state: StateId, event: EventId) -> Option<StateId> {
        self.delta.get(state)?.get(&event).copied()
    }

    /// All transitions, ordered by source state then event id.
    pub fn transitions(&self) -> impl Iterator<Item = Transition> + '_ {
        self.delta.iter().enumerate().flat_map(|(source, out)| {
            out.iter().map(move |(&event, &target)| Transition { source, event, target })
        })
    }

    /// Outgoing `(event, target)` pairs of a state in alphabet order.
    pub fn outgoing(&self, state: StateId) -> impl Iterator<Item = (EventId, StateId)> + '_ {
        self.delta[state].iter().map(|(&e, &t)| (e, t))
    }

    /// Events with a defined transition from `state`, in alphabet order.
    pub fn enabled(&self, state: StateId) -> Result<Vec<EventId>, ModelError> {
        let out = self
            .delta
            .get(state)
            .ok_or_else(|| ModelError::UnknownState(state.to_string()))?;
        Ok(out.keys().copied().collect())
    }

    pub fn enabled_by_label(&self, label: &str) -> Result<Vec<&Event>, ModelError> {
        let id = self
            .state_id(label)
            .ok_or_else(|| ModelError::UnknownState(label.to_owned()))?;
        Ok(self.delta[id].keys().map(|&e| &self.events[e]).collect())
    }

    /// Copy of this machine with every event made controllable.
    pub fn with_all_controllable(&self) -> Fsm {
        let mut f = self.clone();
        for e in &mut f.events {
            e.controllable = true;
        }
        f
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Fsm {
        self.name = name.into();
        self
    }

    /// Runs an event sequence from the initial state. `None` if some event
    /// is not enabled along the way.
    pub fn run<'a, I>(&self, events: I) -> Option<StateId>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut s = self.initial;
        for name in events {
            s = self.target(s, self.event_id(name)?)?;
        }
        Some(s)
    }
}

impl fmt::Display for Fsm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} states, {} transitions",
            self.name,
            self.num_states(),
            self.num_transitions()
        )
    }
}

/// Incremental, name-based construction of an [`Fsm`].
///
/// `build` sorts the alphabet, checks determinism and drops states that are
/// not reachable from the initial state.
#[derive(Debug, Clone)]
pub struct FsmBuilder {
    name: String,
    events: Vec<Event>,
    states: Vec<(String, bool)>,
    initial: Option<usize>,
    transitions: Vec<(String, String, String)>,
}

impl FsmBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        FsmBuilder {
            name: name.into(),
            events: Vec::new(),
            states: Vec::new(),
            initial: None,
            transitions: Vec::new(),
        }
    }

    pub fn event(&mut self, name: &str, controllable: bool) -> Result<&mut Self, ModelError> {
        if !valid_token(name) {
            return Err(ModelError::InvalidEventName(name.to_owned()));
        }
        if self.events.iter().any(|e| e.name == name) {
            return Err(ModelError::DuplicateEvent(name.to_owned()));
        }
        self.events.push(Event { name: name.to_owned(), controllable });
        Ok(self)
    }

    pub fn state(&mut self, label: &str, initial: bool, marked: bool) -> Result<&mut Self, ModelError> {
        if !valid_token(label) {
            return Err(ModelError::InvalidStateLabel(label.to_owned()));
        }
        if self.states.iter().any(|(s, _)| s == label) {
            return Err(ModelError::DuplicateState(label.to_owned()));
        }
        if initial {
            if self.initial.is_some() {
                return Err(ModelError::MultipleInitial {
                    automaton: self.name.clone(),
                    state: label.to_owned(),
                });
            }
            self.initial = Some(self.states.len());
        }
        self.states.push((label.to_owned(), marked));
        Ok(self)
    }

    pub fn transition(&mut self, source: &str, event: &str, target: &str) -> Result<&mut Self, ModelError> {
        for s in [source, target] {
            if !self.states.iter().any(|(l, _)| l == s) {
                return Err(ModelError::UnknownState(s.to_owned()));
            }
        }
        if !self.events.iter().any(|e| e.name == event) {
            return Err(ModelError::UnknownEvent(event.to_owned()));
        }
        self.transitions.push((source.to_owned(), event.to_owned(), target.to_owned()));
        Ok(self)
    }

    /// Labels of declared states that `build` will drop as unreachable.
    pub fn unreachable_labels(&self) -> Vec<String> {
        match self.reachable() {
            Some(reach) => self
                .states
                .iter()
                .zip(reach)
                .filter(|(_, r)| !r)
                .map(|((l, _), _)| l.clone())
                .collect(),
            None => Vec::new(),
        }
    }

    fn reachable(&self) -> Option<Vec<bool>> {
        let init = self.initial?;
        let index: HashMap<&str, usize> =
            self.states.iter().enumerate().map(|(i, (l, _))| (l.as_str(), i)).collect();
        let mut adj = vec![Vec::new(); self.states.len()];
        for (s, _, t) in &self.transitions {
            adj[index[s.as_str()]].push(index[t.as_str()]);
        }
        let mut seen = vec![false; self.states.len()];
        seen[init] = true;
        let mut queue = VecDeque::from([init]);
        while let Some(s) = queue.pop_front() {
            for &t in &adj[s] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        Some(seen)
    }

    pub fn build(&self) -> Result<Fsm, ModelError> {
        let init = self.initial.ok_or_else(|| ModelError::MissingInitial(self.name.clone()))?;
        let reach = self.reachable().expect("initial present");

        let mut events = self.events.clone();
        events.sort();
        let event_index: HashMap<&str, EventId> =
            events.iter().enumerate().map(|(i, e)| (e.name.as_str(), i)).collect();

        let mut remap = vec![usize::MAX; self.states.len()];
        let mut states = Vec::new();
        let mut marked = Vec::new();
        for (old, ((label, m), r)) in self.states.iter().zip(&reach).enumerate() {
            if *r {
                remap[old] = states.len();
                states.push(label.clone());
                marked.push(*m);
            }
        }
        let state_index: HashMap<&str, usize> =
            self.states.iter().enumerate().map(|(i, (l, _))| (l.as_str(), i)).collect();

        let mut delta = vec![BTreeMap::new(); states.len()];
        for (s, e, t) in &self.transitions {
            let src = remap[state_index[s.as_str()]];
            if src == usize::MAX {
                continue;
            }
            let dst = remap[state_index[t.as_str()]];
            let ev = event_index[e.as_str()];
            if let Some(prev) = delta[src].insert(ev, dst) {
                if prev != dst {
                    return Err(ModelError::Nondeterministic { state: s.clone(), event: e.clone() });
                }
            }
        }

        Ok(Fsm {
            name: self.name.clone(),
            events,
            states,
            initial: remap[init],
            marked,
            delta,
        })
    }
}

fn merge_alphabets(a: &Fsm, b: &Fsm) -> Result<Vec<Event>, ModelError> {
    let mut merged: BTreeMap<&str, bool> = a.events.iter().map(|e| (e.name.as_str(), e.controllable)).collect();
    for e in &b.events {
        match merged.get(e.name.as_str()) {
            Some(&c) if c != e.controllable => {
                return Err(ModelError::ControllabilityConflict(e.name.clone()))
            }
            _ => {
                merged.insert(&e.name, e.controllable);
            }
        }
    }
    Ok(merged
        .into_iter()
        .map(|(n, c)| Event { name: n.to_owned(), controllable: c })
        .collect())
}

/// Synchronous composition `a ∥ b`, restricted to its reachable part.
///
/// Shared events fire only when both components can fire them; private
/// events interleave. Composite states are labelled `p.q` and numbered in
/// breadth-first order from `(q1°, q2°)`, exploring events in alphabet order.
pub fn compose(a: &Fsm, b: &Fsm) -> Result<Fsm, ModelError> {
    let events = merge_alphabets(a, b)?;
    // (id in a, id in b) for every event of the union
    let lookup: Vec<(Option<EventId>, Option<EventId>)> = events
        .iter()
        .map(|e| (a.event_id(&e.name), b.event_id(&e.name)))
        .collect();

    let start = (a.initial, b.initial);
    let mut index: HashMap<(StateId, StateId), StateId> = HashMap::from([(start, 0)]);
    let mut pairs = vec![start];
    let mut delta: Vec<BTreeMap<EventId, StateId>> = Vec::new();
    let mut queue = VecDeque::from([start]);

    while let Some((p, q)) = queue.pop_front() {
        let mut out = BTreeMap::new();
        for (ev, &(ea, eb)) in lookup.iter().enumerate() {
            let next = match (ea, eb) {
                (Some(x), Some(y)) => a.target(p, x).zip(b.target(q, y)),
                (Some(x), None) => a.target(p, x).map(|p2| (p2, q)),
                (None, Some(y)) => b.target(q, y).map(|q2| (p, q2)),
                (None, None) => unreachable!("event from neither alphabet"),
            };
            if let Some(pair) = next {
                let id = *index.entry(pair).or_insert_with(|| {
                    pairs.push(pair);
                    queue.push_back(pair);
                    pairs.len() - 1
                });
                out.insert(ev, id);
            }
        }
        delta.push(out);
    }

    let states = pairs
        .iter()
        .map(|&(p, q)| format!("{}.{}", a.states[p], b.states[q]))
        .collect();
    let marked = pairs.iter().map(|&(p, q)| a.marked[p] && b.marked[q]).collect();

    Ok(Fsm {
        name: format!("{}||{}", a.name, b.name),
        events,
        states,
        initial: 0,
        marked,
        delta,
    })
}

/// Left fold of [`compose`] over a non-empty list.
pub fn compose_all<'a, I>(machines: I) -> Result<Fsm, ModelError>
where
    I: IntoIterator<Item = &'a Fsm>,
{
    let mut iter = machines.into_iter();
    let first = iter.next().ok_or(ModelError::EmptyComposition)?;
    iter.try_fold(first.clone(), |acc, next| compose(&acc, next))
}

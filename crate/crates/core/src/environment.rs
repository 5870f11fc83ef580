//! The step/reset/render runtime built from a closed-loop automaton.
//!
//! States of the automaton are the MDP states, events are the actions, and
//! marked states are terminal. Transitions are deterministic: once an event
//! is chosen the next state is known. All randomness belongs to the policy.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::automata::{EventId, Fsm, StateId, Transition};
use crate::model_io::config::TrainingConfig;
use crate::model_io::dot::{export_dot, Decorations};

/// Reward assigned when an event is not listed.
pub const DEFAULT_REWARD: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("reward given for unknown event `{0}`")]
    UnknownRewardEvent(String),
    #[error("probability given for unknown event `{0}`")]
    UnknownProbabilityEvent(String),
    #[error("probability given for controllable event `{0}`")]
    ControllableProbability(String),
    #[error("probability {value} for `{event}` is outside [0, 1]")]
    ProbabilityOutOfRange { event: String, value: f64 },
    #[error("horizon must be positive")]
    ZeroHorizon,
    #[error("event id {0} is not in the alphabet")]
    UnknownAction(EventId),
    #[error("`{event}` is not enabled at state `{state}`")]
    DisabledAction { state: String, event: String },
    #[error("episode is over; call reset")]
    EpisodeOver,
}

/// Per-event reward, total over the alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardMap(Vec<f64>);

impl RewardMap {
    pub fn uniform(fsm: &Fsm, value: f64) -> Self {
        RewardMap(vec![value; fsm.num_events()])
    }

    /// Listed rewards by event name; everything else gets [`DEFAULT_REWARD`].
    pub fn from_named(fsm: &Fsm, listed: &BTreeMap<String, f64>) -> Result<Self, EnvError> {
        let mut map = RewardMap::uniform(fsm, DEFAULT_REWARD);
        for (name, &r) in listed {
            let id = fsm
                .event_id(name)
                .ok_or_else(|| EnvError::UnknownRewardEvent(name.clone()))?;
            map.0[id] = r;
        }
        Ok(map)
    }

    pub fn get(&self, event: EventId) -> f64 {
        self.0[event]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Trigger probabilities for uncontrollable events. Events without an entry
/// are "not specified".
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbMap(Vec<Option<f64>>);

impl ProbMap {
    pub fn unspecified(fsm: &Fsm) -> Self {
        ProbMap(vec![None; fsm.num_events()])
    }

    pub fn from_named(fsm: &Fsm, listed: &BTreeMap<String, f64>) -> Result<Self, EnvError> {
        let mut map = ProbMap::unspecified(fsm);
        for (name, &p) in listed {
            let id = fsm
                .event_id(name)
                .ok_or_else(|| EnvError::UnknownProbabilityEvent(name.clone()))?;
            if fsm.event(id).controllable {
                return Err(EnvError::ControllableProbability(name.clone()));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(EnvError::ProbabilityOutOfRange { event: name.clone(), value: p });
            }
            map.0[id] = Some(p);
        }
        Ok(map)
    }

    pub fn get(&self, event: EventId) -> Option<f64> {
        self.0.get(event).copied().flatten()
    }
}

/// Why an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// A marked state was entered with marked-state termination on.
    Marked,
    /// The new state has no enabled events.
    Deadlock,
    /// The step budget ran out. This is a cutoff, not an MDP terminal.
    Horizon,
}

impl Termination {
    pub fn is_terminal(self) -> bool {
        !matches!(self, Termination::Horizon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: StateId,
    pub reward: f64,
    pub done: bool,
    pub termination: Option<Termination>,
    pub info: BTreeMap<String, String>,
}

impl StepResult {
    /// Done because of a terminal state rather than the horizon.
    pub fn is_terminal(&self) -> bool {
        self.termination.is_some_and(Termination::is_terminal)
    }
}

/// Enabled events at a state, split by controllability. All three lists are
/// in alphabet order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActionSets {
    pub all: Vec<EventId>,
    pub controllable: Vec<EventId>,
    pub uncontrollable: Vec<EventId>,
}

impl ActionSets {
    pub fn at(fsm: &Fsm, state: StateId) -> Self {
        let mut sets = ActionSets::default();
        for (e, _) in fsm.outgoing(state) {
            sets.all.push(e);
            if fsm.event(e).controllable {
                sets.controllable.push(e);
            } else {
                sets.uncontrollable.push(e);
            }
        }
        sets
    }
}

/// `s0, a0, r0, s1, …, sn` of one episode.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeTrace {
    pub states: Vec<StateId>,
    pub actions: Vec<EventId>,
    pub rewards: Vec<f64>,
}

impl EpisodeTrace {
    pub fn starting_at(state: StateId) -> Self {
        EpisodeTrace { states: vec![state], ..Default::default() }
    }

    pub fn push(&mut self, action: EventId, reward: f64, next: StateId) {
        self.actions.push(action);
        self.rewards.push(reward);
        self.states.push(next);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// Each `(s_i, a_i)` is a transition of `fsm` leading to `s_{i+1}`.
    pub fn is_consistent_with(&self, fsm: &Fsm) -> bool {
        self.states.len() == self.actions.len() + 1
            && self.rewards.len() == self.actions.len()
            && self
                .actions
                .iter()
                .enumerate()
                .all(|(i, &a)| fsm.target(self.states[i], a) == Some(self.states[i + 1]))
    }
}

/// `Σ γ^i r_i`.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

pub fn episode_return(trace: &EpisodeTrace, gamma: f64) -> f64 {
    discounted_return(&trace.rewards, gamma)
}

/// A converted automaton ready for training.
#[derive(Debug, Clone)]
pub struct Environment {
    model: Fsm,
    rewards: RewardMap,
    probs: ProbMap,
    horizon: usize,
    terminate_on_marked: bool,
    current: StateId,
    step_count: usize,
    done: bool,
    last_transition: Option<Transition>,
    trace: EpisodeTrace,
}

impl Environment {
    pub fn new(
        model: Fsm,
        rewards: RewardMap,
        probs: ProbMap,
        horizon: usize,
        terminate_on_marked: bool,
    ) -> Result<Self, EnvError> {
        if horizon == 0 {
            return Err(EnvError::ZeroHorizon);
        }
        let initial = model.initial();
        Ok(Environment {
            model,
            rewards,
            probs,
            horizon,
            terminate_on_marked,
            current: initial,
            step_count: 0,
            done: false,
            last_transition: None,
            trace: EpisodeTrace::starting_at(initial),
        })
    }

    /// Rewards, probabilities, horizon and termination mode from a config.
    pub fn from_config(model: Fsm, config: &TrainingConfig) -> Result<Self, EnvError> {
        let rewards = RewardMap::from_named(&model, &config.rewards)?;
        let probs = ProbMap::from_named(&model, &config.probabilities)?;
        Environment::new(model, rewards, probs, config.horizon, config.terminate_on_marked)
    }

    pub fn model(&self) -> &Fsm {
        &self.model
    }

    pub fn rewards(&self) -> &RewardMap {
        &self.rewards
    }

    pub fn probabilities(&self) -> &ProbMap {
        &self.probs
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn current(&self) -> StateId {
        self.current
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn last_transition(&self) -> Option<Transition> {
        self.last_transition
    }

    /// Trace of the episode in progress.
    pub fn trace(&self) -> &EpisodeTrace {
        &self.trace
    }

    pub fn reset(&mut self) -> StepResult {
        self.current = self.model.initial();
        self.step_count = 0;
        self.done = false;
        self.last_transition = None;
        self.trace = EpisodeTrace::starting_at(self.current);
        let mut info = BTreeMap::new();
        info.insert("state".to_owned(), self.model.state_label(self.current).to_owned());
        StepResult { observation: self.current, reward: 0.0, done: false, termination: None, info }
    }

    pub fn action_sets(&self) -> ActionSets {
        ActionSets::at(&self.model, self.current)
    }

    /// Executes an enabled event. Disabled or unknown events are rejected
    /// and leave the environment untouched.
    pub fn step(&mut self, action: EventId) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        if action >= self.model.num_events() {
            return Err(EnvError::UnknownAction(action));
        }
        let target = self.model.target(self.current, action).ok_or_else(|| EnvError::DisabledAction {
            state: self.model.state_label(self.current).to_owned(),
            event: self.model.event(action).name.clone(),
        })?;

        let reward = self.rewards.get(action);
        self.last_transition = Some(Transition { source: self.current, event: action, target });
        self.current = target;
        self.step_count += 1;
        self.trace.push(action, reward, target);

        let deadlock = self.model.outgoing(target).next().is_none();
        let termination = self.termination(deadlock);
        self.done = termination.is_some();

        let event = self.model.event(action);
        let mut info = BTreeMap::new();
        info.insert("event".to_owned(), event.name.clone());
        info.insert("controllable".to_owned(), event.controllable.to_string());
        info.insert("state".to_owned(), self.model.state_label(target).to_owned());
        info.insert("deadlock".to_owned(), deadlock.to_string());

        Ok(StepResult { observation: target, reward, done: self.done, termination, info })
    }

    /// Lets one tick pass without any event firing. Used when the policy
    /// finds the current state blocked for this tick.
    pub fn wait(&mut self) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeOver);
        }
        self.step_count += 1;
        let termination = (self.step_count >= self.horizon).then_some(Termination::Horizon);
        self.done = termination.is_some();
        let mut info = BTreeMap::new();
        info.insert("state".to_owned(), self.model.state_label(self.current).to_owned());
        info.insert("blocked".to_owned(), "true".to_owned());
        Ok(StepResult { observation: self.current, reward: 0.0, done: self.done, termination, info })
    }

    fn termination(&self, deadlock: bool) -> Option<Termination> {
        if self.terminate_on_marked && self.model.is_marked(self.current) && self.step_count >= 1 {
            Some(Termination::Marked)
        } else if deadlock {
            Some(Termination::Deadlock)
        } else if self.step_count >= self.horizon {
            Some(Termination::Horizon)
        } else {
            None
        }
    }

    /// DOT view with the current state and last transition highlighted.
    pub fn render(&self) -> String {
        let decorations = Decorations { current: Some(self.current), last: self.last_transition };
        export_dot(&self.model, &decorations).expect("environment decorations are always valid")
    }
}

/// One row per executed tick: `episode,step,state,action,reward,done`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TraceLog {
    rows: Vec<TraceRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub episode: usize,
    pub step: usize,
    pub state: StateId,
    pub action: Option<EventId>,
    pub reward: f64,
    pub done: bool,
}

impl TraceLog {
    pub fn record(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    /// CSV text. `state` is the state the action was taken from; blocked
    /// ticks have an empty action.
    pub fn to_csv(&self, fsm: &Fsm) -> String {
        let mut out = String::from("episode,step,state,action,reward,done\n");
        for r in &self.rows {
            let action = r.action.map(|a| fsm.event(a).name.as_str()).unwrap_or("");
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.episode,
                r.step,
                fsm.state_label(r.state),
                action,
                r.reward,
                r.done
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain() -> Fsm {
        let mut b = Fsm::builder("chain");
        b.event("go", true).unwrap().event("fail", false).unwrap();
        b.state("s0", true, true).unwrap().state("s1", false, false).unwrap().state("s2", false, true).unwrap();
        b.transition("s0", "go", "s1").unwrap().transition("s1", "go", "s2").unwrap();
        b.transition("s1", "fail", "s0").unwrap();
        b.build().unwrap()
    }

    fn env(horizon: usize, marked: bool) -> Environment {
        let f = chain();
        let r = RewardMap::uniform(&f, -1.0);
        let p = ProbMap::unspecified(&f);
        Environment::new(f, r, p, horizon, marked).unwrap()
    }

    #[test]
    fn returns() {
        assert_eq!(discounted_return(&[-1.0, -1.0, 10.0], 1.0), 8.0);
        assert_eq!(discounted_return(&[3.5], 0.3), 3.5);
        assert!((discounted_return(&[-1.0, 10.0], 0.9) - 8.0).abs() < 1e-12);
    }

    #[test]
    fn reset_is_idempotent() {
        let mut e = env(5, false);
        let a = e.reset();
        e.step(1).unwrap();
        assert_eq!(e.reset(), a);
        assert_eq!(e.reset(), a);
        assert_eq!(a.observation, 0);
        assert_eq!(e.step_count(), 0);
        assert_eq!(e.last_transition(), None);
    }

    #[test]
    fn disabled_action_leaves_state_unchanged() {
        let mut e = env(5, false);
        e.reset();
        let err = e.step(0).unwrap_err();
        assert!(matches!(err, EnvError::DisabledAction { .. }));
        assert_eq!(e.current(), 0);
        assert_eq!(e.step_count(), 0);
        assert_eq!(e.step(9).unwrap_err(), EnvError::UnknownAction(9));
    }

    #[test]
    fn deadlock_ends_episode() {
        let mut e = env(10, false);
        e.reset();
        e.step(1).unwrap();
        let r = e.step(1).unwrap();
        assert!(r.done);
        assert_eq!(r.termination, Some(Termination::Deadlock));
        assert_eq!(r.info["deadlock"], "true");
        assert!(r.is_terminal());
        assert_eq!(e.step(1).unwrap_err(), EnvError::EpisodeOver);
        assert_eq!(e.reset().observation, 0);
    }

    #[test]
    fn horizon_is_a_cutoff() {
        let mut e = env(2, false);
        e.reset();
        e.step(1).unwrap();
        let r = e.step(0).unwrap();
        assert!(r.done);
        assert_eq!(r.termination, Some(Termination::Horizon));
        assert!(!r.is_terminal());
        assert_eq!(e.trace().len(), 2);
        assert!(e.trace().is_consistent_with(e.model()));
    }

    #[test]
    fn marked_termination_needs_a_step() {
        let mut e = env(10, true);
        assert!(!e.reset().done);
        e.step(1).unwrap();
        let r = e.step(0).unwrap();
        assert_eq!(r.termination, Some(Termination::Marked));
    }

    #[test]
    fn action_sets_partition() {
        let e = {
            let mut e = env(10, false);
            e.reset();
            e.step(1).unwrap();
            e
        };
        let sets = e.action_sets();
        assert_eq!(sets.all, [0, 1]);
        assert_eq!(sets.controllable, [1]);
        assert_eq!(sets.uncontrollable, [0]);
    }

    #[test]
    fn probability_validation() {
        let f = chain();
        let mut m = BTreeMap::new();
        m.insert("go".to_owned(), 0.5);
        assert_eq!(ProbMap::from_named(&f, &m), Err(EnvError::ControllableProbability("go".into())));
        m.clear();
        m.insert("fail".to_owned(), 1.5);
        assert!(matches!(ProbMap::from_named(&f, &m), Err(EnvError::ProbabilityOutOfRange { .. })));
        m.clear();
        m.insert("nope".to_owned(), 0.5);
        assert!(ProbMap::from_named(&f, &m).is_err());
    }

    #[test]
    fn wait_consumes_a_tick() {
        let mut e = env(1, false);
        e.reset();
        let r = e.wait().unwrap();
        assert!(r.done);
        assert_eq!(r.reward, 0.0);
        assert_eq!(e.current(), 0);
    }
}

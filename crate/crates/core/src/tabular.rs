//! Tabular Q-learning over an [`Environment`].

use crate::automata::{EventId, Fsm, StateId};
use crate::environment::{Environment, RewardMap, TraceLog, TraceRow};
use crate::error::TrainError;
use crate::model_io::config::TrainingConfig;
use crate::policy::{controllable_epsilon_greedy, PolicyError, QTable, Rng};

/// One Q-learning update:
/// `Q(s,a) ← Q(s,a) + α (r + γ·max_{a'} Q(s',a') − Q(s,a))`.
///
/// The bootstrap term is zero when `terminal` is set or nothing is enabled
/// at `next`. Returns the stored value.
#[allow(clippy::too_many_arguments)]
pub fn q_update(
    q: &mut QTable,
    state: StateId,
    action: EventId,
    reward: f64,
    next: StateId,
    enabled_next: &[EventId],
    alpha: f64,
    gamma: f64,
    terminal: bool,
) -> Result<f64, PolicyError> {
    let old = q.get(state, action).ok_or(PolicyError::UndefinedPair { state, event: action })?;
    let bootstrap = if terminal { 0.0 } else { q.max_over(next, enabled_next).unwrap_or(0.0) };
    let new = old + alpha * (reward + gamma * bootstrap - old);
    q.set(state, action, new)?;
    Ok(new)
}

#[derive(Debug, Clone)]
pub struct TabularRun {
    pub qtable: QTable,
    /// Undiscounted return of each episode.
    pub returns: Vec<f64>,
    /// How many times each cell was written, row-major like the table.
    pub update_counts: Vec<usize>,
    pub trace: TraceLog,
    pub config: TrainingConfig,
}

impl TabularRun {
    pub fn updates_at(&self, state: StateId, event: EventId) -> usize {
        self.update_counts[state * self.qtable.num_events() + event]
    }

    /// `(state, event)` cells written at least once.
    pub fn updated_cells(&self) -> Vec<(StateId, EventId)> {
        let n = self.qtable.num_events();
        self.update_counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(|(i, _)| (i / n, i % n))
            .collect()
    }
}

/// Trains with the controllable epsilon-greedy policy for `config.episodes`
/// episodes. Horizon cutoffs keep the bootstrap term; marked and deadlock
/// terminations drop it.
pub fn train_q(env: &mut Environment, config: &TrainingConfig) -> Result<TabularRun, TrainError> {
    config.validate().map_err(TrainError::Config)?;
    let mut rng = Rng::seed_from(config.seed);
    let mut q = QTable::for_model(env.model());
    let mut update_counts = vec![0usize; q.num_states() * q.num_events()];
    let mut returns = Vec::with_capacity(config.episodes);
    let mut trace = TraceLog::default();
    let probs = env.probabilities().clone();

    for episode in 0..config.episodes {
        env.reset();
        let mut total = 0.0;
        while !env.is_done() {
            let state = env.current();
            let actions = env.action_sets();
            if actions.all.is_empty() {
                // deadlocked initial state
                break;
            }
            let step = env.step_count();
            match controllable_epsilon_greedy(state, &q, config.epsilon, &actions, &probs, &mut rng) {
                Ok(action) => {
                    let result = env.step(action)?;
                    let enabled_next = env.model().enabled(result.observation).expect("valid state");
                    q_update(
                        &mut q,
                        state,
                        action,
                        result.reward,
                        result.observation,
                        &enabled_next,
                        config.alpha,
                        config.gamma,
                        result.is_terminal(),
                    )?;
                    update_counts[state * q.num_events() + action] += 1;
                    total += result.reward;
                    trace.record(TraceRow {
                        episode,
                        step,
                        state,
                        action: Some(action),
                        reward: result.reward,
                        done: result.done,
                    });
                }
                Err(PolicyError::NoActionAvailable(_)) => {
                    let result = env.wait()?;
                    trace.record(TraceRow { episode, step, state, action: None, reward: 0.0, done: result.done });
                }
                Err(e) => return Err(e.into()),
            }
        }
        returns.push(total);
    }

    Ok(TabularRun { qtable: q, returns, update_counts, trace, config: config.clone() })
}

pub const ORACLE_TOLERANCE: f64 = 1e-10;
pub const ORACLE_MAX_SWEEPS: usize = 1_000_000;

/// Exact fixed point of the Q-learning update on a deterministic model:
/// `Q(s,a) = r(a) + γ·max_{a'} Q(s',a')`, with zero continuation at
/// deadlocks and, if `marked_terminal`, at marked states.
///
/// Meant as an independent check of [`train_q`] on models whose events are
/// all controllable.
pub fn value_iteration_oracle(
    fsm: &Fsm,
    rewards: &RewardMap,
    gamma: f64,
    marked_terminal: bool,
) -> Result<QTable, TrainError> {
    let transitions: Vec<_> = fsm.transitions().collect();
    let terminal: Vec<bool> = (0..fsm.num_states())
        .map(|s| fsm.outgoing(s).next().is_none() || (marked_terminal && fsm.is_marked(s)))
        .collect();
    let mut q = QTable::for_model(fsm);
    let enabled: Vec<Vec<EventId>> = (0..fsm.num_states()).map(|s| fsm.enabled(s).expect("valid")).collect();

    for _ in 0..ORACLE_MAX_SWEEPS {
        let mut next = q.clone();
        let mut delta: f64 = 0.0;
        for t in &transitions {
            let cont = if terminal[t.target] { 0.0 } else { q.max_over(t.target, &enabled[t.target]).unwrap_or(0.0) };
            let v = rewards.get(t.event) + gamma * cont;
            delta = delta.max((v - q.get(t.source, t.event).expect("defined")).abs());
            next.set(t.source, t.event, v).expect("defined");
        }
        q = next;
        if delta < ORACLE_TOLERANCE {
            return Ok(q);
        }
    }
    Err(TrainError::NoConvergence(ORACLE_MAX_SWEEPS))
}

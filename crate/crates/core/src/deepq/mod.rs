//! Deep Q-learning with experience replay and a periodically synced target
//! network.

pub mod net;
pub mod replay;

use crate::automata::{EventId, Fsm, StateId};
use crate::environment::{Environment, TraceLog, TraceRow};
use crate::error::{NetError, TrainError};
use crate::model_io::config::TrainingConfig;
use crate::policy::{controllable_epsilon_greedy, PolicyError, QTable, Rng};

pub use net::{ApproxNet, StateValues};
pub use replay::{Experience, ReplayBuffer};

/// `r` at terminal transitions, otherwise `r + γ·max` of the target
/// network's outputs over the events enabled at `next`.
pub fn td_target(
    target: &ApproxNet,
    reward: f64,
    next: StateId,
    enabled_next: &[EventId],
    gamma: f64,
    done: bool,
) -> Result<f64, NetError> {
    if done || enabled_next.is_empty() {
        return Ok(reward);
    }
    let out = target.forward(next)?;
    let best = enabled_next.iter().map(|&e| out[e]).fold(f64::NEG_INFINITY, f64::max);
    Ok(reward + gamma * best)
}

/// Regression sample: push `Q(state, action)` towards `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub state: StateId,
    pub action: EventId,
    pub target: f64,
}

/// Mean squared TD error over the batch and its gradient with respect to
/// every parameter. Only the taken action's output carries gradient.
pub fn loss_and_gradient(net: &ApproxNet, batch: &[Regression]) -> Result<(f64, ApproxNet), NetError> {
    let mut grad = net.zeros_like();
    let mut loss = 0.0;
    let n = batch.len() as f64;
    let mut d_out = vec![0.0; net.num_actions()];
    for item in batch {
        let acts = net.forward_cached(item.state)?;
        let err = acts.output[item.action] - item.target;
        loss += err * err;
        d_out.iter_mut().for_each(|d| *d = 0.0);
        d_out[item.action] = 2.0 * err / n;
        net.backward(&acts, &d_out, &mut grad);
    }
    Ok((loss / n, grad))
}

/// One plain gradient-descent step on a replay batch. Returns the loss
/// before the step.
pub fn train_step(
    net: &mut ApproxNet,
    target: &ApproxNet,
    batch: &[&Experience],
    learning_rate: f64,
    gamma: f64,
) -> Result<f64, NetError> {
    let regressions = batch
        .iter()
        .map(|e| {
            Ok(Regression {
                state: e.state,
                action: e.action,
                target: td_target(target, e.reward, e.next_state, &e.next_enabled, gamma, e.done)?,
            })
        })
        .collect::<Result<Vec<_>, NetError>>()?;
    let (loss, grad) = loss_and_gradient(net, &regressions)?;
    net.add_scaled(-learning_rate, &grad);
    Ok(loss)
}

/// Copies the online parameters into the target network.
pub fn sync_target(net: &ApproxNet, target: &mut ApproxNet) -> Result<(), NetError> {
    if net.shape() != target.shape() {
        return Err(NetError::ShapeMismatch(net.shape(), target.shape()));
    }
    target.clone_from(net);
    Ok(())
}

/// Forward pass tabulated over every state, keeping defined cells only.
pub fn tabulate(net: &ApproxNet, fsm: &Fsm) -> Result<QTable, NetError> {
    let mut q = QTable::empty(fsm.num_states(), fsm.num_events());
    for s in 0..fsm.num_states() {
        let out = net.forward(s)?;
        for (e, _) in fsm.outgoing(s) {
            q.define(s, e, out[e]);
        }
    }
    Ok(q)
}

#[derive(Debug, Clone)]
pub struct DeepRun {
    pub net: ApproxNet,
    /// Undiscounted return of each episode.
    pub returns: Vec<f64>,
    /// Pre-step loss of every gradient step.
    pub losses: Vec<f64>,
    pub trace: TraceLog,
    pub config: TrainingConfig,
}

/// Deep Q-learning with the controllable epsilon-greedy policy reading the
/// online network's outputs.
pub fn train_dqn(env: &mut Environment, config: &TrainingConfig) -> Result<DeepRun, TrainError> {
    config.validate().map_err(TrainError::Config)?;
    let mut rng = Rng::seed_from(config.seed);
    let fsm = env.model().clone();
    let mut net = ApproxNet::new(fsm.num_states(), fsm.num_events(), config.init_scale, &mut rng);
    let mut target = net.clone();
    let mut buffer = ReplayBuffer::new(config.replay_capacity);
    let probs = env.probabilities().clone();
    let mut returns = Vec::with_capacity(config.episodes);
    let mut losses = Vec::new();
    let mut trace = TraceLog::default();
    let mut steps = 0usize;

    for episode in 0..config.episodes {
        env.reset();
        let mut total = 0.0;
        while !env.is_done() {
            let state = env.current();
            let actions = env.action_sets();
            if actions.all.is_empty() {
                break;
            }
            let tick = env.step_count();
            let values = net.forward(state)?;
            let choice = controllable_epsilon_greedy(
                state,
                &StateValues(&values),
                config.epsilon,
                &actions,
                &probs,
                &mut rng,
            );
            let action = match choice {
                Ok(a) => a,
                Err(PolicyError::NoActionAvailable(_)) => {
                    let r = env.wait()?;
                    trace.record(TraceRow { episode, step: tick, state, action: None, reward: 0.0, done: r.done });
                    continue;
                }
                Err(e) => return Err(e.into()),
            };

            let result = env.step(action)?;
            total += result.reward;
            trace.record(TraceRow { episode, step: tick, state, action: Some(action), reward: result.reward, done: result.done });
            buffer.push(Experience {
                state,
                action,
                reward: result.reward,
                next_state: result.observation,
                done: result.is_terminal(),
                next_enabled: fsm.enabled(result.observation).expect("valid state"),
            });

            if buffer.len() >= config.batch_size {
                let batch = buffer.sample(config.batch_size, &mut rng);
                losses.push(train_step(&mut net, &target, &batch, config.learning_rate, config.gamma)?);
            }
            steps += 1;
            if steps.is_multiple_of(config.target_period) {
                sync_target(&net, &mut target)?;
            }
        }
        returns.push(total);
    }

    Ok(DeepRun { net, returns, losses, trace, config: config.clone() })
}

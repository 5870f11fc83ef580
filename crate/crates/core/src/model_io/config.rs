//! The `.cfg` training configuration format.
//!
//! ```text
//! rewards:
//!   b2 = 10
//!   c1 = -4
//! probabilities:
//!   c1 = 0.05
//! training:
//!   episodes = 100
//!   horizon = 60
//! ```
//!
//! Events without a reward get -1. Training keys that are left out keep
//! their defaults.

use std::collections::BTreeMap;
use std::fmt;

use super::ParseError;

/// Hyperparameters and reward/probability lists for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub rewards: BTreeMap<String, f64>,
    pub probabilities: BTreeMap<String, f64>,
    pub gamma: f64,
    pub alpha: f64,
    pub epsilon: f64,
    pub episodes: usize,
    pub horizon: usize,
    pub seed: u64,
    pub terminate_on_marked: bool,
    // deep Q-learning
    pub learning_rate: f64,
    pub batch_size: usize,
    pub replay_capacity: usize,
    pub target_period: usize,
    pub init_scale: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            rewards: BTreeMap::new(),
            probabilities: BTreeMap::new(),
            gamma: 0.9,
            alpha: 0.1,
            epsilon: 0.1,
            episodes: 100,
            horizon: 60,
            seed: 0,
            terminate_on_marked: false,
            learning_rate: 1e-3,
            batch_size: 32,
            replay_capacity: 10_000,
            target_period: 100,
            init_scale: 0.08,
        }
    }
}

impl TrainingConfig {
    /// Every range violation, not just the first.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                problems.push(msg);
            }
        };
        check(self.gamma > 0.0 && self.gamma <= 1.0, format!("gamma must be in (0, 1], got {}", self.gamma));
        check(self.alpha > 0.0 && self.alpha <= 1.0, format!("alpha must be in (0, 1], got {}", self.alpha));
        check(
            (0.0..=1.0).contains(&self.epsilon),
            format!("epsilon must be in [0, 1], got {}", self.epsilon),
        );
        check(self.episodes > 0, "episodes must be positive".to_owned());
        check(self.horizon > 0, "horizon must be positive".to_owned());
        check(
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            format!("learning_rate must be positive, got {}", self.learning_rate),
        );
        check(self.batch_size > 0, "batch_size must be positive".to_owned());
        check(self.replay_capacity > 0, "replay_capacity must be positive".to_owned());
        check(self.target_period > 0, "target_period must be positive".to_owned());
        check(self.init_scale >= 0.0, format!("init_scale must be non-negative, got {}", self.init_scale));
        for (event, p) in &self.probabilities {
            check((0.0..=1.0).contains(p), format!("probability of `{event}` must be in [0, 1], got {p}"));
        }
        for (event, r) in &self.rewards {
            check(r.is_finite(), format!("reward of `{event}` must be finite"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("invalid value `{v}` for `{key}`"))
        }
        match key {
            "gamma" => self.gamma = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "epsilon" => self.epsilon = num(key, value)?,
            "episodes" => self.episodes = num(key, value)?,
            "horizon" => self.horizon = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "terminate_on_marked" => self.terminate_on_marked = num(key, value)?,
            "learning_rate" => self.learning_rate = num(key, value)?,
            "batch_size" => self.batch_size = num(key, value)?,
            "replay_capacity" => self.replay_capacity = num(key, value)?,
            "target_period" => self.target_period = num(key, value)?,
            "init_scale" => self.init_scale = num(key, value)?,
            _ => return Err(format!("unknown training key `{key}`")),
        }
        Ok(())
    }

    /// Entries of `overlay` replace or extend this config's reward and
    /// probability lists.
    pub fn merge_lists(&mut self, overlay: &TrainingConfig) {
        self.rewards.extend(overlay.rewards.iter().map(|(k, v)| (k.clone(), *v)));
        self.probabilities.extend(overlay.probabilities.iter().map(|(k, v)| (k.clone(), *v)));
    }
}

fn fmt_real(v: f64) -> String {
    format!("{v}")
}

impl fmt::Display for TrainingConfig {
    /// Canonical `.cfg` text; parsing it yields an equal config.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rewards:")?;
        for (k, v) in &self.rewards {
            writeln!(f, "  {k} = {}", fmt_real(*v))?;
        }
        writeln!(f, "probabilities:")?;
        for (k, v) in &self.probabilities {
            writeln!(f, "  {k} = {}", fmt_real(*v))?;
        }
        writeln!(f, "training:")?;
        writeln!(f, "  gamma = {}", self.gamma)?;
        writeln!(f, "  alpha = {}", self.alpha)?;
        writeln!(f, "  epsilon = {}", self.epsilon)?;
        writeln!(f, "  episodes = {}", self.episodes)?;
        writeln!(f, "  horizon = {}", self.horizon)?;
        writeln!(f, "  seed = {}", self.seed)?;
        writeln!(f, "  terminate_on_marked = {}", self.terminate_on_marked)?;
        writeln!(f, "  learning_rate = {}", self.learning_rate)?;
        writeln!(f, "  batch_size = {}", self.batch_size)?;
        writeln!(f, "  replay_capacity = {}", self.replay_capacity)?;
        writeln!(f, "  target_period = {}", self.target_period)?;
        writeln!(f, "  init_scale = {}", self.init_scale)
    }
}

pub fn parse_config(text: &str) -> Result<TrainingConfig, ParseError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Rewards,
        Probabilities,
        Training,
    }
    let mut config = TrainingConfig::default();
    let mut section = Section::None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        match content {
            "rewards:" => section = Section::Rewards,
            "probabilities:" => section = Section::Probabilities,
            "training:" => section = Section::Training,
            _ => {
                let (key, value) = content
                    .split_once('=')
                    .map(|(k, v)| (k.trim(), v.trim()))
                    .filter(|(k, v)| !k.is_empty() && !v.is_empty())
                    .ok_or_else(|| ParseError::Syntax { line, message: format!("expected `key = value`, found `{content}`") })?;
                let syntax = |message: String| ParseError::Syntax { line, message };
                match section {
                    Section::None => return Err(syntax(format!("`{key}` outside of a section"))),
                    Section::Rewards | Section::Probabilities => {
                        let v: f64 = value.parse().map_err(|_| syntax(format!("invalid number `{value}`")))?;
                        let map = if section == Section::Rewards {
                            &mut config.rewards
                        } else {
                            &mut config.probabilities
                        };
                        if map.insert(key.to_owned(), v).is_some() {
                            return Err(syntax(format!("`{key}` listed twice")));
                        }
                    }
                    Section::Training => config.set(key, value).map_err(syntax)?,
                }
            }
        }
    }
    Ok(config)
}

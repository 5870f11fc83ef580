//! The `desgym` command line: compose, train, render and inspect models.
//!
//! Exit codes are 0 on success, 1 for runtime failures and 2 for usage or
//! validation errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::automata::{compose_all, Fsm};
use crate::deepq::{tabulate, train_dqn};
use crate::environment::{ActionSets, Environment};
use crate::model_io::{
    export_dot, export_native, export_qtable_csv, export_returns_csv, parse_config, parse_model, Decorations,
    ModelFormat, TrainingConfig,
};
use crate::policy::{greedy_controllable, QTable};
use crate::tabular::train_q;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "desgym", version, about = "Discrete-event-system automata as reinforcement-learning environments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrainerKind {
    Q,
    Dqn,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compose every automaton in the input files and write the result.
    Compose {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train on a model and write the learned values.
    Train {
        model: PathBuf,
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "q")]
        trainer: TrainerKind,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Write a DOT diagram, optionally highlighting a state and a transition.
    Render {
        model: PathBuf,
        /// Output file; standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// State label to fill green.
        #[arg(long)]
        current: Option<String>,
        /// Transition to draw in purple, as `source,event,target`.
        #[arg(long)]
        last: Option<String>,
    },
    /// Summarize states, alphabet and enabled events.
    Inspect { model: PathBuf },
}

/// Failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn runtime(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_RUNTIME, message: message.into() }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Compose { inputs, output } => cmd_compose(&inputs, &output, out),
        Command::Train { model, config, out: dir, trainer, seed, episodes, horizon, alpha, gamma, epsilon } => {
            let overrides = Overrides { seed, episodes, horizon, alpha, gamma, epsilon };
            cmd_train(&model, &config, &dir, trainer, &overrides, out)
        }
        Command::Render { model, output, current, last } => {
            cmd_render(&model, output.as_deref(), current.as_deref(), last.as_deref(), out)
        }
        Command::Inspect { model } => cmd_inspect(&model, out),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| runtime(e.to_string()))
}

/// Every automaton of every file, composed into one.
fn load_model(paths: &[PathBuf]) -> Result<Fsm, Failure> {
    let mut automata = Vec::new();
    for path in paths {
        let doc = parse_model(&read(path)?, ModelFormat::from_path(path))
            .map_err(|e| usage(format!("{}: {e}", path.display())))?;
        for w in &doc.warnings {
            log::warn!("{}: {w}", path.display());
        }
        automata.extend(doc.automata);
    }
    compose_all(&automata).map_err(|e| usage(e.to_string()))
}

fn cmd_compose(inputs: &[PathBuf], output: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let k = load_model(inputs)?;
    write_file(output, export_native(&k).as_bytes())?;
    emit(out, &format!("{} states, {} transitions\n", k.num_states(), k.num_transitions()))
}

#[derive(Debug, Default, Clone)]
struct Overrides {
    seed: Option<u64>,
    episodes: Option<usize>,
    horizon: Option<usize>,
    alpha: Option<f64>,
    gamma: Option<f64>,
    epsilon: Option<f64>,
}

impl Overrides {
    fn apply(&self, c: &mut TrainingConfig) {
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.episodes {
            c.episodes = v;
        }
        if let Some(v) = self.horizon {
            c.horizon = v;
        }
        if let Some(v) = self.alpha {
            c.alpha = v;
        }
        if let Some(v) = self.gamma {
            c.gamma = v;
        }
        if let Some(v) = self.epsilon {
            c.epsilon = v;
        }
    }
}

/// One line per state: the greedy controllable event, or `-` without any.
pub fn policy_report(fsm: &Fsm, q: &QTable) -> String {
    let mut text = String::new();
    for s in 0..fsm.num_states() {
        let sets = ActionSets::at(fsm, s);
        let choice = greedy_controllable(s, q, &sets.controllable).map_or("-", |e| fsm.event(e).name.as_str());
        text.push_str(&format!("St. {s} ({}): {choice}\n", fsm.state_label(s)));
    }
    text
}

fn cmd_train(
    model: &Path,
    config: &Path,
    dir: &Path,
    trainer: TrainerKind,
    overrides: &Overrides,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let k = load_model(&[model.to_path_buf()])?;
    let mut cfg = parse_config(&read(config)?).map_err(|e| usage(format!("{}: {e}", config.display())))?;
    overrides.apply(&mut cfg);
    if let Err(problems) = cfg.validate() {
        return Err(usage(format!("invalid configuration:\n  {}", problems.join("\n  "))));
    }
    let mut env = Environment::from_config(k.clone(), &cfg).map_err(|e| usage(e.to_string()))?;
    std::fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;

    let (q, returns, trace) = match trainer {
        TrainerKind::Q => {
            let run = train_q(&mut env, &cfg).map_err(|e| runtime(e.to_string()))?;
            (run.qtable, run.returns, run.trace)
        }
        TrainerKind::Dqn => {
            let run = train_dqn(&mut env, &cfg).map_err(|e| runtime(e.to_string()))?;
            write_file(&dir.join("params.bin"), &run.net.to_dump())?;
            (tabulate(&run.net, &k).map_err(|e| runtime(e.to_string()))?, run.returns, run.trace)
        }
    };
    write_file(&dir.join("qtable.csv"), export_qtable_csv(&q, &k).as_bytes())?;
    write_file(&dir.join("returns.csv"), export_returns_csv(&returns).as_bytes())?;
    write_file(&dir.join("trace.csv"), trace.to_csv(&k).as_bytes())?;
    emit(out, &policy_report(&k, &q))
}

fn cmd_render(
    model: &Path,
    output: Option<&Path>,
    current: Option<&str>,
    last: Option<&str>,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let k = load_model(&[model.to_path_buf()])?;
    let last = match last {
        None => None,
        Some(text) => match text.split(',').map(str::trim).collect::<Vec<_>>()[..] {
            [s, e, t] => Some((s, e, t)),
            _ => return Err(usage(format!("--last expects `source,event,target`, got `{text}`"))),
        },
    };
    let decorations = Decorations::by_name(&k, current, last).map_err(|e| usage(e.to_string()))?;
    let dot = export_dot(&k, &decorations).map_err(|e| usage(e.to_string()))?;
    match output {
        Some(path) => write_file(path, dot.as_bytes()),
        None => emit(out, &dot),
    }
}

fn cmd_inspect(model: &Path, out: &mut dyn Write) -> Result<(), Failure> {
    let k = load_model(&[model.to_path_buf()])?;
    let mut text = format!("{}: {} states, {} transitions\n", k.name(), k.num_states(), k.num_transitions());
    text.push_str("events:\n");
    for e in k.events() {
        let kind = if e.controllable { "controllable" } else { "uncontrollable" };
        text.push_str(&format!("  {} {kind}\n", e.name));
    }
    text.push_str("states:\n");
    for s in 0..k.num_states() {
        let enabled: Vec<&str> = k.outgoing(s).map(|(e, _)| k.event(e).name.as_str()).collect();
        let mut flags = String::new();
        if s == k.initial() {
            flags.push_str(" initial");
        }
        if k.is_marked(s) {
            flags.push_str(" marked");
        }
        text.push_str(&format!("  {s} {}{flags}: {{{}}}\n", k.state_label(s), enabled.join(", ")));
    }
    let marked: Vec<&str> = k.marked_states().map(|s| k.state_label(s)).collect();
    text.push_str(&format!("marked: {}\n", marked.join(", ")));
    emit(out, &text)
}

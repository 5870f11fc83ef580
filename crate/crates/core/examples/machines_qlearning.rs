// Tabular Q-learning on two machines sharing a buffer.
//
//   cargo run --release --example machines_qlearning [seed]

use desgym::bundles::machines_bundle;
use desgym::cli::policy_report;
use desgym::model_io::export_qtable_csv;
use desgym::tabular::train_q;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bundle = machines_bundle();
    let mut config = bundle.training_config()?;
    if let Some(seed) = std::env::args().nth(1) {
        config.seed = seed.parse()?;
    }
    let mut env = bundle.environment()?;
    let run = train_q(&mut env, &config)?;

    let k = env.model();
    print!("{}", export_qtable_csv(&run.qtable, k));
    println!();
    print!("{}", policy_report(k, &run.qtable));
    let last: Vec<f64> = run.returns.iter().rev().take(10).copied().collect();
    println!("mean return of the last 10 episodes: {:.1}", last.iter().sum::<f64>() / last.len() as f64);
    Ok(())
}

// Deep Q-learning on the transmitters. With the second transmitter paying
// more per acknowledgement, the greedy first request should be req2.
//
//   cargo run --release --example transmitters_dqn [seed]

use desgym::bundles::transmitters_bundle;
use desgym::cli::policy_report;
use desgym::deepq::{tabulate, train_dqn};
use desgym::model_io::export_qtable_csv;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bundle = transmitters_bundle();
    let mut config = bundle.training_config()?;
    if let Some(seed) = std::env::args().nth(1) {
        config.seed = seed.parse()?;
    }
    let mut env = bundle.environment()?;
    let run = train_dqn(&mut env, &config)?;

    let k = env.model();
    let q = tabulate(&run.net, k)?;
    print!("{}", export_qtable_csv(&q, k));
    println!();
    print!("{}", policy_report(k, &q));
    if let (Some(first), Some(last)) = (run.losses.first(), run.losses.last()) {
        println!("{} gradient steps, loss {first:.3} -> {last:.3}", run.losses.len());
    }
    Ok(())
}

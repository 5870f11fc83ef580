// The transmitters with a rare signal dropout: a probability-specified
// uncontrollable event that is evaluated before the agent gets to choose.

use desgym::bundles::transmitters_dropout_bundle;
use desgym::cli::policy_report;
use desgym::tabular::train_q;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bundle = transmitters_dropout_bundle();
    let mut config = bundle.training_config()?;
    config.episodes = 300;
    let mut env = bundle.environment()?;
    let k = env.model().clone();
    println!("{} states, {} transitions", k.num_states(), k.num_transitions());

    let run = train_q(&mut env, &config)?;
    let dropouts = run
        .trace
        .rows()
        .iter()
        .filter(|r| r.action.is_some_and(|a| k.event(a).name.starts_with("dropout")))
        .count();
    let steps = run.trace.rows().len();
    println!("{dropouts} dropouts in {steps} steps");
    print!("{}", policy_report(&k, &run.qtable));
    Ok(())
}

// Step through the academic decision process by hand, then learn it.

use desgym::bundles::academic_bundle;
use desgym::environment::{discounted_return, episode_return};
use desgym::tabular::train_q;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bundle = academic_bundle();
    let mut env = bundle.environment()?;
    let k = env.model().clone();

    // the hard-working path: read, project, paper, raise
    env.reset();
    for name in ["read_book", "do_project", "publish_paper", "get_raise"] {
        let r = env.step(k.event_id(name).unwrap())?;
        println!("{name:>13} -> {:<3} reward {:>3} done {}", k.state_label(r.observation), r.reward, r.done);
    }
    println!("return {} (discounted {:.3})", episode_return(env.trace(), 1.0), episode_return(env.trace(), 0.9));
    assert_eq!(discounted_return(&[-4.0, -2.0, -1.0, 12.0], 1.0), 5.0);

    let config = bundle.training_config()?;
    let run = train_q(&mut env, &config)?;
    println!("\nlearned values after {} episodes:", config.episodes);
    for (s, e, v) in run.qtable.defined_cells() {
        println!("  {:<6} {:<13} {v:>7.2}", k.state_label(s), k.event(e).name);
    }
    Ok(())
}

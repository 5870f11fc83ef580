// Compose the transmitters with their channel restriction and draw the
// closed loop with the current state and last transition highlighted.
//
//   cargo run --example compose_and_render > k.dot && dot -Tsvg k.dot -o k.svg

use desgym::bundles::transmitters_bundle;
use desgym::model_io::{export_dot, Decorations};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let bundle = transmitters_bundle();
    let plant = bundle.plant()?;
    let k = bundle.closed_loop()?;
    eprintln!("plant: {} states, {} transitions", plant.num_states(), plant.num_transitions());
    eprintln!("closed loop: {} states, {} transitions", k.num_states(), k.num_transitions());

    let deco = Decorations::by_name(&k, Some("wait.idle.S0"), Some(("idle.idle.S0", "req1", "wait.idle.S0")))?;
    print!("{}", export_dot(&k, &deco)?);
    Ok(())
}

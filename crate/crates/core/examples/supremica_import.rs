// Read automata from a Supremica-style XML project, compose them and print
// the result in the native text format.
//
//   cargo run --example supremica_import [file.xml]

use desgym::model_io::{export_native, parse_supremica_xml};

const DEMO: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<Automata name="valve">
  <Automaton name="Valve" type="Plant">
    <Events>
      <Event id="0" label="open"/>
      <Event id="1" label="close"/>
      <Event id="2" label="stuck" controllable="false"/>
    </Events>
    <States>
      <State id="0" name="closed" initial="true" accepting="true"/>
      <State id="1" name="opened"/>
      <State id="2" name="jammed"/>
    </States>
    <Transitions>
      <Transition source="0" dest="1" event="0"/>
      <Transition source="1" dest="0" event="1"/>
      <Transition source="1" dest="2" event="2"/>
    </Transitions>
  </Automaton>
  <Automaton name="Alternate" type="Specification">
    <Events>
      <Event id="0" label="open"/>
      <Event id="1" label="close"/>
    </Events>
    <States>
      <State id="0" name="ready" initial="true" accepting="true"/>
      <State id="1" name="used"/>
    </States>
    <Transitions>
      <Transition source="0" dest="1" event="0"/>
      <Transition source="1" dest="0" event="1"/>
    </Transitions>
  </Automaton>
</Automata>
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => DEMO.to_owned(),
    };
    let doc = parse_supremica_xml(&text)?;
    for w in &doc.warnings {
        eprintln!("warning: {w}");
    }
    let k = doc.compose()?;
    print!("{}", export_native(&k));
    Ok(())
}

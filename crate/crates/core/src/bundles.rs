//! Built-in example systems. The model and config texts are the files in
//! this crate's `examples/` directory, embedded verbatim.

use std::io;
use std::path::Path;

use crate::automata::{compose_all, Fsm};
use crate::environment::{EnvError, Environment};
use crate::model_io::{parse_config, parse_native, ParseError, TrainingConfig};

/// A named model file and its native-format text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fixture {
    pub file: &'static str,
    pub text: &'static str,
}

macro_rules! fixture {
    ($file:literal) => {
        Fixture { file: $file, text: include_str!(concat!("../examples/", $file)) }
    };
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleBundle {
    pub name: &'static str,
    pub components: Vec<Fixture>,
    pub restrictions: Vec<Fixture>,
    pub config: Fixture,
    /// Extra reward and probability entries layered over `config`.
    pub overlay: Option<Fixture>,
}

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("{file}: {source}")]
    Parse { file: &'static str, source: ParseError },
    #[error(transparent)]
    Model(#[from] crate::automata::ModelError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

fn parse_fixtures(fixtures: &[Fixture]) -> Result<Vec<Fsm>, BundleError> {
    let mut out = Vec::new();
    for f in fixtures {
        let doc = parse_native(f.text).map_err(|source| BundleError::Parse { file: f.file, source })?;
        out.extend(doc.automata);
    }
    Ok(out)
}

impl ExampleBundle {
    pub fn component_automata(&self) -> Result<Vec<Fsm>, BundleError> {
        parse_fixtures(&self.components)
    }

    pub fn restriction_automata(&self) -> Result<Vec<Fsm>, BundleError> {
        parse_fixtures(&self.restrictions)
    }

    /// Composition of the components alone.
    pub fn plant(&self) -> Result<Fsm, BundleError> {
        Ok(compose_all(&self.component_automata()?)?)
    }

    /// Components composed with every restriction.
    pub fn closed_loop(&self) -> Result<Fsm, BundleError> {
        let mut all = self.component_automata()?;
        all.extend(self.restriction_automata()?);
        Ok(compose_all(&all)?)
    }

    pub fn training_config(&self) -> Result<TrainingConfig, BundleError> {
        let parse = |f: &Fixture| parse_config(f.text).map_err(|source| BundleError::Parse { file: f.file, source });
        let mut config = parse(&self.config)?;
        if let Some(overlay) = &self.overlay {
            config.merge_lists(&parse(overlay)?);
        }
        Ok(config)
    }

    pub fn environment(&self) -> Result<Environment, BundleError> {
        Ok(Environment::from_config(self.closed_loop()?, &self.training_config()?)?)
    }

    pub fn fixtures(&self) -> impl Iterator<Item = &Fixture> {
        self.components.iter().chain(&self.restrictions).chain(Some(&self.config)).chain(&self.overlay)
    }

    /// Writes every file of the bundle into `dir`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for f in self.fixtures() {
            std::fs::write(dir.join(f.file), f.text)?;
        }
        Ok(())
    }
}

/// Two machines feeding each other through a one-slot buffer.
pub fn machines_bundle() -> ExampleBundle {
    ExampleBundle {
        name: "machines",
        components: vec![fixture!("m1.fsm"), fixture!("m2.fsm")],
        restrictions: vec![fixture!("buffer_r.fsm")],
        config: fixture!("machines.cfg"),
        overlay: None,
    }
}

/// Two transmitters competing for one channel.
pub fn transmitters_bundle() -> ExampleBundle {
    ExampleBundle {
        name: "transmitters",
        components: vec![fixture!("t1.fsm"), fixture!("t2.fsm")],
        restrictions: vec![fixture!("channel_r.fsm")],
        config: fixture!("transmitters.cfg"),
        overlay: None,
    }
}

/// The transmitters with a 1% signal dropout that aborts a transmission.
pub fn transmitters_dropout_bundle() -> ExampleBundle {
    ExampleBundle {
        name: "transmitters-dropout",
        components: vec![fixture!("t1_dropout.fsm"), fixture!("t2_dropout.fsm")],
        restrictions: vec![fixture!("channel_r_dropout.fsm")],
        config: fixture!("transmitters.cfg"),
        overlay: Some(fixture!("dropout.cfg")),
    }
}

/// A small academic-career decision process as a single automaton.
pub fn academic_bundle() -> ExampleBundle {
    ExampleBundle {
        name: "academic",
        components: vec![fixture!("academic.fsm")],
        restrictions: vec![],
        config: fixture!("academic.cfg"),
        overlay: None,
    }
}

pub fn all_bundles() -> Vec<ExampleBundle> {
    vec![machines_bundle(), transmitters_bundle(), transmitters_dropout_bundle(), academic_bundle()]
}

pub fn bundle_by_name(name: &str) -> Option<ExampleBundle> {
    all_bundles().into_iter().find(|b| b.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(f: &Fsm) -> (usize, usize) {
        (f.num_states(), f.num_transitions())
    }

    #[test]
    fn published_counts() {
        let t = transmitters_bundle();
        assert_eq!(counts(&t.plant().unwrap()), (9, 18));
        assert_eq!(counts(&t.closed_loop().unwrap()), (8, 14));
        assert_eq!(counts(&machines_bundle().closed_loop().unwrap()), (18, 42));
    }

    #[test]
    fn fixtures_parse_without_warnings() {
        for b in all_bundles() {
            for f in b.components.iter().chain(&b.restrictions) {
                let doc = parse_native(f.text).unwrap();
                assert!(doc.warnings.is_empty(), "{}: {:?}", f.file, doc.warnings);
            }
            b.environment().unwrap();
        }
    }

    #[test]
    fn machines_rewards() {
        let b = machines_bundle();
        let env = b.environment().unwrap();
        let k = env.model();
        let expect = [("a1", -1.0), ("b1", -1.0), ("a2", -1.0), ("b2", 10.0), ("c1", -4.0), ("c2", -4.0), ("r1", -1.0), ("r2", -1.0)];
        for (name, r) in expect {
            assert_eq!(env.rewards().get(k.event_id(name).unwrap()), r, "{name}");
        }
        let cfg = b.training_config().unwrap();
        assert_eq!((cfg.horizon, cfg.episodes), (60, 100));
        assert_eq!(env.probabilities().get(k.event_id("c1").unwrap()), Some(0.05));
        assert_eq!(env.probabilities().get(k.event_id("b1").unwrap()), None);
        for e in k.events() {
            let controllable = e.name.starts_with('a') || e.name.starts_with('r');
            assert_eq!(e.controllable, controllable, "{}", e.name);
        }
    }

    #[test]
    fn transmitters_rewards() {
        let env = transmitters_bundle().environment().unwrap();
        let k = env.model();
        let r = |n: &str| env.rewards().get(k.event_id(n).unwrap());
        assert_eq!(r("ack2") - r("ack1"), 1.0);
        assert_eq!(r("req1"), -1.0);
        assert_eq!(r("tran2"), -1.0);
    }

    #[test]
    fn academic_process() {
        let b = academic_bundle();
        let env = b.environment().unwrap();
        let k = env.model();
        let names = |s: &str| -> Vec<String> { k.enabled_by_label(s).unwrap().iter().map(|e| e.name.clone()).collect() };
        assert_eq!(names("s1"), ["quit", "read_book"]);
        assert_eq!(names("s4"), ["get_raise"]);
        assert!(names("s5").is_empty());
        assert!(k.is_marked(k.state_id("s5").unwrap()));
        assert!(k.event(k.event_id("play_game").unwrap()).controllable);
        assert_eq!(env.rewards().get(k.event_id("get_raise").unwrap()), 12.0);
        let p = |n: &str| env.probabilities().get(k.event_id(n).unwrap()).unwrap();
        assert!((p("give_up") + p("restart") - 1.0).abs() < 1e-12);
        assert!(b.training_config().unwrap().terminate_on_marked);
    }

    #[test]
    fn dropout_overlay() {
        let b = transmitters_dropout_bundle();
        let cfg = b.training_config().unwrap();
        assert_eq!(cfg.probabilities["dropout1"], 0.01);
        assert_eq!(cfg.rewards["ack2"], 3.0);
        let k = b.closed_loop().unwrap();
        assert!(!k.event(k.event_id("dropout2").unwrap()).controllable);
    }

    #[test]
    fn files_on_disk_match() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples");
        for b in all_bundles() {
            for f in b.fixtures() {
                assert_eq!(std::fs::read_to_string(dir.join(f.file)).unwrap(), f.text, "{}", f.file);
            }
        }
    }
}

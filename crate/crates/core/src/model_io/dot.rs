//! Graphviz rendering of automata.
//!
//! Marked states are double circles, the initial state has an entry arrow
//! from a point node, uncontrollable edges are red. A current state is filled
//! green and a last-taken transition is drawn purple.

use std::fmt::Write as _;

use crate::automata::{Fsm, ModelError, StateId, Transition};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Decorations {
    pub current: Option<StateId>,
    pub last: Option<Transition>,
}

impl Decorations {
    /// Resolves decorations given by state label and event name.
    pub fn by_name(fsm: &Fsm, current: Option<&str>, last: Option<(&str, &str, &str)>) -> Result<Self, ModelError> {
        let state = |label: &str| fsm.state_id(label).ok_or_else(|| ModelError::UnknownState(label.to_owned()));
        let current = current.map(state).transpose()?;
        let last = match last {
            None => None,
            Some((s, e, t)) => {
                let source = state(s)?;
                let target = state(t)?;
                let event = fsm.event_id(e).ok_or_else(|| ModelError::UnknownEvent(e.to_owned()))?;
                Some(Transition { source, event, target })
            }
        };
        let deco = Decorations { current, last };
        deco.check(fsm)?;
        Ok(deco)
    }

    fn check(&self, fsm: &Fsm) -> Result<(), ModelError> {
        if let Some(s) = self.current {
            if s >= fsm.num_states() {
                return Err(ModelError::UnknownState(s.to_string()));
            }
        }
        if let Some(t) = self.last {
            if t.source >= fsm.num_states() || t.event >= fsm.num_events() || fsm.target(t.source, t.event) != Some(t.target) {
                return Err(ModelError::UnknownEvent(format!("transition {t:?}")));
            }
        }
        Ok(())
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn export_dot(fsm: &Fsm, decorations: &Decorations) -> Result<String, ModelError> {
    decorations.check(fsm)?;
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(fsm.name()));
    out.push_str("    rankdir=LR;\n");
    out.push_str("    node [shape=circle];\n");
    out.push_str("    __init [shape=point];\n");
    let _ = writeln!(out, "    __init -> s{};", fsm.initial());

    for (id, label) in fsm.state_labels().iter().enumerate() {
        let mut attrs = vec![format!("label={}", quote(label))];
        if fsm.is_marked(id) {
            attrs.push("shape=doublecircle".to_owned());
        }
        if decorations.current == Some(id) {
            attrs.push("style=filled".to_owned());
            attrs.push("fillcolor=green".to_owned());
        }
        let _ = writeln!(out, "    s{id} [{}];", attrs.join(", "));
    }

    for t in fsm.transitions() {
        let event = fsm.event(t.event);
        let mut attrs = vec![format!("label={}", quote(&event.name))];
        if decorations.last == Some(t) {
            attrs.push("color=purple".to_owned());
            attrs.push("fontcolor=purple".to_owned());
            attrs.push("penwidth=2".to_owned());
        } else if !event.controllable {
            attrs.push("color=red".to_owned());
            attrs.push("fontcolor=red".to_owned());
        }
        let _ = writeln!(out, "    s{} -> s{} [{}];", t.source, t.target, attrs.join(", "));
    }
    out.push_str("}\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lamp() -> Fsm {
        let mut b = Fsm::builder("lamp");
        b.event("press", true).unwrap().event("blow", false).unwrap();
        b.state("off", true, true).unwrap().state("on", false, false).unwrap();
        b.transition("off", "press", "on").unwrap().transition("on", "blow", "off").unwrap();
        b.build().unwrap()
    }

    #[test]
    fn plain_rendering() {
        let dot = export_dot(&lamp(), &Decorations::default()).unwrap();
        assert!(dot.contains("__init -> s0;"));
        assert!(dot.contains("s0 [label=\"off\", shape=doublecircle];"));
        assert!(dot.contains("s1 -> s0 [label=\"blow\", color=red, fontcolor=red];"));
        assert!(dot.contains("s0 -> s1 [label=\"press\"];"));
        assert!(!dot.contains("green") && !dot.contains("purple"));
    }

    #[test]
    fn single_marked_state() {
        let mut b = Fsm::builder("one");
        b.state("only", true, true).unwrap();
        let dot = export_dot(&b.build().unwrap(), &Decorations::default()).unwrap();
        assert_eq!(dot.matches("doublecircle").count(), 1);
        assert!(dot.contains("__init -> s0;"));
    }

    #[test]
    fn decorations_by_name() {
        let f = lamp();
        let d = Decorations::by_name(&f, Some("on"), Some(("off", "press", "on"))).unwrap();
        let dot = export_dot(&f, &d).unwrap();
        assert!(dot.contains("s1 [label=\"on\", style=filled, fillcolor=green];"));
        assert!(dot.contains("s0 -> s1 [label=\"press\", color=purple, fontcolor=purple, penwidth=2];"));
        assert!(Decorations::by_name(&f, Some("dim"), None).is_err());
        assert!(Decorations::by_name(&f, None, Some(("off", "blow", "on"))).is_err());
    }
}

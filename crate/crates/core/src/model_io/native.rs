//! The line-oriented `.fsm` format.
//!
//! ```text
//! # machine M1
//! automaton G1
//! events:
//!   a1 controllable
//!   b1 uncontrollable
//! states:
//!   idle initial marked
//!   work
//! transitions:
//!   idle -a1-> work
//!   work -b1-> idle
//! ```
//!
//! An optional `model <name>` line may precede the first automaton. `#`
//! starts a comment.

use std::fmt::Write as _;

use crate::automata::{Fsm, FsmBuilder};

use super::{ModelDocument, ParseError};

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Header,
    Events,
    States,
    Transitions,
}

struct Pending {
    builder: FsmBuilder,
    transitions: Vec<(usize, String, String, String)>,
}

impl Pending {
    fn finish(self, warnings: &mut Vec<String>) -> Result<Fsm, ParseError> {
        let Pending { mut builder, transitions } = self;
        for (line, s, e, t) in transitions {
            builder
                .transition(&s, &e, &t)
                .map_err(|source| ParseError::Model { line, source })?;
        }
        for label in builder.unreachable_labels() {
            warnings.push(format!("state `{label}` is unreachable and was dropped"));
        }
        Ok(builder.build()?)
    }
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, message: message.into() }
}

fn parse_transition(line: usize, tokens: &[&str]) -> Result<(String, String, String), ParseError> {
    match tokens {
        [src, arrow, dst] => {
            let event = arrow
                .strip_prefix('-')
                .and_then(|a| a.strip_suffix("->"))
                .filter(|e| !e.is_empty())
                .ok_or_else(|| syntax(line, format!("expected `-event->`, found `{arrow}`")))?;
            Ok((src.to_string(), event.to_owned(), dst.to_string()))
        }
        _ => Err(syntax(line, "expected `source -event-> target`")),
    }
}

pub fn parse_native(text: &str) -> Result<ModelDocument, ParseError> {
    let mut doc_name: Option<String> = None;
    let mut automata = Vec::new();
    let mut warnings = Vec::new();
    let mut current: Option<Pending> = None;
    let mut section = Section::Header;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();

        match tokens.as_slice() {
            ["model", name] if current.is_none() && automata.is_empty() => {
                doc_name = Some(name.to_string());
                continue;
            }
            ["automaton", name] => {
                if let Some(p) = current.take() {
                    automata.push(p.finish(&mut warnings)?);
                }
                current = Some(Pending { builder: Fsm::builder(*name), transitions: Vec::new() });
                section = Section::Header;
                continue;
            }
            ["events:"] | ["states:"] | ["transitions:"] => {
                if current.is_none() {
                    return Err(syntax(line, "section outside of an `automaton` block"));
                }
                section = match tokens[0] {
                    "events:" => Section::Events,
                    "states:" => Section::States,
                    _ => Section::Transitions,
                };
                continue;
            }
            _ => {}
        }

        let pending = current
            .as_mut()
            .ok_or_else(|| syntax(line, format!("unexpected `{content}` before `automaton`")))?;
        let model_err = |source| ParseError::Model { line, source };
        match section {
            Section::Header => return Err(syntax(line, format!("unexpected `{content}`"))),
            Section::Events => {
                let controllable = match tokens.as_slice() {
                    [_, "controllable"] => true,
                    [_, "uncontrollable"] => false,
                    _ => return Err(syntax(line, "expected `name controllable|uncontrollable`")),
                };
                pending.builder.event(tokens[0], controllable).map_err(model_err)?;
            }
            Section::States => {
                let (mut initial, mut marked) = (false, false);
                for flag in &tokens[1..] {
                    match *flag {
                        "initial" if !initial => initial = true,
                        "marked" if !marked => marked = true,
                        other => return Err(syntax(line, format!("unexpected state flag `{other}`"))),
                    }
                }
                pending.builder.state(tokens[0], initial, marked).map_err(model_err)?;
            }
            Section::Transitions => {
                let (s, e, t) = parse_transition(line, &tokens)?;
                pending.transitions.push((line, s, e, t));
            }
        }
    }

    if let Some(p) = current.take() {
        automata.push(p.finish(&mut warnings)?);
    }
    if automata.is_empty() {
        return Err(ParseError::NoAutomata);
    }
    let name = doc_name.unwrap_or_else(|| automata[0].name().to_owned());
    let doc = ModelDocument { name, automata, warnings };
    doc.check_unique_names()?;
    Ok(doc)
}

/// Native text for one automaton.
pub fn export_native(fsm: &Fsm) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "automaton {}", fsm.name());
    out.push_str("events:\n");
    for e in fsm.events() {
        let kind = if e.controllable { "controllable" } else { "uncontrollable" };
        let _ = writeln!(out, "  {} {}", e.name, kind);
    }
    out.push_str("states:\n");
    for (id, label) in fsm.state_labels().iter().enumerate() {
        out.push_str("  ");
        out.push_str(label);
        if id == fsm.initial() {
            out.push_str(" initial");
        }
        if fsm.is_marked(id) {
            out.push_str(" marked");
        }
        out.push('\n');
    }
    out.push_str("transitions:\n");
    for t in fsm.transitions() {
        let _ = writeln!(
            out,
            "  {} -{}-> {}",
            fsm.state_label(t.source),
            fsm.event(t.event).name,
            fsm.state_label(t.target)
        );
    }
    out
}

/// Native text for a whole document; automata are separated by blank lines.
pub fn export_document(doc: &ModelDocument) -> String {
    let mut out = format!("model {}\n\n", doc.name);
    let parts: Vec<String> = doc.automata.iter().map(export_native).collect();
    out.push_str(&parts.join("\n"));
    out
}

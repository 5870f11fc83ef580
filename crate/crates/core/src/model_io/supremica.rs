//! Import of the automaton subset of Supremica's XML export.
//!
//! ```xml
//! <Automata name="doc">
//!   <Automaton name="G1" type="Plant">
//!     <Events>
//!       <Event id="0" label="a1"/>
//!       <Event id="1" label="b1" controllable="false"/>
//!     </Events>
//!     <States>
//!       <State id="0" name="idle" initial="true" accepting="true"/>
//!       <State id="1" name="work"/>
//!     </States>
//!     <Transitions>
//!       <Transition source="0" dest="1" event="0"/>
//!       <Transition source="1" dest="0" event="1"/>
//!     </Transitions>
//!   </Automaton>
//! </Automata>
//! ```
//!
//! Events are controllable unless flagged otherwise. Anything outside this
//! subset is skipped and reported as a warning.

use std::collections::HashMap;

use log::warn;
use quick_xml::events::{BytesStart, Event as XmlEvent};
use quick_xml::Reader;

use crate::automata::Fsm;

use super::{ModelDocument, ParseError};

type Attrs = HashMap<String, String>;

fn attributes(el: &BytesStart<'_>) -> Result<Attrs, ParseError> {
    let mut out = HashMap::new();
    for attr in el.attributes() {
        let attr = attr.map_err(|e| ParseError::Xml(e.to_string()))?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        let value = attr.unescape_value().map_err(|e| ParseError::Xml(e.to_string()))?;
        out.insert(key, value.into_owned());
    }
    Ok(out)
}

fn required(attrs: &Attrs, element: &str, attribute: &str) -> Result<String, ParseError> {
    attrs.get(attribute).cloned().ok_or_else(|| ParseError::MissingAttribute {
        element: element.to_owned(),
        attribute: attribute.to_owned(),
    })
}

fn flag(attrs: &Attrs, attribute: &str, default: bool) -> Result<bool, ParseError> {
    match attrs.get(attribute).map(String::as_str) {
        None => Ok(default),
        Some("true") | Some("1") => Ok(true),
        Some("false") | Some("0") => Ok(false),
        Some(other) => Err(ParseError::Xml(format!("`{attribute}` must be true or false, found `{other}`"))),
    }
}

#[derive(Default)]
struct RawAutomaton {
    name: String,
    events: Vec<(String, String, bool)>,
    states: Vec<(String, String, bool, bool)>,
    transitions: Vec<(String, String, String)>,
}

impl RawAutomaton {
    fn build(self, warnings: &mut Vec<String>) -> Result<Fsm, ParseError> {
        let mut b = Fsm::builder(&self.name);
        let mut event_label = HashMap::new();
        for (id, label, controllable) in &self.events {
            b.event(label, *controllable)?;
            event_label.insert(id.as_str(), label.as_str());
        }
        let mut state_name = HashMap::new();
        for (id, name, initial, accepting) in &self.states {
            b.state(name, *initial, *accepting)?;
            state_name.insert(id.as_str(), name.as_str());
        }
        let lookup = |map: &HashMap<&str, &str>, kind: &'static str, id: &str| {
            map.get(id)
                .map(|s| s.to_string())
                .ok_or_else(|| ParseError::UndeclaredId { kind, id: id.to_owned() })
        };
        for (src, dst, ev) in &self.transitions {
            let s = lookup(&state_name, "state", src)?;
            let t = lookup(&state_name, "state", dst)?;
            let e = lookup(&event_label, "event", ev)?;
            b.transition(&s, &e, &t)?;
        }
        for label in b.unreachable_labels() {
            warnings.push(format!("{}: state `{label}` is unreachable and was dropped", self.name));
        }
        Ok(b.build()?)
    }
}

const KNOWN: &[(&str, &[&str])] = &[
    ("Automata", &["name", "major", "minor"]),
    ("Automaton", &["name", "type"]),
    ("Events", &[]),
    ("States", &[]),
    ("Transitions", &[]),
    ("Event", &["id", "label", "controllable"]),
    ("State", &["id", "name", "initial", "accepting"]),
    ("Transition", &["source", "dest", "event"]),
];

pub fn parse_supremica_xml(text: &str) -> Result<ModelDocument, ParseError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(true);

    let mut doc_name: Option<String> = None;
    let mut automata = Vec::new();
    let mut warnings = Vec::new();
    let mut current: Option<RawAutomaton> = None;
    // element names from the root down to the current element
    let mut stack: Vec<String> = Vec::new();
    let mut skip_depth: Option<usize> = None;

    loop {
        let event = reader.read_event().map_err(|e| ParseError::Xml(e.to_string()))?;
        let (el, is_empty) = match event {
            XmlEvent::Start(el) => (el, false),
            XmlEvent::Empty(el) => (el, true),
            XmlEvent::End(_) => {
                let name = stack.pop().ok_or_else(|| ParseError::Xml("unbalanced end tag".into()))?;
                if skip_depth == Some(stack.len()) {
                    skip_depth = None;
                } else if skip_depth.is_none() && name == "Automaton" {
                    if let Some(raw) = current.take() {
                        automata.push(raw.build(&mut warnings)?);
                    }
                }
                continue;
            }
            XmlEvent::Eof => break,
            _ => continue,
        };
        let name = String::from_utf8_lossy(el.name().as_ref()).into_owned();
        if skip_depth.is_some() {
            if !is_empty {
                stack.push(name);
            }
            continue;
        }

        let parent = stack.last().map(String::as_str);
        let expected_parent = match name.as_str() {
            "Automata" => parent.is_none(),
            "Automaton" => matches!(parent, None | Some("Automata")),
            "Events" | "States" | "Transitions" => parent == Some("Automaton"),
            "Event" => parent == Some("Events"),
            "State" => parent == Some("States"),
            "Transition" => parent == Some("Transitions"),
            _ => false,
        };
        if !expected_parent {
            let msg = format!("ignoring unsupported element <{name}>");
            warn!("{msg}");
            warnings.push(msg);
            if !is_empty {
                skip_depth = Some(stack.len());
                stack.push(name);
            }
            continue;
        }

        let attrs = attributes(&el)?;
        let known = KNOWN.iter().find(|(n, _)| *n == name).map(|(_, a)| *a).unwrap_or(&[]);
        let mut unknown: Vec<&String> = attrs.keys().filter(|k| !known.contains(&k.as_str())).collect();
        unknown.sort();
        for k in unknown {
            let msg = format!("ignoring attribute `{k}` on <{name}>");
            warn!("{msg}");
            warnings.push(msg);
        }

        match name.as_str() {
            "Automata" => doc_name = attrs.get("name").cloned(),
            "Automaton" => {
                current = Some(RawAutomaton { name: required(&attrs, "Automaton", "name")?, ..Default::default() });
                if is_empty {
                    let raw = current.take().expect("just set");
                    automata.push(raw.build(&mut warnings)?);
                }
            }
            "Event" => {
                let raw = current.as_mut().expect("inside Automaton");
                raw.events.push((
                    required(&attrs, "Event", "id")?,
                    required(&attrs, "Event", "label")?,
                    flag(&attrs, "controllable", true)?,
                ));
            }
            "State" => {
                let raw = current.as_mut().expect("inside Automaton");
                raw.states.push((
                    required(&attrs, "State", "id")?,
                    required(&attrs, "State", "name")?,
                    flag(&attrs, "initial", false)?,
                    flag(&attrs, "accepting", false)?,
                ));
            }
            "Transition" => {
                let raw = current.as_mut().expect("inside Automaton");
                raw.transitions.push((
                    required(&attrs, "Transition", "source")?,
                    required(&attrs, "Transition", "dest")?,
                    required(&attrs, "Transition", "event")?,
                ));
            }
            _ => {}
        }
        if !is_empty {
            stack.push(name);
        }
    }

    if !stack.is_empty() {
        return Err(ParseError::Xml(format!("unclosed element <{}>", stack.last().unwrap())));
    }
    if automata.is_empty() {
        return Err(ParseError::NoAutomata);
    }
    let name = doc_name.unwrap_or_else(|| automata[0].name().to_owned());
    let doc = ModelDocument { name, automata, warnings };
    doc.check_unique_names()?;
    Ok(doc)
}

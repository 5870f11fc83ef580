//! Reading and writing models, training configs, Q-tables and drawings.

pub mod config;
pub mod csv;
pub mod dot;
pub mod native;
pub mod supremica;

use std::path::Path;

use thiserror::Error;

use crate::automata::{compose_all, Fsm, ModelError};

pub use config::{parse_config, TrainingConfig};
pub use csv::{export_qtable_csv, export_returns_csv};
pub use dot::{export_dot, Decorations};
pub use native::{export_native, parse_native};
pub use supremica::parse_supremica_xml;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Model { line: usize, source: ModelError },
    #[error("malformed XML: {0}")]
    Xml(String),
    #[error("<{element}> is missing required attribute `{attribute}`")]
    MissingAttribute { element: String, attribute: String },
    #[error("transition references undeclared {kind} id `{id}`")]
    UndeclaredId { kind: &'static str, id: String },
    #[error("automaton `{0}` appears twice in the document")]
    DuplicateAutomaton(String),
    #[error("document contains no automata")]
    NoAutomata,
    #[error(transparent)]
    Structure(#[from] ModelError),
}

/// A named collection of automata read from one file.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub name: String,
    pub automata: Vec<Fsm>,
    /// Non-fatal findings, such as dropped unreachable states or ignored
    /// XML elements.
    pub warnings: Vec<String>,
}

impl ModelDocument {
    pub(crate) fn check_unique_names(&self) -> Result<(), ParseError> {
        for (i, a) in self.automata.iter().enumerate() {
            if self.automata[..i].iter().any(|b| b.name() == a.name()) {
                return Err(ParseError::DuplicateAutomaton(a.name().to_owned()));
            }
        }
        Ok(())
    }

    /// Synchronous composition of every automaton in the document.
    pub fn compose(&self) -> Result<Fsm, ModelError> {
        compose_all(&self.automata)
    }
}

/// Model format picked from a file extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelFormat {
    Native,
    SupremicaXml,
}

impl ModelFormat {
    pub fn from_path(path: &Path) -> ModelFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("xml") => ModelFormat::SupremicaXml,
            _ => ModelFormat::Native,
        }
    }
}

pub fn parse_model(text: &str, format: ModelFormat) -> Result<ModelDocument, ParseError> {
    match format {
        ModelFormat::Native => parse_native(text),
        ModelFormat::SupremicaXml => parse_supremica_xml(text),
    }
}

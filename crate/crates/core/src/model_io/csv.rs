//! Q-table and episode-return CSV output.

use std::fmt::Write as _;

use crate::automata::Fsm;
use crate::policy::QTable;

/// One row per state (`St. <id>`), one column per event in alphabet order.
/// Undefined cells are `-`, defined ones use two decimals.
pub fn export_qtable_csv(q: &QTable, fsm: &Fsm) -> String {
    let mut out = String::from("state");
    for e in fsm.events() {
        out.push(',');
        out.push_str(&e.name);
    }
    out.push('\n');
    for s in 0..fsm.num_states() {
        let _ = write!(out, "St. {s}");
        for e in 0..fsm.num_events() {
            match q.get(s, e) {
                Some(v) => {
                    let _ = write!(out, ",{v:.2}");
                }
                None => out.push_str(",-"),
            }
        }
        out.push('\n');
    }
    out
}

/// `episode,return` rows.
pub fn export_returns_csv(returns: &[f64]) -> String {
    let mut out = String::from("episode,return\n");
    for (i, r) in returns.iter().enumerate() {
        let _ = writeln!(out, "{i},{r}");
    }
    out
}

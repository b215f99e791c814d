//! Reversible mapping between model names and solver-safe names.

use std::collections::HashMap;

use crate::error::SolverError;
use crate::milp::MilpModel;

/// `q[H1,C1,2]` becomes `q_H1_C1_2`; anything outside `[A-Za-z0-9_.]` maps to `_`.
pub fn sanitize(name: &str) -> String {
    let mut out: String = name
        .chars()
        .filter(|&c| c != ']')
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '.' { c } else { '_' })
        .collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        out.insert(0, 'n');
    }
    out
}

/// Solver-side names of all variables and rows of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct NameMap {
    pub vars: Vec<String>,
    pub rows: Vec<String>,
    back: HashMap<String, String>,
}

pub const OBJECTIVE_ROW: &str = "obj";

impl NameMap {
    pub fn new(model: &MilpModel) -> Result<Self, SolverError> {
        let mut back = HashMap::new();
        let mut build = |names: &mut dyn Iterator<Item = &String>, reserved: &[&str]| -> Result<Vec<String>, SolverError> {
            let mut seen: HashMap<String, String> = reserved
                .iter()
                .map(|r| (r.to_string(), r.to_string()))
                .collect();
            let mut out = Vec::new();
            for name in names {
                let s = sanitize(name);
                if let Some(prev) = seen.insert(s.clone(), name.clone()) {
                    return Err(SolverError::NameCollision(prev, name.clone()));
                }
                back.insert(s.clone(), name.clone());
                out.push(s);
            }
            Ok(out)
        };
        let vars = build(&mut model.variables.iter().map(|v| &v.name), &[])?;
        let rows = build(&mut model.rows.iter().map(|r| &r.name), &[OBJECTIVE_ROW])?;
        Ok(NameMap { vars, rows, back })
    }

    /// Original name of a solver-side name.
    pub fn original<'a>(&'a self, solver_name: &'a str) -> &'a str {
        self.back.get(solver_name).map_or(solver_name, String::as_str)
    }

    /// Pairs whose sanitized form differs from the original.
    pub fn renamed(&self, model: &MilpModel) -> Vec<(String, String)> {
        let vars = model.variables.iter().map(|v| &v.name).zip(&self.vars);
        let rows = model.rows.iter().map(|r| &r.name).zip(&self.rows);
        vars.chain(rows)
            .filter(|(o, s)| o != s)
            .map(|(o, s)| (s.clone(), o.clone()))
            .collect()
    }
}

/// Parses `<prefix> <solver> <original>` comment lines back into a map.
pub fn parse_name_comments(text: &str, prefix: &str) -> HashMap<String, String> {
    text.lines()
        .filter_map(|l| l.strip_prefix(prefix))
        .filter_map(|rest| {
            let mut it = rest.split_whitespace();
            Some((it.next()?.to_string(), it.next()?.to_string()))
        })
        .collect()
}

/// Compact number formatting shared by the writers.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-5 && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

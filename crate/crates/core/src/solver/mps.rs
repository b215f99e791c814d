//! Free-format MPS (the subset this crate writes).

use std::collections::HashMap;
use std::fmt::Write as _;

use super::names::{fmt_num, parse_name_comments, NameMap, OBJECTIVE_ROW};
use crate::error::SolverError;
use crate::milp::MilpModel;
use crate::superstructure::{Sense, VarKind, VarRole};

pub(crate) const NAME_PREFIX: &str = "* name ";

/// Renders `model` as free MPS. Integer columns are wrapped in markers and
/// carry explicit bounds. Output is byte-deterministic.
pub fn write_mps(model: &MilpModel) -> Result<String, SolverError> {
    if model.variables.is_empty() {
        return Err(SolverError::Config("model has no variables".into()));
    }
    let names = NameMap::new(model)?;
    let mut out = String::new();
    let _ = writeln!(out, "* model {}", model.name);
    for (s, o) in names.renamed(model) {
        let _ = writeln!(out, "{NAME_PREFIX}{s} {o}");
    }
    let _ = writeln!(out, "NAME {}", crate::solver::names::sanitize(&model.name));
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N {OBJECTIVE_ROW}");
    for (r, row) in model.rows.iter().enumerate() {
        let t = match row.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        let _ = writeln!(out, " {t} {}", names.rows[r]);
    }
    // column-wise coefficients
    let mut cols: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.variables.len()];
    for &(i, a) in &model.objective {
        cols[i].push((OBJECTIVE_ROW.to_string(), a));
    }
    for (r, row) in model.rows.iter().enumerate() {
        for &(i, a) in &row.terms {
            cols[i].push((names.rows[r].clone(), a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut marker = 0;
    for (i, v) in model.variables.iter().enumerate() {
        let n = &names.vars[i];
        let binary = v.kind == VarKind::Binary;
        if binary {
            let _ = writeln!(out, "    M{marker} 'MARKER' 'INTORG'");
        }
        if cols[i].is_empty() {
            let _ = writeln!(out, "    {n} {OBJECTIVE_ROW} 0");
        }
        for (row, a) in &cols[i] {
            let _ = writeln!(out, "    {n} {row} {}", fmt_num(*a));
        }
        if binary {
            let _ = writeln!(out, "    M{marker} 'MARKER' 'INTEND'");
            marker += 1;
        }
    }
    out.push_str("RHS\n");
    if model.objective_constant != 0.0 {
        // MPS stores the negated objective constant on the objective row
        let _ = writeln!(out, "    RHS {OBJECTIVE_ROW} {}", fmt_num(-model.objective_constant));
    }
    for (r, row) in model.rows.iter().enumerate() {
        if row.rhs != 0.0 {
            let _ = writeln!(out, "    RHS {} {}", names.rows[r], fmt_num(row.rhs));
        }
    }
    out.push_str("BOUNDS\n");
    for (i, v) in model.variables.iter().enumerate() {
        let n = &names.vars[i];
        if v.lb == v.ub {
            let _ = writeln!(out, " FX BND {n} {}", fmt_num(v.lb));
            continue;
        }
        match (v.lb == f64::NEG_INFINITY, v.ub == f64::INFINITY) {
            (true, true) => {
                let _ = writeln!(out, " FR BND {n}");
            }
            (true, false) => {
                let _ = writeln!(out, " MI BND {n}");
                let _ = writeln!(out, " UP BND {n} {}", fmt_num(v.ub));
            }
            (false, inf_ub) => {
                let _ = writeln!(out, " LO BND {n} {}", fmt_num(v.lb));
                if inf_ub {
                    let _ = writeln!(out, " PL BND {n}");
                } else {
                    let _ = writeln!(out, " UP BND {n} {}", fmt_num(v.ub));
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

pub fn write_mps_file(model: &MilpModel, path: &std::path::Path) -> Result<(), SolverError> {
    let text = write_mps(model)?;
    std::fs::write(path, text).map_err(|e| SolverError::io(path, e))
}

fn num(s: &str) -> Result<f64, SolverError> {
    s.parse()
        .map_err(|_| SolverError::Parse(format!("bad number `{s}`")))
}

/// Reads MPS text written by [`write_mps`] back into a model.
pub fn read_mps(text: &str) -> Result<MilpModel, SolverError> {
    let map = parse_name_comments(text, NAME_PREFIX);
    let orig = |s: &str| map.get(s).cloned().unwrap_or_else(|| s.to_string());
    let mut model = MilpModel::new(String::new());
    let mut section = "";
    let mut row_sense: Vec<(String, Sense)> = Vec::new();
    let mut row_terms: HashMap<String, Vec<(String, f64)>> = HashMap::new();
    let mut rhs: HashMap<String, f64> = HashMap::new();
    let mut objective: Vec<(String, f64)> = Vec::new();
    let mut integer = false;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("* model ") {
            model.name = rest.trim().to_string();
            continue;
        }
        if line.starts_with('*') || line.trim().is_empty() {
            continue;
        }
        if !line.starts_with(' ') {
            section = line.split_whitespace().next().unwrap_or("");
            continue;
        }
        let t: Vec<&str> = line.split_whitespace().collect();
        match section {
            "ROWS" => {
                let sense = match t[0] {
                    "N" => continue,
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    s => return Err(SolverError::Parse(format!("row type `{s}`"))),
                };
                row_sense.push((t[1].to_string(), sense));
            }
            "COLUMNS" => {
                if t.get(1) == Some(&"'MARKER'") {
                    integer = t.get(2) == Some(&"'INTORG'");
                    continue;
                }
                let var = orig(t[0]);
                if model.var(&var).is_none() {
                    let kind = if integer { VarKind::Binary } else { VarKind::Continuous };
                    model
                        .add_var(&var, kind, 0.0, f64::INFINITY, VarRole::Auxiliary)
                        .map_err(|e| SolverError::Parse(e.to_string()))?;
                    // integer columns keep their explicit bounds
                    if integer {
                        model.spec_mut(&var).unwrap().ub = f64::INFINITY;
                    }
                }
                for pair in t[1..].chunks(2) {
                    let a = num(pair.get(1).copied().unwrap_or(""))?;
                    if pair[0] == OBJECTIVE_ROW {
                        if a != 0.0 {
                            objective.push((var.clone(), a));
                        }
                    } else {
                        row_terms.entry(pair[0].to_string()).or_default().push((var.clone(), a));
                    }
                }
            }
            "RHS" => {
                for pair in t[1..].chunks(2) {
                    rhs.insert(pair[0].to_string(), num(pair.get(1).copied().unwrap_or(""))?);
                }
            }
            "BOUNDS" => {
                let var = orig(t[2]);
                let spec = model
                    .spec_mut(&var)
                    .ok_or_else(|| SolverError::Parse(format!("bound on unknown `{var}`")))?;
                let val = || num(t.get(3).copied().unwrap_or(""));
                match t[0] {
                    "FX" => {
                        spec.lb = val()?;
                        spec.ub = spec.lb;
                    }
                    "FR" => {
                        spec.lb = f64::NEG_INFINITY;
                        spec.ub = f64::INFINITY;
                    }
                    "MI" => spec.lb = f64::NEG_INFINITY,
                    "PL" => spec.ub = f64::INFINITY,
                    "LO" => spec.lb = val()?,
                    "UP" => spec.ub = val()?,
                    "BV" => {
                        spec.kind = VarKind::Binary;
                        spec.lb = 0.0;
                        spec.ub = 1.0;
                    }
                    b => return Err(SolverError::Parse(format!("bound type `{b}`"))),
                }
            }
            _ => {}
        }
    }
    for (r, sense) in row_sense {
        let terms = row_terms.remove(&r).unwrap_or_default();
        let b = rhs.get(&r).copied().unwrap_or(0.0);
        model
            .add_row(orig(&r), &terms, sense, b)
            .map_err(|e| SolverError::Parse(e.to_string()))?;
    }
    for (n, a) in objective {
        model
            .add_objective(&n, a)
            .map_err(|e| SolverError::Parse(e.to_string()))?;
    }
    model.objective_constant = -rhs.get(OBJECTIVE_ROW).copied().unwrap_or(0.0);
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_model_round_trips() {
        let mut m = MilpModel::new("small");
        m.add_var("x[1]", VarKind::Continuous, 0.0, f64::INFINITY, VarRole::Auxiliary).unwrap();
        m.add_var("y", VarKind::Continuous, f64::NEG_INFINITY, 4.0, VarRole::Auxiliary).unwrap();
        m.add_var("z", VarKind::Binary, 0.0, 1.0, VarRole::Auxiliary).unwrap();
        m.add_row("c[a]", &[("x[1]".into(), 1.0), ("z".into(), -3.0)], Sense::Le, 2.5).unwrap();
        m.add_row("d", &[("y".into(), 1.0)], Sense::Eq, 0.0).unwrap();
        m.add_objective("x[1]", 2.0).unwrap();
        m.add_objective("z", 7.0).unwrap();
        m.objective_constant = 1.5;
        let text = write_mps(&m).unwrap();
        assert_eq!(read_mps(&text).unwrap(), m);
    }
}

//! CPLEX-style LP text format (the subset this crate writes).

use std::collections::HashMap;
use std::fmt::Write as _;

use super::names::{fmt_num, parse_name_comments, NameMap, OBJECTIVE_ROW};
use crate::error::SolverError;
use crate::milp::MilpModel;
use crate::superstructure::{Sense, VarKind, VarRole};

const NAME_PREFIX: &str = "\\ name ";
const TERMS_PER_LINE: usize = 6;

fn write_terms(out: &mut String, terms: &[(usize, f64)], names: &[String], fallback: &str) {
    if terms.is_empty() {
        let _ = write!(out, " 0 {fallback}");
        return;
    }
    for (n, &(i, a)) in terms.iter().enumerate() {
        if n > 0 && n % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if a < 0.0 { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", fmt_num(a.abs()), names[i]);
    }
}

fn bound(v: f64) -> String {
    if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        fmt_num(v)
    }
}

/// Renders `model` as LP text. Output is byte-deterministic.
pub fn write_lp(model: &MilpModel) -> Result<String, SolverError> {
    if model.variables.is_empty() {
        return Err(SolverError::Config("model has no variables".into()));
    }
    let names = NameMap::new(model)?;
    let first = &names.vars[0];
    let mut out = String::new();
    let _ = writeln!(out, "\\ model {}", model.name);
    for (s, o) in names.renamed(model) {
        let _ = writeln!(out, "{NAME_PREFIX}{s} {o}");
    }
    out.push_str("Minimize\n ");
    out.push_str(OBJECTIVE_ROW);
    out.push(':');
    write_terms(&mut out, &model.objective, &names.vars, first);
    if model.objective_constant != 0.0 {
        let c = model.objective_constant;
        let _ = write!(out, " {} {}", if c < 0.0 { '-' } else { '+' }, fmt_num(c.abs()));
    }
    out.push_str("\nSubject To\n");
    for (r, row) in model.rows.iter().enumerate() {
        let _ = write!(out, " {}:", names.rows[r]);
        write_terms(&mut out, &row.terms, &names.vars, first);
        let _ = writeln!(out, " {} {}", row.sense, fmt_num(row.rhs));
    }
    out.push_str("Bounds\n");
    for (i, v) in model.variables.iter().enumerate() {
        let n = &names.vars[i];
        if v.lb == v.ub {
            let _ = writeln!(out, " {n} = {}", fmt_num(v.lb));
        } else if v.lb == f64::NEG_INFINITY && v.ub == f64::INFINITY {
            let _ = writeln!(out, " {n} free");
        } else {
            let _ = writeln!(out, " {} <= {n} <= {}", bound(v.lb), bound(v.ub));
        }
    }
    let binaries: Vec<&String> = model
        .variables
        .iter()
        .zip(&names.vars)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n)
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for n in binaries {
            let _ = writeln!(out, " {n}");
        }
    }
    out.push_str("End\n");
    Ok(out)
}

pub fn write_lp_file(model: &MilpModel, path: &std::path::Path) -> Result<(), SolverError> {
    let text = write_lp(model)?;
    std::fs::write(path, text).map_err(|e| SolverError::io(path, e))
}

fn parse_num(s: &str) -> Result<f64, SolverError> {
    match s {
        "+inf" | "inf" | "+infinity" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => s
            .parse()
            .map_err(|_| SolverError::Parse(format!("bad number `{s}`"))),
    }
}

/// Parses `± coef name ± coef name ...` into name/coefficient pairs.
fn parse_terms(tokens: &[&str]) -> Result<Vec<(String, f64)>, SolverError> {
    let mut out = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for &t in tokens {
        match t {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ => match t.parse::<f64>() {
                Ok(v) if coef.is_none() => coef = Some(v),
                _ => {
                    out.push((t.to_string(), sign * coef.unwrap_or(1.0)));
                    sign = 1.0;
                    coef = None;
                }
            },
        }
    }
    Ok(out)
}

/// Reads LP text written by [`write_lp`] back into a model. Variable roles
/// are not stored in the file and come back as `Auxiliary`.
pub fn read_lp(text: &str) -> Result<MilpModel, SolverError> {
    let map = parse_name_comments(text, NAME_PREFIX);
    let orig = |s: &str| map.get(s).cloned().unwrap_or_else(|| s.to_string());
    let mut name = String::new();
    let mut section = "";
    // statements may continue over several lines; join them first
    let mut statements: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("\\ model ") {
            name = rest.trim().to_string();
            continue;
        }
        if line.starts_with('\\') || line.trim().is_empty() {
            continue;
        }
        let head = line.trim();
        match head {
            "Minimize" | "Subject To" | "Bounds" | "Binaries" | "End" => {
                section = match head {
                    "Minimize" => "obj",
                    "Subject To" => "rows",
                    "Bounds" => "bounds",
                    "Binaries" => "bin",
                    _ => "end",
                };
                continue;
            }
            _ => {}
        }
        if line.starts_with("   ") {
            if let Some(last) = statements.last_mut() {
                last.1.push(' ');
                last.1.push_str(head);
                continue;
            }
        }
        statements.push((section.to_string(), head.to_string()));
    }

    let mut model = MilpModel::new(name);
    let mut objective: Vec<(String, f64)> = Vec::new();
    let mut constant = 0.0;
    let mut rows: Vec<(String, Vec<(String, f64)>, Sense, f64)> = Vec::new();
    let mut binaries: Vec<String> = Vec::new();
    for (section, stmt) in &statements {
        match section.as_str() {
            "obj" => {
                let body = stmt.split_once(':').map_or(stmt.as_str(), |(_, b)| b);
                let tokens: Vec<&str> = body.split_whitespace().collect();
                // a trailing `± number` without a name is the constant
                let n = tokens.len();
                let mut terms = &tokens[..];
                if n >= 2 && matches!(tokens[n - 2], "+" | "-") {
                    if let Ok(c) = tokens[n - 1].parse::<f64>() {
                        constant = if tokens[n - 2] == "-" { -c } else { c };
                        terms = &tokens[..n - 2];
                    }
                }
                objective = parse_terms(terms)?;
            }
            "rows" => {
                let (rname, body) = stmt
                    .split_once(':')
                    .ok_or_else(|| SolverError::Parse(format!("row without name: {stmt}")))?;
                let tokens: Vec<&str> = body.split_whitespace().collect();
                let pos = tokens
                    .iter()
                    .position(|t| matches!(*t, "<=" | ">=" | "="))
                    .ok_or_else(|| SolverError::Parse(format!("row without sense: {stmt}")))?;
                let sense = match tokens[pos] {
                    "<=" => Sense::Le,
                    ">=" => Sense::Ge,
                    _ => Sense::Eq,
                };
                let rhs = parse_num(tokens.get(pos + 1).copied().unwrap_or(""))?;
                rows.push((orig(rname.trim()), parse_terms(&tokens[..pos])?, sense, rhs));
            }
            "bounds" => {
                let t: Vec<&str> = stmt.split_whitespace().collect();
                let (var, lb, ub) = match t.as_slice() {
                    [v, "free"] => (*v, f64::NEG_INFINITY, f64::INFINITY),
                    [v, "=", x] => (*v, parse_num(x)?, parse_num(x)?),
                    [lo, "<=", v, "<=", hi] => (*v, parse_num(lo)?, parse_num(hi)?),
                    _ => return Err(SolverError::Parse(format!("bad bound: {stmt}"))),
                };
                model
                    .add_var(orig(var), VarKind::Continuous, lb, ub, VarRole::Auxiliary)
                    .map_err(|e| SolverError::Parse(e.to_string()))?;
            }
            "bin" => binaries.push(orig(stmt)),
            _ => {}
        }
    }
    for b in binaries {
        let spec = model
            .spec_mut(&b)
            .ok_or_else(|| SolverError::Parse(format!("unknown binary `{b}`")))?;
        spec.kind = VarKind::Binary;
    }
    let zero_terms = |terms: Vec<(String, f64)>| -> Vec<(String, f64)> {
        terms.into_iter().filter(|(_, a)| *a != 0.0).collect()
    };
    for (rname, terms, sense, rhs) in rows {
        let terms: Vec<(String, f64)> = zero_terms(terms)
            .into_iter()
            .map(|(n, a)| (orig(&n), a))
            .collect();
        model
            .add_row(rname, &terms, sense, rhs)
            .map_err(|e| SolverError::Parse(e.to_string()))?;
    }
    for (n, a) in zero_terms(objective) {
        model
            .add_objective(&orig(&n), a)
            .map_err(|e| SolverError::Parse(e.to_string()))?;
    }
    model.objective_constant = constant;
    Ok(model)
}

/// Solver-name to model-name map embedded in an LP or MPS file.
pub fn parse_names(text: &str) -> HashMap<String, String> {
    let mut map = parse_name_comments(text, NAME_PREFIX);
    map.extend(parse_name_comments(text, super::mps::NAME_PREFIX));
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_variable_model() {
        let mut m = MilpModel::new("one");
        m.add_var("x", VarKind::Continuous, 0.0, f64::INFINITY, VarRole::Auxiliary)
            .unwrap();
        m.add_row("c1", &[("x".into(), 1.0)], Sense::Ge, 1.0).unwrap();
        m.add_objective("x", 1.0).unwrap();
        let text = write_lp(&m).unwrap();
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('\\')).collect();
        assert_eq!(
            body,
            vec!["Minimize", " obj: + 1 x", "Subject To", " c1: + 1 x >= 1", "Bounds", " 0 <= x <= +inf", "End"]
        );
        assert_eq!(read_lp(&text).unwrap(), m);
    }
}

//! Adapter for HiGHS through its Python bindings (`highspy`). A small driver
//! script reads the model file, solves it and writes a JSON result.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::Deserialize;

use super::solution::{ConvergenceTrace, SolveStatus, Solution};
use super::SolverConfig;
use crate::error::SolverError;

pub const DRIVER: &str = r#"import json, sys
import highspy

model, out, gap, limit, threads, seed = sys.argv[1:7]
h = highspy.Highs()
h.setOptionValue("mip_rel_gap", float(gap))
h.setOptionValue("time_limit", float(limit))
h.setOptionValue("threads", int(threads))
h.setOptionValue("random_seed", int(seed))
h.readModel(model)
h.run()
info = h.getInfo()
lp = h.getLp()
values = {}
if info.primal_solution_status == 2:
    col = h.getSolution().col_value
    values = {lp.col_names_[i]: col[i] for i in range(lp.num_col_)}
with open(out, "w") as f:
    json.dump({
        "status": h.modelStatusToString(h.getModelStatus()),
        "objective": info.objective_function_value if values else None,
        "bound": info.mip_dual_bound,
        "values": values,
    }, f)
"#;

/// Branch-and-bound table row: `src proc inqueue leaves expl% bound sol gap cuts inlp confl iters time`.
static ROW: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^\s*[A-Za-z]?\s+\d+\s+\d+\s+\d+\s+[\d.]+%\s+(\S+)\s+(\S+)\s+\S+\s+\d+\s+\d+\s+\d+\s+\d+\s+([\d.]+)s\s*$",
    )
    .unwrap()
});

fn finite(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn parse_highs_log(text: &str) -> ConvergenceTrace {
    let mut trace = ConvergenceTrace::default();
    for line in text.lines() {
        if let Some(c) = ROW.captures(line) {
            if let Some(t) = finite(&c[3]) {
                trace.push(t, finite(&c[2]), finite(&c[1]));
            }
        }
    }
    trace
}

#[derive(Debug, Deserialize)]
pub struct HighsResult {
    pub status: String,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
}

pub fn parse_highs_result(text: &str) -> Result<HighsResult, SolverError> {
    serde_json::from_str(text).map_err(|e| SolverError::Parse(format!("HiGHS result: {e}")))
}

pub fn assemble(result: &HighsResult, wall_time: f64) -> Solution {
    let status = match result.status.as_str() {
        "Optimal" => SolveStatus::Optimal,
        "Infeasible" => SolveStatus::Infeasible,
        "Time limit reached" => SolveStatus::TimeLimit,
        _ if !result.values.is_empty() => SolveStatus::Feasible,
        _ => SolveStatus::Error,
    };
    let mut sol = Solution::empty(status, "highs", wall_time);
    if status.has_solution() && result.objective.is_some() {
        sol.values = result.values.clone();
        sol.objective = result.objective;
        sol.best_bound = result.bound.filter(|b| b.is_finite());
    }
    sol.refresh_gap();
    sol
}

pub fn command_args(driver: &str, model_file: &str, result_file: &str, cfg: &SolverConfig) -> Vec<String> {
    vec![
        driver.into(),
        model_file.into(),
        result_file.into(),
        format!("{}", cfg.rel_gap),
        format!("{}", cfg.time_limit),
        format!("{}", cfg.threads),
        format!("{}", cfg.seed),
    ]
}

/// Python interpreter with `highspy`: explicit path, `HENS_PYTHON`, then `python3`.
pub fn find_python(explicit: Option<&Path>) -> Result<PathBuf, SolverError> {
    let candidate = explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os("HENS_PYTHON").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("python3"));
    let ok = std::process::Command::new(&candidate)
        .args(["-c", "import highspy"])
        .output()
        .is_ok_and(|o| o.status.success());
    if ok {
        Ok(candidate)
    } else {
        Err(SolverError::NotFound(format!(
            "{} with the highspy module",
            candidate.display()
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows_become_trace_samples() {
        let log = " J       0       0         0   0.00%   -inf            7                  Large        0      0      0         0     0.0s
 R       0       0         0   0.00%   4.75            5                  5.00%        0      0      0         2     0.1s
         1       0         1 100.00%   5               5                  0.00%        1      1      0         3     0.2s
";
        let t = parse_highs_log(log);
        assert_eq!(t.samples.len(), 3);
        assert_eq!(t.samples[0].bound, None);
        assert_eq!(t.samples[1].bound, Some(4.75));
        assert_eq!(t.samples[2].incumbent, Some(5.0));
    }
}

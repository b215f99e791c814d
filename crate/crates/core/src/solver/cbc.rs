//! Adapter for the CBC command-line solver.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;

use super::solution::{ConvergenceTrace, SolveStatus, Solution};
use super::SolverConfig;
use crate::error::SolverError;

/// CBC reports "no solution" as an objective of 1e50.
const NO_SOLUTION: f64 = 1e49;

struct Patterns {
    continuous: Regex,
    incumbent: Regex,
    progress: Regex,
    root: Regex,
    completed: Regex,
    result: Regex,
    objective: Regex,
    lower_bound: Regex,
    wall: Regex,
    infeasible: Regex,
    exit_gap: Regex,
}

/// Log-line regex table.
static CBC: LazyLock<Patterns> = LazyLock::new(|| Patterns {
    continuous: Regex::new(r"^Continuous objective value is (\S+) - ([\d.]+) seconds").unwrap(),
    incumbent: Regex::new(r"^Cbc00(?:12|04)I Integer solution of (\S+) found .*\(([\d.]+) seconds\)").unwrap(),
    progress: Regex::new(
        r"^Cbc0010I After \d+ nodes, \d+ on tree, (\S+) best solution, best possible (\S+) \(([\d.]+) seconds\)",
    )
    .unwrap(),
    root: Regex::new(r"^Cbc0013I At root node, .* changed objective from \S+ to (\S+)").unwrap(),
    completed: Regex::new(r"^Cbc0001I Search completed - best objective (\S+), took .*\(([\d.]+) seconds\)").unwrap(),
    result: Regex::new(r"^Result - (.+)$").unwrap(),
    objective: Regex::new(r"^Objective value:\s+(\S+)").unwrap(),
    lower_bound: Regex::new(r"^Lower bound:\s+(\S+)").unwrap(),
    wall: Regex::new(r"^Time \(Wallclock seconds\):\s+(\S+)").unwrap(),
    exit_gap: Regex::new(r"^Cbc0011I Exiting as integer gap of (\S+) less than").unwrap(),
    infeasible: Regex::new(r"^Problem is infeasible|^Cbc0006I The LP relaxation is infeasible$").unwrap(),
});

/// Facts extracted from a CBC log.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CbcLog {
    pub trace: ConvergenceTrace,
    pub result: Option<String>,
    pub objective: Option<f64>,
    pub bound: Option<f64>,
    pub wall_time: Option<f64>,
    pub infeasible: bool,
    /// Absolute gap reported when the search stopped on the gap tolerance.
    pub exit_gap: Option<f64>,
}

fn num(s: &str) -> Option<f64> {
    s.trim_end_matches(',').parse().ok()
}

fn incumbent(v: Option<f64>) -> Option<f64> {
    v.filter(|x| x.abs() < NO_SOLUTION)
}

pub fn parse_cbc_log(text: &str) -> CbcLog {
    let p = &*CBC;
    let mut out = CbcLog::default();
    let mut t_last = 0.0;
    for line in text.lines() {
        let line = line.trim_end();
        if let Some(c) = p.continuous.captures(line) {
            t_last = num(&c[2]).unwrap_or(t_last);
            out.trace.push(t_last, None, num(&c[1]));
        } else if let Some(c) = p.incumbent.captures(line) {
            t_last = num(&c[2]).unwrap_or(t_last);
            out.trace.push(t_last, incumbent(num(&c[1])), None);
        } else if let Some(c) = p.progress.captures(line) {
            t_last = num(&c[3]).unwrap_or(t_last);
            out.trace.push(t_last, incumbent(num(&c[1])), num(&c[2]));
        } else if let Some(c) = p.root.captures(line) {
            out.trace.push(t_last, None, num(&c[1]));
        } else if let Some(c) = p.completed.captures(line) {
            t_last = num(&c[2]).unwrap_or(t_last);
            out.trace.push(t_last, incumbent(num(&c[1])), None);
        } else if let Some(c) = p.result.captures(line) {
            out.result = Some(c[1].trim().to_string());
        } else if let Some(c) = p.objective.captures(line) {
            out.objective = incumbent(num(&c[1]));
        } else if let Some(c) = p.lower_bound.captures(line) {
            out.bound = num(&c[1]);
        } else if let Some(c) = p.wall.captures(line) {
            out.wall_time = num(&c[1]);
        } else if let Some(c) = p.exit_gap.captures(line) {
            out.exit_gap = num(&c[1]);
        } else if p.infeasible.is_match(line) {
            out.infeasible = true;
        }
    }
    out
}

/// Parsed CBC solution file: header status text, objective and values by
/// solver-side name.
#[derive(Debug, Clone, PartialEq)]
pub struct CbcSolutionFile {
    pub header: String,
    pub objective: Option<f64>,
    pub values: BTreeMap<String, f64>,
}

impl CbcSolutionFile {
    pub fn status(&self) -> SolveStatus {
        let h = self.header.to_ascii_lowercase();
        if h.contains("infeasible") {
            SolveStatus::Infeasible
        } else if h.starts_with("optimal") {
            SolveStatus::Optimal
        } else if h.contains("no integer solution") {
            SolveStatus::TimeLimit
        } else if h.starts_with("stopped on time") {
            SolveStatus::TimeLimit
        } else if h.starts_with("stopped") {
            SolveStatus::Feasible
        } else {
            SolveStatus::Error
        }
    }

    /// True when the values are an integer-feasible incumbent.
    pub fn has_incumbent(&self) -> bool {
        let h = self.header.to_ascii_lowercase();
        !h.contains("infeasible") && !h.contains("no integer solution") && !h.contains("unbounded")
    }
}

pub fn parse_cbc_solution(text: &str) -> Result<CbcSolutionFile, SolverError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| SolverError::Parse("empty solution file".into()))?
        .trim()
        .to_string();
    let objective = header
        .rsplit_once("objective value")
        .and_then(|(_, v)| num(v.trim()))
        .filter(|v| v.abs() < NO_SOLUTION);
    let mut values = BTreeMap::new();
    for line in lines {
        let t: Vec<&str> = line.trim_start_matches("**").split_whitespace().collect();
        if t.len() < 3 {
            continue;
        }
        let v = num(t[2]).ok_or_else(|| SolverError::Parse(format!("bad value line `{line}`")))?;
        values.insert(t[1].to_string(), v);
    }
    Ok(CbcSolutionFile {
        header,
        objective,
        values,
    })
}

pub fn command_args(model_file: &str, solution_file: &str, cfg: &SolverConfig) -> Vec<String> {
    vec![
        model_file.into(),
        "-ratioGap".into(),
        format!("{}", cfg.rel_gap),
        "-allowableGap".into(),
        "0".into(),
        "-seconds".into(),
        format!("{}", cfg.time_limit),
        "-threads".into(),
        format!("{}", cfg.threads),
        "-randomCbcSeed".into(),
        format!("{}", cfg.seed.max(1)),
        "-solve".into(),
        "-solution".into(),
        solution_file.into(),
    ]
}

/// Combines the log and the solution file into a [`Solution`] keyed by
/// solver-side names.
pub fn assemble(log: &CbcLog, file: Option<&CbcSolutionFile>, wall_time: f64) -> Solution {
    let mut sol = Solution::empty(SolveStatus::Error, "cbc", log.wall_time.unwrap_or(wall_time));
    let result = log.result.as_deref().unwrap_or("").to_ascii_lowercase();
    let mut status = if result.starts_with("optimal") {
        SolveStatus::Optimal
    } else if result.contains("infeasible") || log.infeasible {
        SolveStatus::Infeasible
    } else if result.contains("time") {
        SolveStatus::TimeLimit
    } else if result.starts_with("stopped") {
        SolveStatus::Feasible
    } else {
        file.map_or(SolveStatus::Error, |f| f.status())
    };
    if let Some(f) = file {
        if f.status() == SolveStatus::Infeasible && status != SolveStatus::TimeLimit {
            status = SolveStatus::Infeasible;
        }
        if f.has_incumbent() && status.has_solution() {
            sol.values = f.values.clone();
            sol.objective = f.objective.or(log.objective);
        }
    }
    sol.status = status;
    if let Some(obj) = sol.objective {
        sol.best_bound = match status {
            // a closed search proves the incumbent up to the exit gap
            SolveStatus::Optimal => Some(log.exit_gap.map_or(obj, |g| obj - g.abs())),
            _ => log.bound.or(log.trace.last().and_then(|p| p.bound)),
        };
    }
    sol.refresh_gap();
    sol
}

/// Locates a CBC executable: explicit path, `HENS_SOLVER_PATH`, `cbc` on
/// `PATH`, then the copy bundled with the PuLP Python package.
pub fn find_cbc(explicit: Option<&Path>) -> Result<PathBuf, SolverError> {
    if let Some(p) = explicit {
        return if p.is_file() {
            Ok(p.to_path_buf())
        } else {
            Err(SolverError::NotFound(p.display().to_string()))
        };
    }
    if let Some(p) = std::env::var_os("HENS_SOLVER_PATH") {
        let p = PathBuf::from(p);
        if p.is_file() {
            return Ok(p);
        }
    }
    if let Some(paths) = std::env::var_os("PATH") {
        for dir in std::env::split_paths(&paths) {
            let p = dir.join("cbc");
            if p.is_file() {
                return Ok(p);
            }
        }
    }
    let probe = std::process::Command::new("python3")
        .args([
            "-c",
            "import pulp, os; print(pulp.apis.PULP_CBC_CMD().path or '')",
        ])
        .output();
    if let Ok(out) = probe {
        let p = PathBuf::from(String::from_utf8_lossy(&out.stdout).trim());
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(SolverError::NotFound(
        "cbc (set HENS_SOLVER_PATH or put cbc on PATH)".into(),
    ))
}

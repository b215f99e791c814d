//! Model writers, solver adapters and solution/log parsing.
//!
//! The adapter boundary is "model file in, solution file plus log out": the
//! model is written to a work directory, the solver runs as a child process
//! and its log and solution file are parsed back into model names.

pub mod cbc;
pub mod highs;
pub mod lp;
pub mod mps;
pub mod names;
pub mod process;
pub mod solution;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::SolverError;
use crate::milp::MilpModel;
use crate::superstructure::SolverSettings;

pub use lp::{parse_names, read_lp, write_lp, write_lp_file};
pub use mps::{read_mps, write_mps, write_mps_file};
pub use names::{sanitize, NameMap};
pub use process::CancelToken;
pub use solution::{relative_gap, ConvergenceTrace, SolveStatus, Solution, TracePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Adapter {
    Cbc,
    Highs,
}

impl std::str::FromStr for Adapter {
    type Err = SolverError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cbc" => Ok(Adapter::Cbc),
            "highs" => Ok(Adapter::Highs),
            other => Err(SolverError::Config(format!("unknown solver adapter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFormat {
    Lp,
    Mps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub adapter: Adapter,
    /// Solver executable (CBC) or Python interpreter (HiGHS); discovered when unset.
    pub executable: Option<PathBuf>,
    pub rel_gap: f64,
    pub time_limit: f64,
    pub threads: usize,
    pub seed: u64,
    pub format: ModelFormat,
    /// Where model, log and solution files go; a temporary directory when unset.
    pub work_dir: Option<PathBuf>,
    /// Extra wall-clock allowance past `time_limit` before the child is killed.
    pub grace: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            adapter: Adapter::Cbc,
            executable: None,
            rel_gap: 1e-4,
            time_limit: 3600.0,
            threads: 1,
            seed: 0,
            format: ModelFormat::Lp,
            work_dir: None,
            grace: 60.0,
        }
    }
}

impl SolverConfig {
    pub fn from_settings(s: &SolverSettings) -> Result<Self, SolverError> {
        Ok(SolverConfig {
            adapter: s.adapter.parse()?,
            rel_gap: s.rel_gap,
            time_limit: s.time_limit,
            threads: s.threads,
            seed: s.seed,
            ..Default::default()
        })
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.rel_gap > 0.0 && self.rel_gap < 1.0) {
            return Err(SolverError::Config(format!("rel_gap {} outside (0, 1)", self.rel_gap)));
        }
        if !(self.time_limit > 0.0) {
            return Err(SolverError::Config(format!("time_limit {} must be positive", self.time_limit)));
        }
        if self.threads == 0 {
            return Err(SolverError::Config("threads must be at least 1".into()));
        }
        Ok(())
    }
}

/// Optional hooks for a running solve.
#[derive(Default)]
pub struct SolveControl<'a> {
    pub cancel: Option<CancelToken>,
    pub on_line: Option<&'a mut dyn FnMut(&str)>,
}

pub fn solve(model: &MilpModel, cfg: &SolverConfig) -> Result<(Solution, ConvergenceTrace), SolverError> {
    solve_with(model, cfg, SolveControl::default())
}

pub fn solve_with(
    model: &MilpModel,
    cfg: &SolverConfig,
    mut control: SolveControl<'_>,
) -> Result<(Solution, ConvergenceTrace), SolverError> {
    cfg.validate()?;
    let names = NameMap::new(model)?;
    let temp;
    let dir: &Path = match &cfg.work_dir {
        Some(d) => {
            std::fs::create_dir_all(d).map_err(|e| SolverError::io(d, e))?;
            d
        }
        None => {
            temp = tempfile::tempdir().map_err(|e| SolverError::io(std::env::temp_dir(), e))?;
            temp.path()
        }
    };
    let model_file = match cfg.format {
        ModelFormat::Lp => {
            let p = dir.join("model.lp");
            write_lp_file(model, &p)?;
            p
        }
        ModelFormat::Mps => {
            let p = dir.join("model.mps");
            write_mps_file(model, &p)?;
            p
        }
    };
    let model_arg = model_file.file_name().unwrap().to_string_lossy().into_owned();
    let deadline = Some(Duration::from_secs_f64(cfg.time_limit + cfg.grace));
    let mut sink = |line: &str| {
        log::trace!("{line}");
        if let Some(f) = control.on_line.as_mut() {
            f(line);
        }
    };
    let (mut sol, mut trace, outcome) = match cfg.adapter {
        Adapter::Cbc => {
            let exe = cbc::find_cbc(cfg.executable.as_deref())?;
            let sol_file = dir.join("solution.txt");
            let _ = std::fs::remove_file(&sol_file);
            let args = cbc::command_args(&model_arg, "solution.txt", cfg);
            let outcome = process::run(&exe, &args, dir, deadline, control.cancel.as_ref(), &mut sink)?;
            let log = cbc::parse_cbc_log(&outcome.log);
            let file = match std::fs::read_to_string(&sol_file) {
                Ok(text) => Some(cbc::parse_cbc_solution(&text)?),
                Err(_) => None,
            };
            let sol = cbc::assemble(&log, file.as_ref(), outcome.wall_time);
            (sol, log.trace, outcome)
        }
        Adapter::Highs => {
            let exe = highs::find_python(cfg.executable.as_deref())?;
            let driver = dir.join("highs_driver.py");
            std::fs::write(&driver, highs::DRIVER).map_err(|e| SolverError::io(&driver, e))?;
            let result_file = dir.join("result.json");
            let _ = std::fs::remove_file(&result_file);
            let args = highs::command_args("highs_driver.py", &model_arg, "result.json", cfg);
            let outcome = process::run(&exe, &args, dir, deadline, control.cancel.as_ref(), &mut sink)?;
            let trace = highs::parse_highs_log(&outcome.log);
            let sol = match std::fs::read_to_string(&result_file) {
                Ok(text) => highs::assemble(&highs::parse_highs_result(&text)?, outcome.wall_time),
                Err(_) => Solution::empty(SolveStatus::Error, "highs", outcome.wall_time),
            };
            (sol, trace, outcome)
        }
    };
    let _ = std::fs::write(dir.join("solver.log"), &outcome.log);
    if outcome.cancelled {
        let mut s = Solution::empty(SolveStatus::Error, &sol.solver, outcome.wall_time);
        s.best_bound = trace.last().and_then(|p| p.bound);
        return Ok((s, trace));
    }
    if outcome.timed_out {
        // killed by the watchdog: keep the trace but no values are available
        let mut s = Solution::empty(SolveStatus::TimeLimit, &sol.solver, outcome.wall_time);
        s.best_bound = trace.last().and_then(|p| p.bound);
        return Ok((s, trace));
    }
    if !outcome.success && sol.status == SolveStatus::Error {
        let tail: Vec<&str> = outcome.log.lines().rev().take(5).collect();
        return Err(SolverError::Crashed(format!(
            "exit code {:?}: {}",
            outcome.exit_code,
            tail.into_iter().rev().collect::<Vec<_>>().join(" | ")
        )));
    }
    sol.values = sol
        .values
        .into_iter()
        .map(|(k, v)| (names.original(&k).to_string(), v))
        .collect::<BTreeMap<_, _>>();
    sol.wall_time = sol.wall_time.max(0.0);
    trace.close(&sol);
    Ok((sol, trace))
}

/// Solves `repeats` times and keeps the run with the lowest wall time.
pub fn solve_repeated(
    model: &MilpModel,
    cfg: &SolverConfig,
    repeats: usize,
) -> Result<(Solution, ConvergenceTrace), SolverError> {
    let mut best: Option<(Solution, ConvergenceTrace)> = None;
    for _ in 0..repeats.max(1) {
        let run = solve(model, cfg)?;
        if best.as_ref().is_none_or(|b| run.0.wall_time < b.0.wall_time) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

/// Rows and bounds of `model` violated by the solution values beyond `tol`.
///
/// Row violations are measured relative to the row's magnitude, since solvers
/// print values with limited precision.
pub fn check_solution(model: &MilpModel, solution: &Solution, tol: f64) -> Vec<(String, f64)> {
    let x = model.point(&solution.values);
    let rows: std::collections::BTreeMap<&str, f64> = model
        .rows
        .iter()
        .map(|r| {
            let scale = r
                .terms
                .iter()
                .map(|&(j, a)| (a * x[j]).abs())
                .fold(r.rhs.abs(), f64::max)
                .max(1.0);
            (r.name.as_str(), scale)
        })
        .collect();
    model
        .violations(&x, tol)
        .into_iter()
        .filter(|(name, v)| rows.get(name.as_str()).map_or(true, |&s| *v > tol * s))
        .collect()
}

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    TimeLimit,
    Error,
}

impl SolveStatus {
    /// True when the solver returned a usable incumbent status.
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible | SolveStatus::TimeLimit)
    }
}

/// Relative gap `|objective − bound| / max(|objective|, ε)`.
pub fn relative_gap(objective: f64, bound: f64) -> f64 {
    (objective - bound).abs() / objective.abs().max(1e-10)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    /// Values by model name; empty when no incumbent exists.
    pub values: BTreeMap<String, f64>,
    pub objective: Option<f64>,
    pub best_bound: Option<f64>,
    pub rel_gap: Option<f64>,
    pub wall_time: f64,
    pub solver: String,
}

impl Solution {
    pub fn empty(status: SolveStatus, solver: &str, wall_time: f64) -> Self {
        Solution {
            status,
            values: BTreeMap::new(),
            objective: None,
            best_bound: None,
            rel_gap: None,
            wall_time,
            solver: solver.to_string(),
        }
    }

    pub fn value(&self, name: &str) -> f64 {
        self.values.get(name).copied().unwrap_or(0.0)
    }

    pub fn has_incumbent(&self) -> bool {
        self.objective.is_some() && self.status.has_solution()
    }

    /// Recomputes `rel_gap` from objective and bound.
    pub fn refresh_gap(&mut self) {
        self.rel_gap = match (self.objective, self.best_bound) {
            (Some(o), Some(b)) => Some(relative_gap(o, b)),
            _ => None,
        };
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub time_s: f64,
    pub incumbent: Option<f64>,
    pub bound: Option<f64>,
}

impl TracePoint {
    pub fn gap_pct(&self) -> Option<f64> {
        Some(100.0 * relative_gap(self.incumbent?, self.bound?))
    }
}

/// Incumbent and bound over time, with strictly increasing times.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub samples: Vec<TracePoint>,
}

impl ConvergenceTrace {
    /// Appends a sample. Missing values carry over from the previous sample;
    /// a sample at the same time as the last one replaces it, an earlier one
    /// is dropped.
    pub fn push(&mut self, time_s: f64, incumbent: Option<f64>, bound: Option<f64>) {
        let prev = self.samples.last().copied();
        let point = TracePoint {
            time_s,
            incumbent: incumbent.or(prev.and_then(|p| p.incumbent)),
            bound: bound.or(prev.and_then(|p| p.bound)),
        };
        match prev {
            Some(p) if time_s < p.time_s => {}
            Some(p) if time_s == p.time_s => *self.samples.last_mut().unwrap() = point,
            _ => self.samples.push(point),
        }
    }

    pub fn last(&self) -> Option<&TracePoint> {
        self.samples.last()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Ensures the final sample reports the solution's objective and bound.
    pub fn close(&mut self, solution: &Solution) {
        let last_t = self.last().map_or(0.0, |p| p.time_s);
        let t = solution.wall_time.max(last_t);
        if solution.objective.is_some() || solution.best_bound.is_some() {
            let incumbent = solution.objective.or(self.last().and_then(|p| p.incumbent));
            let bound = solution.best_bound.or(self.last().and_then(|p| p.bound));
            if self.last().map(|p| (p.incumbent, p.bound)) != Some((incumbent, bound)) {
                self.push(t, incumbent, bound);
                if let Some(p) = self.samples.last_mut() {
                    p.incumbent = incumbent;
                    p.bound = bound;
                }
            }
        }
    }

    /// CSV with header `time_s,incumbent,bound,gap_pct`; missing values are empty.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x}"));
        let mut out = String::from("time_s,incumbent,bound,gap_pct\n");
        for p in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                p.time_s,
                opt(p.incumbent),
                opt(p.bound),
                opt(p.gap_pct())
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut trace = ConvergenceTrace::default();
        for (n, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(format!("line {}: expected 4 fields", n + 1));
            }
            let opt = |s: &str| -> Result<Option<f64>, String> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse().map(Some).map_err(|_| format!("line {}: bad number `{s}`", n + 1))
                }
            };
            let t = opt(f[0])?.ok_or_else(|| format!("line {}: missing time", n + 1))?;
            trace.samples.push(TracePoint {
                time_s: t,
                incumbent: opt(f[1])?,
                bound: opt(f[2])?,
            });
        }
        Ok(trace)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_times_increase_strictly() {
        let mut t = ConvergenceTrace::default();
        t.push(0.1, None, Some(5.0));
        t.push(0.5, Some(9.0), None);
        t.push(0.5, Some(8.0), Some(6.0));
        t.push(0.3, Some(1.0), None);
        assert_eq!(t.samples.len(), 2);
        assert_eq!(t.samples[1].incumbent, Some(8.0));
        assert!(t.samples.windows(2).all(|w| w[0].time_s < w[1].time_s));
    }

    #[test]
    fn csv_round_trip() {
        let mut t = ConvergenceTrace::default();
        t.push(0.0, None, Some(1.0));
        t.push(1.5, Some(2.0), Some(1.5));
        let csv = t.to_csv();
        assert!(csv.starts_with("time_s,incumbent,bound,gap_pct\n0,,1,\n"));
        assert_eq!(ConvergenceTrace::from_csv(&csv).unwrap(), t);
    }

    #[test]
    fn close_appends_final_objective() {
        let mut t = ConvergenceTrace::default();
        t.push(1.0, Some(10.0), Some(5.0));
        let mut s = Solution::empty(SolveStatus::Optimal, "test", 2.0);
        s.objective = Some(9.0);
        s.best_bound = Some(9.0);
        t.close(&s);
        assert_eq!(t.last().unwrap().incumbent, Some(9.0));
        assert_eq!(t.last().unwrap().gap_pct(), Some(0.0));
    }
}

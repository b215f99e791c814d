//! Physical checks of a reconstructed design against the nonlinear model.

use serde::{Deserialize, Serialize};

use super::design::HenDesign;
use crate::superstructure::{CaseStudy, Side};

pub const TOL_ABS: f64 = 1.0;
pub const TOL_REL: f64 = 0.01;
/// Temperature slack for bound, monotonicity and approach checks (K).
pub const TOL_TEMP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Largest violation seen (0 when none).
    pub worst: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Tracks the worst violation of one check and where it happened.
struct Tally {
    name: &'static str,
    worst: f64,
    failed: Vec<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            worst: 0.0,
            failed: Vec::new(),
        }
    }

    /// Records `excess` (positive means violated) for `what`.
    fn see(&mut self, what: impl FnOnce() -> String, excess: f64, magnitude: f64) {
        self.worst = self.worst.max(magnitude);
        if excess > 0.0 {
            self.failed.push(what());
        }
    }

    fn finish(self) -> Check {
        let detail = if self.failed.is_empty() {
            String::new()
        } else {
            self.failed.join("; ")
        };
        Check {
            name: self.name.to_string(),
            passed: self.failed.is_empty(),
            worst: self.worst,
            detail,
        }
    }
}

fn balance_tol(flow: f64, dt: f64) -> f64 {
    TOL_ABS + TOL_REL * flow * dt.abs()
}

/// Runs every check; never fails, the report carries pass/fail per check.
pub fn validate(case: &CaseStudy, design: &HenDesign) -> ValidationReport {
    let n = design.n_stages;
    let intervals = n + 1;
    let mut stream_bal = Tally::new("stream_balance");
    let mut stage_bal = Tally::new("stage_balance");
    let mut mono = Tally::new("monotonicity");
    let mut approach = Tally::new("approach");
    let mut bounds = Tally::new("stream_bounds");
    let mut duty = Tally::new("duty_bounds");
    let mut energy = Tally::new("energy_conservation");

    for st in &design.streams {
        let Some(spec) = case.stream(&st.id) else {
            stream_bal.see(|| format!("{} is not in the case", st.id), 1.0, 0.0);
            continue;
        };
        let t = &st.temperatures;
        let interval_duty = |k: usize| -> f64 {
            let m: f64 = design
                .matches
                .iter()
                .filter(|m| m.stage == k && (m.hot == st.id || m.cold == st.id))
                .map(|m| m.duty)
                .sum();
            let utility_interval = match st.side {
                Side::Hot => intervals,
                Side::Cold => 1,
            };
            let u: f64 = if k == utility_interval {
                design.utilities.iter().filter(|u| u.stream == st.id).map(|u| u.duty).sum()
            } else {
                0.0
            };
            m + u
        };
        // position 1 is the hot end for both sides
        for k in 1..=intervals {
            let dt = t[k - 1] - t[k];
            let r = interval_duty(k) - st.flow * dt;
            stage_bal.see(
                || format!("{} interval {k}: residual {r:.4}", st.id),
                r.abs() - balance_tol(st.flow, dt),
                r.abs(),
            );
            mono.see(
                || format!("{} interval {k}: temperature rises by {:.4}", st.id, -dt),
                -dt - TOL_TEMP,
                (-dt).max(0.0),
            );
        }
        let dt_total = t[0] - t[intervals];
        let r = st.duty - st.flow * dt_total;
        stream_bal.see(
            || format!("{}: residual {r:.4}", st.id),
            r.abs() - balance_tol(st.flow, dt_total),
            r.abs(),
        );

        let mut bound = |label: &str, v: f64, q: &crate::superstructure::BoundedQuantity, tol: f64| {
            let ex = (q.min() - v).max(v - q.max());
            bounds.see(
                || format!("{} {label} {v:.4} outside [{}, {}]", st.id, q.min(), q.max()),
                ex - tol,
                ex.max(0.0),
            );
        };
        bound("inlet", st.t_in(), &spec.t_in, TOL_TEMP);
        bound("outlet", st.t_out(), &spec.t_out, TOL_TEMP);
        let ftol = 1e-6 * spec.flow_capacity.max().abs().max(1.0);
        bound("flow", st.flow, &spec.flow_capacity, ftol);
    }

    let dt_min = case.dt_min;
    for m in &design.matches {
        for (end, dt) in [("hot end", m.dt_hot_end), ("cold end", m.dt_cold_end)] {
            approach.see(
                || format!("{}-{} stage {}: {end} approach {dt:.4} < {dt_min}", m.hot, m.cold, m.stage),
                dt_min - dt - TOL_TEMP,
                (dt_min - dt).max(0.0),
            );
        }
        let lo = case.heat_load_bounds.omega_s;
        let hi = case.heat_load_bounds.big_omega_s.unwrap_or(f64::INFINITY);
        let ex = (lo - m.duty).max(m.duty - hi);
        duty.see(
            || format!("{}-{} stage {}: duty {:.4} outside [{lo}, {hi}]", m.hot, m.cold, m.stage, m.duty),
            ex - 1e-6 * m.duty.max(1.0),
            ex.max(0.0),
        );
    }
    for u in &design.utilities {
        for (end, dt) in [("first", u.dt1), ("second", u.dt2)] {
            approach.see(
                || format!("{} on {}: {end} approach {dt:.4} < {dt_min}", u.utility, u.stream),
                dt_min - dt - TOL_TEMP,
                (dt_min - dt).max(0.0),
            );
        }
        let b = &case.heat_load_bounds;
        let (lo, hi) = match u.side {
            Side::Cold => (b.omega_cu, b.big_omega_cu),
            Side::Hot => (b.omega_hu, b.big_omega_hu),
        };
        let hi = hi.unwrap_or(f64::INFINITY);
        let ex = (lo - u.duty).max(u.duty - hi);
        duty.see(
            || format!("{} on {}: duty {:.4} outside [{lo}, {hi}]", u.utility, u.stream, u.duty),
            ex - 1e-6 * u.duty.max(1.0),
            ex.max(0.0),
        );
    }

    // every exchanger moves heat from one hot side to one cold side, so the
    // per-stream enthalpy changes must sum to the utility duties
    let hot_change: f64 = design
        .streams
        .iter()
        .filter(|s| s.side == Side::Hot)
        .map(|s| s.flow * (s.temperatures[0] - s.temperatures[intervals]))
        .sum::<f64>()
        + design.utilities.iter().filter(|u| u.side == Side::Hot).map(|u| u.duty).sum::<f64>();
    let cold_change: f64 = design
        .streams
        .iter()
        .filter(|s| s.side == Side::Cold)
        .map(|s| s.flow * (s.temperatures[0] - s.temperatures[intervals]))
        .sum::<f64>()
        + design.utilities.iter().filter(|u| u.side == Side::Cold).map(|u| u.duty).sum::<f64>();
    let r = hot_change - cold_change;
    let tol = TOL_ABS + TOL_REL * hot_change.abs().max(cold_change.abs());
    energy.see(
        || format!("hot side {hot_change:.4} vs cold side {cold_change:.4}"),
        r.abs() - tol,
        r.abs(),
    );

    ValidationReport {
        checks: vec![
            stream_bal.finish(),
            stage_bal.finish(),
            mono.finish(),
            approach.finish(),
            bounds.finish(),
            duty.finish(),
            energy.finish(),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hen::design::tests::{utilities_only, ONE_BY_ONE};
    use crate::hen::{reconstruct, MatchRecord, StreamState};
    use crate::solver::SolveStatus;
    use crate::superstructure::load_case;

    fn stream(id: &str, side: Side, t: [f64; 4], flow: f64) -> StreamState {
        StreamState {
            id: id.into(),
            side,
            is_utility_stream: false,
            flow,
            flow_milp: flow,
            temperatures: t.to_vec(),
            duty: 0.0,
        }
    }

    /// One exchanger in stage 2 of a two-stage layout, moving exactly F·ΔT.
    fn one_exchanger(cold_end_approach: f64) -> (CaseStudy, HenDesign) {
        let mut case = load_case(ONE_BY_ONE).unwrap();
        case.n_stages = 2;
        // H 150 → 60 and C 40 → 100 with q = 60 in one exchanger and a cooler;
        // the approach checks read the record, not the temperatures
        let mut h = stream("H", Side::Hot, [150.0, 150.0, 90.0, 60.0], 1.0);
        let mut c = stream("C", Side::Cold, [100.0, 100.0, 40.0, 40.0], 1.0);
        h.duty = 90.0;
        c.duty = 60.0;
        let m = MatchRecord {
            hot: "H".into(),
            cold: "C".into(),
            stage: 2,
            duty: 60.0,
            dt_hot_end: 50.0,
            dt_cold_end: cold_end_approach,
            lmtd: 0.0,
            u: 0.25,
            area: 0.0,
            reduced_area: 0.0,
            utility_stream: false,
        };
        let cooler = crate::hen::UtilityRecord {
            utility: "CU".into(),
            stream: "H".into(),
            side: Side::Cold,
            duty: 30.0,
            dt1: 60.0,
            dt2: 40.0,
            lmtd: 0.0,
            u: 0.25,
            area: 0.0,
            reduced_area: 0.0,
        };
        let d = HenDesign {
            case: "one".into(),
            n_stages: 2,
            status: SolveStatus::Optimal,
            matches: vec![m],
            utilities: vec![cooler],
            streams: vec![h, c],
            tac_milp: 0.0,
            tac_exact: 0.0,
            breakdown: Default::default(),
            loads: Default::default(),
            currency: "$".into(),
            rel_gap: None,
            wall_time: 0.0,
        };
        (case, d)
    }

    #[test]
    fn balanced_design_has_zero_residuals() {
        let (case, d) = one_exchanger(20.0);
        let r = validate(&case, &d);
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
        for name in ["stream_balance", "stage_balance", "energy_conservation"] {
            assert_eq!(r.check(name).unwrap().worst, 0.0, "{name}");
        }
    }

    #[test]
    fn approach_violation_names_the_match() {
        let (case, d) = one_exchanger(case_dt_min() - 0.5);
        let r = validate(&case, &d);
        let c = r.check("approach").unwrap();
        assert!(!c.passed);
        assert!((c.worst - 0.5).abs() < 1e-12);
        assert!(c.detail.contains("H-C stage 2"), "{}", c.detail);
        assert_eq!(r.failures().count(), 1);
    }

    fn case_dt_min() -> f64 {
        load_case(ONE_BY_ONE).unwrap().dt_min
    }

    #[test]
    fn unbalanced_stage_is_reported() {
        let (case, mut d) = one_exchanger(20.0);
        d.matches[0].duty = 70.0;
        d.streams[0].duty = 100.0;
        d.streams[1].duty = 70.0;
        let r = validate(&case, &d);
        for name in ["stream_balance", "stage_balance"] {
            let c = r.check(name).unwrap();
            assert!(!c.passed && (c.worst - 10.0).abs() < 1e-9, "{name}: {c:?}");
        }
    }

    #[test]
    fn temperature_rise_on_a_hot_stream_is_reported() {
        let (case, mut d) = one_exchanger(20.0);
        d.streams[0].temperatures[1] = 151.0;
        let r = validate(&case, &d);
        assert!(!r.check("monotonicity").unwrap().passed);
    }

    #[test]
    fn reconstructed_utility_design_passes() {
        let (case, sym, sol) = utilities_only();
        let d = reconstruct(&case, &sym, &sol).unwrap();
        let r = validate(&case, &d);
        assert!(r.passed(), "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn outlet_outside_its_range_is_reported() {
        let (case, sym, mut sol) = utilities_only();
        sol.values.insert("T[H,3]".into(), 61.0);
        sol.values.insert("qcu[CU,H]".into(), 89.0);
        let d = reconstruct(&case, &sym, &sol).unwrap();
        let r = validate(&case, &d);
        let c = r.check("stream_bounds").unwrap();
        assert!(!c.passed && c.detail.contains("H outlet"), "{c:?}");
    }
}

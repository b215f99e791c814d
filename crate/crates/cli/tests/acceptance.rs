//! End-to-end acceptance checks. Every test writes one line
//! `criterion N: PASS|FAIL ...` straight to stderr so the verdicts show up in
//! the plain `cargo test` output, then fails if any sub-check failed.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use hens_core::milp::MilpModel;
use hens_core::milp::encode::encode_log_simplices;
use hens_core::pwl::{
    fit_grid, fit_hyperplanes_with, fit_segments_1d, sample_balance, sample_lmtd, sample_stream_area,
    sample_utility_area, HyperplaneOptions, PlaneSense, SampleGrid, SimplexModel,
};
use hens_core::superstructure::{
    BoundedQuantity, ConventionalUtility, CostParams, Side, StreamSpec, VarKind, VarRole,
};
use serde_json::Value;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn case(name: &str) -> PathBuf {
    root().join("cases").join(format!("{name}.case"))
}

struct Verdict {
    checks: Vec<(bool, String)>,
}

impl Verdict {
    fn new() -> Self {
        Verdict { checks: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        self.checks.push((ok, what.into()));
    }

    /// Prints the verdict line and fails the test on any failed sub-check.
    fn finish(self, n: u32, title: &str) {
        let ok = self.checks.iter().all(|c| c.0);
        let detail: Vec<String> = self
            .checks
            .iter()
            .map(|(pass, what)| format!("[{}] {what}", if *pass { "ok" } else { "x" }))
            .collect();
        let line = format!(
            "criterion {n}: {} {title}; {}",
            if ok { "PASS" } else { "FAIL" },
            detail.join("; ")
        );
        let _ = writeln!(std::io::stderr(), "{line}");
        assert!(ok, "{line}");
    }
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target.abs()
}

fn pct(value: f64, target: f64) -> f64 {
    100.0 * (value - target) / target
}

/// Outcome of one `hens run-all` invocation.
struct Run {
    code: i32,
    stderr: String,
    result: Option<Value>,
    fits: Option<Value>,
    seconds: f64,
}

impl Run {
    fn design(&self) -> Option<&Value> {
        self.result.as_ref().map(|r| &r["design"])
    }

    fn tac(&self) -> Option<f64> {
        self.design().and_then(|d| d["tac_exact"].as_f64())
    }

    fn status(&self) -> String {
        self.design()
            .and_then(|d| d["status"].as_str())
            .unwrap_or("none")
            .to_string()
    }

    fn gap(&self) -> Option<f64> {
        self.design().and_then(|d| d["rel_gap"].as_f64())
    }

    fn validated(&self) -> bool {
        self.result
            .as_ref()
            .and_then(|r| r["validation"]["checks"].as_array())
            .is_some_and(|c| c.iter().all(|c| c["passed"].as_bool() == Some(true)))
    }

    fn stream(&self, id: &str) -> Option<&Value> {
        self.design()?["streams"]
            .as_array()?
            .iter()
            .find(|s| s["id"].as_str() == Some(id))
    }

    /// Outlet temperature of a stream: last position for hot streams, first
    /// for cold ones.
    fn outlet(&self, id: &str) -> Option<f64> {
        let s = self.stream(id)?;
        let t = s["temperatures"].as_array()?;
        match s["side"].as_str()? {
            "hot" => t.last()?.as_f64(),
            _ => t.first()?.as_f64(),
        }
    }

    fn load(&self, key: &str) -> Option<f64> {
        self.design()?["loads"][key].as_f64()
    }

    fn utility_duty(&self, utility: &str) -> f64 {
        self.design()
            .and_then(|d| d["utilities"].as_array())
            .map(|u| {
                u.iter()
                    .filter(|u| u["utility"].as_str() == Some(utility))
                    .filter_map(|u| u["duty"].as_f64())
                    .sum()
            })
            .unwrap_or(0.0)
    }

    fn summary(&self) -> String {
        match self.tac() {
            Some(t) => format!(
                "TAC {t:.1}, status {}, gap {:.4} %, {:.0} s",
                self.status(),
                100.0 * self.gap().unwrap_or(f64::NAN),
                self.seconds
            ),
            None => format!(
                "no design (exit {}, {:.0} s): {}",
                self.code,
                self.seconds,
                self.stderr.lines().last().unwrap_or("")
            ),
        }
    }

    fn timed_out(&self) -> bool {
        self.status() == "TimeLimit"
    }
}

fn read_json(path: &Path) -> Option<Value> {
    serde_json::from_str(&std::fs::read_to_string(path).ok()?).ok()
}

fn run_all(name: &str, time_limit: f64) -> Run {
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = std::fs::remove_dir_all(&out);
    let start = Instant::now();
    let output = Command::new(env!("CARGO_BIN_EXE_hens"))
        .arg("run-all")
        .arg(case(name))
        .arg("--out")
        .arg(&out)
        .arg("--time-limit")
        .arg(time_limit.to_string())
        .output()
        .expect("hens binary runs");
    Run {
        code: output.status.code().unwrap_or(-1),
        stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        result: read_json(&out.join("result.json")),
        fits: read_json(&out.join("fits.json")),
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn cs1_base() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| run_all("cs1_base", 1800.0))
}

#[test]
fn criterion_1_cs1_base() {
    let run = cs1_base();
    let mut v = Verdict::new();
    v.check(run.code == 0, format!("run-all: {}", run.summary()));
    let tac = run.tac().unwrap_or(f64::NAN);
    v.check(within(tac, 1.1792e4, 0.01), format!("TAC {tac:.1} vs 11792 ({:+.2} %, tol 1 %)", pct(tac, 1.1792e4)));
    for (key, label, target) in [
        ("cold_utility", "CU", 25.52),
        ("hot_utility", "HU", 15.52),
        ("recovered", "stream", 454.48),
    ] {
        let got = run.load(key).unwrap_or(f64::NAN);
        v.check(
            within(got, target, 0.02),
            format!("{label} load {got:.2} vs {target} ({:+.2} %, tol 2 %)", pct(got, target)),
        );
    }
    v.check(run.validated(), "design validates");
    v.finish(1, "CS1 base");
}

#[test]
fn criterion_2_cs1_var_uc() {
    let run = run_all("cs1_var_uc", 1800.0);
    let base = cs1_base().tac().unwrap_or(f64::NAN);
    let mut v = Verdict::new();
    v.check(run.code == 0, format!("run-all: {}", run.summary()));
    let tac = run.tac().unwrap_or(f64::NAN);
    v.check(within(tac, 1.1767e4, 0.01), format!("TAC {tac:.1} vs 11767 ({:+.2} %, tol 1 %)", pct(tac, 1.1767e4)));
    v.check(tac <= base * 1.002, format!("TAC(var) {tac:.1} <= TAC(base) {base:.1} x 1.002"));
    let out = run.outlet("UCv").unwrap_or(f64::NAN);
    v.check((31.0..=33.0).contains(&out), format!("cooling-water outlet {out:.2} within 2 K of 31"));
    v.check(run.validated(), "design validates");
    v.finish(2, "CS1 var UC");
}

#[test]
fn criterion_3_cs2_base() {
    let run = run_all("cs2_base", 7200.0);
    let mut v = Verdict::new();
    v.check(run.code == 0, format!("run-all: {}", run.summary()));
    let tac = run.tac().unwrap_or(f64::NAN);
    let gap = run.gap().unwrap_or(f64::NAN);
    let tac_ok = within(tac, 2.9114e6, 0.01);
    let fallback = run.timed_out() && gap <= 1e-3;
    v.check(
        tac_ok || fallback,
        format!(
            "TAC {tac:.0} vs 2911400 ({:+.2} %, tol 1 %; time-box fallback gap <= 0.1 %: {})",
            pct(tac, 2.9114e6),
            if run.timed_out() { "applies" } else { "not applicable" }
        ),
    );
    v.check(run.validated(), "design validates");
    v.finish(3, "CS2 base");
}

#[test]
fn criterion_4_cs2_var() {
    let run = run_all("cs2_var", 14400.0);
    let mut v = Verdict::new();
    v.check(run.code == 0, format!("run-all: {}", run.summary()));
    let tac = run.tac().unwrap_or(f64::NAN);
    let gap = run.gap().unwrap_or(f64::NAN);
    let fallback = run.timed_out() && gap <= 5e-3;
    v.check(
        within(tac, 2.8526e6, 0.01) || fallback,
        format!(
            "TAC {tac:.0} vs 2852600 ({:+.2} %, tol 1 %; time-box fallback gap <= 0.5 %: {})",
            pct(tac, 2.8526e6),
            if run.timed_out() { "applies" } else { "not applicable" }
        ),
    );
    let hot = run.outlet("UHv").unwrap_or(f64::NAN);
    let cold = run.outlet("UCv").unwrap_or(f64::NAN);
    v.check(hot >= 320.0, format!("thermal-oil outlet {hot:.2} >= 320"));
    v.check(cold <= 18.0, format!("cooling-water outlet {cold:.2} <= 18"));
    v.check(run.validated(), "design validates");
    v.finish(4, "CS2 var UC & UH");
}

#[test]
fn criterion_5_cs3() {
    let base = run_all("cs3_base", 7200.0);
    let var = run_all("cs3_var", 7200.0);
    let mut v = Verdict::new();
    for (label, run) in [("base", &base), ("var", &var)] {
        v.check(run.tac().is_some(), format!("{label} incumbent: {}", run.summary()));
        v.check(run.validated(), format!("{label} incumbent validates"));
        let steam = run.utility_duty("UH2").abs();
        v.check(run.tac().is_some() && steam <= 1e-6, format!("{label} steam duty {steam:.3}"));
    }
    let (tb, tv) = (base.tac().unwrap_or(f64::NAN), var.tac().unwrap_or(f64::NAN));
    v.check(tv < tb, format!("TAC(var) {tv:.0} < TAC(base) {tb:.0}"));
    v.finish(5, "CS3 base and var");
}

fn encoding_counts(fit: &SimplexModel) -> (usize, usize, usize) {
    let mut m = MilpModel::new("counts");
    let xs = ["x0", "x1"];
    for x in xs.iter().take(fit.dims()).chain(["f"].iter()) {
        m.add_var(*x, VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY, VarRole::Auxiliary)
            .unwrap();
    }
    let e = encode_log_simplices(&mut m, "e", fit, &xs[..fit.dims()], &[("f".into(), 1.0)]).unwrap();
    (e.simplices, e.binaries.len(), e.branching_rows.len())
}

#[test]
fn criterion_6_encoding_counts() {
    let start = Instant::now();
    let two = SimplexModel::interpolate(&[[0.0, 1.0], [0.0, 1.0]], 4, |x| x[0] * x[1]).unwrap();
    let one = SimplexModel::interpolate(&[[0.0, 1.0]], 4, |x| x[0] * x[0]).unwrap();
    let (c2, c1) = (encoding_counts(&two), encoding_counts(&one));
    let mut v = Verdict::new();
    v.check(c2 == (32, 5, 10), format!("w=4 n=2: {} simplices, {} binaries, {} rows (want 32/5/10)", c2.0, c2.1, c2.2));
    v.check(c1 == (4, 2, 4), format!("w=4 n=1: {} segments, {} binaries, {} rows (want 4/2/4)", c1.0, c1.1, c1.2));
    let secs = start.elapsed().as_secs_f64();
    v.check(secs < 1.0, format!("{secs:.3} s"));
    v.finish(6, "encoding counts");
}

fn spec(id: &str, side: Side, t_in: f64, t_out: f64, f: f64) -> StreamSpec {
    StreamSpec {
        id: id.into(),
        side,
        t_in: BoundedQuantity::fixed(t_in),
        t_out: BoundedQuantity::fixed(t_out),
        flow_capacity: BoundedQuantity::fixed(f),
        h: 1.0,
        is_utility_stream: false,
        utility_cost: 0.0,
    }
}

#[test]
fn criterion_7_fit_quality() {
    let costs = CostParams {
        c_f: 0.0,
        c_v: 1.0,
        beta: 0.8,
        currency_label: "$".into(),
    };
    let hot = spec("H", Side::Hot, 270.0, 160.0, 18.0);
    let cold = spec("C", Side::Cold, 50.0, 210.0, 20.0);
    let mut v = Verdict::new();

    let area: SampleGrid = sample_stream_area(&hot, &cold, &costs, 1.0, 2014).unwrap();
    let fixed = HyperplaneOptions {
        stall_tol: 0.0,
        ..HyperplaneOptions::default()
    };
    let (_, five) = fit_hyperplanes_with(&area, PlaneSense::Max, 0.0, 5, fixed).unwrap();
    let (m22, up_to_22) = fit_hyperplanes_with(&area, PlaneSense::Max, 0.0, 22, fixed).unwrap();
    v.check(five.rmse_rel <= 1.6, format!("reference pair, 5 planes: {:.3} % (<= 1.6)", five.rmse_rel));
    v.check(
        up_to_22.rmse_rel <= 1.3,
        format!("reference pair, {} planes: {:.3} % (<= 1.3)", m22.planes.len(), up_to_22.rmse_rel),
    );

    let cu = ConventionalUtility {
        id: "CU".into(),
        side: Side::Cold,
        t_in: 10.0,
        t_out: 30.0,
        h: 1.0,
        cost: 1.0,
    };
    let uarea = sample_utility_area(&hot, &cu, &costs, 1.0, 25).unwrap();
    let (seg, rep) = fit_segments_1d(&uarea, 0.0, 4).unwrap();
    v.check(
        seg.w() == 4 && rep.rmse_rel <= 0.6,
        format!("reference cooler, {} segments: {:.3} % (<= 0.6)", seg.w(), rep.rmse_rel),
    );

    let bal = sample_balance([2.0, 20.0], [110.0, 220.0], 30);
    let (_, rep) = fit_grid(&bal, 4, false).unwrap();
    v.check(rep.rmse_rel <= 0.5, format!("balance F·dT, 4x4 grid: {:.3} % (<= 0.5)", rep.rmse_rel));

    let lm = sample_lmtd(10.0, 200.0, 30);
    let (_, rep) = fit_grid(&lm, 4, true).unwrap();
    v.check(rep.rmse_rel <= 0.6, format!("LMTD, free breakpoints: {:.3} % (<= 0.6)", rep.rmse_rel));
    v.finish(7, "fit quality");
}

#[test]
fn criterion_8_property_suites() {
    let start = Instant::now();
    let output = Command::new(env!("CARGO"))
        .args(["test", "--workspace", "--test", "properties", "--test", "roundtrip"])
        .current_dir(root())
        .output()
        .expect("cargo runs");
    let secs = start.elapsed().as_secs_f64();
    let text = String::from_utf8_lossy(&output.stdout);
    let passed: usize = text
        .lines()
        .filter_map(|l| l.strip_prefix("test result: "))
        .filter_map(|l| l.split(" passed").next()?.rsplit(' ').next()?.parse::<usize>().ok())
        .sum();
    let mut v = Verdict::new();
    v.check(
        output.status.success(),
        format!("{passed} property and round-trip tests passed"),
    );
    v.check(secs < 300.0, format!("{secs:.0} s (< 300)"));
    v.finish(8, "property suites");
}

fn lmtd(a: f64, b: f64) -> f64 {
    if (a - b).abs() <= 1e-9 * a.max(b) {
        0.5 * (a + b)
    } else {
        (a - b) / (a / b).ln()
    }
}

/// Exact cost of the micro case for one assignment of its three structural
/// binaries: cooling-water exchanger on H, conventional cooler on H and
/// conventional heater on C. Continuous choices (cooling-water duty and flow)
/// are enumerated on a grid. Returns `None` when the assignment is infeasible.
fn micro_cost(cw: bool, cooler: bool, heater: bool) -> Option<(f64, f64, f64)> {
    // H 150 -> 60, F 1; C 40 -> 100, F 1; CW 20 -> [20, 60], F (0, 10];
    // CU 20 -> 30; HU 160 -> 150; h = 0.5 everywhere; dT_min 5
    let (c_f, c_v, beta, dt_min) = (100.0, 50.0, 0.7, 5.0);
    let u = 1.0 / (1.0 / 0.5 + 1.0 / 0.5);
    let area = |q: f64, a: f64, b: f64| (q / (u * lmtd(a, b))).powf(beta);
    // only the heater can warm C: process streams cannot meet with one stage
    if !heater {
        return None;
    }
    let heat = c_f + c_v * area(60.0, 160.0 - 100.0, 150.0 - 40.0) + 80.0 * 60.0;
    let duties: Vec<f64> = match (cw, cooler) {
        (false, false) => return None,
        (false, true) => vec![0.0],
        (true, false) => vec![90.0],
        (true, true) => (1..2000).map(|i| 90.0 * i as f64 / 2000.0).collect(),
    };
    let mut best: Option<(f64, f64, f64)> = None;
    for q in duties {
        let t_mid = 150.0 - q;
        let mut cost = heat;
        if cooler {
            if t_mid - 30.0 < dt_min {
                continue;
            }
            cost += c_f + c_v * area(90.0 - q, t_mid - 30.0, 60.0 - 20.0) + 12.0 * (90.0 - q);
        }
        if !cw {
            best = best.filter(|b| b.0 <= cost).or(Some((cost, q, 0.0)));
            continue;
        }
        for j in 0..=400 {
            let f = 10.0 * j.max(1) as f64 / 400.0;
            let out = 20.0 + q / f;
            if out > 60.0 || 150.0 - out < dt_min || t_mid - 20.0 < dt_min {
                continue;
            }
            let c = cost + c_f + c_v * area(q, 150.0 - out, t_mid - 20.0) + 10.0 * q;
            if best.is_none_or(|b| c < b.0) {
                best = Some((c, q, f));
            }
        }
    }
    best
}

fn fit_error(fits: &Value, key: &str) -> f64 {
    fits["entries"][key]["report"]["max_abs_err"].as_f64().unwrap_or(f64::NAN)
}

#[test]
fn criterion_9_micro_oracle() {
    let start = Instant::now();
    let mut best: Option<((bool, bool, bool), (f64, f64, f64))> = None;
    for bits in 0..8u8 {
        let a = (bits & 1 != 0, bits & 2 != 0, bits & 4 != 0);
        if let Some(c) = micro_cost(a.0, a.1, a.2) {
            if best.is_none_or(|b| c.0 < b.1 .0) {
                best = Some((a, c));
            }
        }
    }
    let ((cw, cooler, heater), (oracle, q_cw, f_cw)) = best.expect("micro case is feasible");

    let run = run_all("micro", 120.0);
    let mut v = Verdict::new();
    v.check(run.code == 0, format!("run-all: {}", run.summary()));
    let d = run.design().cloned().unwrap_or(Value::Null);
    let has_match = |h: &str, c: &str| {
        d["matches"].as_array().is_some_and(|m| {
            m.iter().any(|m| m["hot"].as_str() == Some(h) && m["cold"].as_str() == Some(c))
        })
    };
    let has_utility = |u: &str| {
        d["utilities"].as_array().is_some_and(|x| x.iter().any(|x| x["utility"].as_str() == Some(u)))
    };
    let solver = (has_match("H", "CW"), has_utility("CU"), has_utility("HU"));
    v.check(
        solver == (cw, cooler, heater),
        format!("binaries (H-CW, CU, HU) solver {solver:?} oracle {:?}", (cw, cooler, heater)),
    );

    // surrogate error budget of the oracle's exchangers: area fits directly,
    // LMTD and balance fits through the area's sensitivity to the LMTD
    let fits = run.fits.clone().unwrap_or(Value::Null);
    let (c_v, beta) = (50.0, 0.7);
    let mut tol = 0.0;
    if heater {
        tol += c_v * fit_error(&fits, "uarea:HU:C");
    }
    if cooler {
        tol += c_v * fit_error(&fits, "uarea:CU:H");
    }
    if cw {
        let l = lmtd(150.0 - (20.0 + q_cw / f_cw), 150.0 - q_cw - 20.0);
        let ared = (q_cw / (0.25 * l)).powf(beta);
        let dl = fit_error(&fits, "lmtd:H:CW") + fit_error(&fits, "bal:CW:stage") / f_cw;
        tol += c_v * (fit_error(&fits, "area:H:CW") + beta * ared / l * dl);
    }
    let milp = d["tac_milp"].as_f64().unwrap_or(f64::NAN);
    let exact = d["tac_exact"].as_f64().unwrap_or(f64::NAN);
    v.check(
        (milp - oracle).abs() <= tol,
        format!("MILP optimum {milp:.2} vs oracle {oracle:.2} (|diff| {:.2} <= {tol:.2})", (milp - oracle).abs()),
    );
    v.check(
        (exact - oracle).abs() <= tol,
        format!("exact TAC of the solver design {exact:.2} vs oracle {oracle:.2}"),
    );
    let secs = start.elapsed().as_secs_f64();
    v.check(secs < 60.0, format!("{secs:.1} s"));
    v.finish(9, "micro oracle");
}

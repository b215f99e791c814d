//! Property suites for the surrogates, screening and the generated
//! constraint system.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use hens_core::pwl::{
    fit_simplices_j1, sample_lmtd, HyperplaneModel, PlaneSense, SimplexModel,
};
use hens_core::superstructure::{
    build_symbolic_model, load_case, Family, PairEnvelope, Relation, Side, SlotStatus, SymbolicModel,
};
use hens_core::thermo::lmtd;
use proptest::prelude::*;

fn breakpoints(w: usize, lo: f64, gaps: &[f64]) -> Vec<f64> {
    let mut b = vec![lo];
    for g in gaps.iter().take(w) {
        let last = *b.last().unwrap();
        b.push(last + g);
    }
    b
}

/// A random simplex model in one or two dimensions with `w ∈ {1, 2, 4}`.
fn simplex_model() -> impl Strategy<Value = SimplexModel> {
    (1usize..=2, 0usize..3)
        .prop_flat_map(|(dims, e)| {
            let w = 1 << e;
            let nodes = (w + 1usize).pow(dims as u32);
            (
                Just(dims),
                Just(w),
                prop::collection::vec(0.1f64..5.0, w * dims),
                prop::collection::vec(-50.0f64..50.0, nodes),
            )
        })
        .prop_map(|(dims, w, gaps, values)| {
            let bps = (0..dims)
                .map(|d| breakpoints(w, -1.0 + d as f64, &gaps[d * w..(d + 1) * w]))
                .collect();
            SimplexModel::new(bps, values).unwrap()
        })
}

fn point_in(domain: &[[f64; 2]], u: &[f64]) -> Vec<f64> {
    domain.iter().zip(u).map(|(d, t)| d[0] + (d[1] - d[0]) * t).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// A J1 model is Lipschitz: a step of length δ changes the value by at
    /// most (largest node difference / smallest spacing)·δ·dims.
    #[test]
    fn simplex_models_are_continuous(
        m in simplex_model(),
        u in prop::collection::vec(0.0f64..1.0, 2),
        dir in prop::collection::vec(-1.0f64..1.0, 2),
        step in 1e-9f64..1e-3,
    ) {
        let dom = m.domain();
        let dims = m.dims();
        let x = point_in(&dom, &u[..dims]);
        let y: Vec<f64> = x.iter().zip(&dir).zip(&dom)
            .map(|((xi, di), d)| (xi + step * di).clamp(d[0], d[1]))
            .collect();
        let dist = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let spread = m.max_value() - m.min_value();
        let min_gap = m
            .breakpoints
            .iter()
            .flat_map(|b| b.windows(2).map(|p| p[1] - p[0]))
            .fold(f64::INFINITY, f64::min);
        let lip = 2.0 * spread / min_gap * dims as f64;
        let fx = m.value(&x).unwrap();
        let fy = m.value(&y).unwrap();
        prop_assert!((fx - fy).abs() <= lip * dist + 1e-9, "{fx} {fy} lip {lip} dist {dist}");
    }

    /// Interpolating a function reproduces it at every node, and affine
    /// functions everywhere.
    #[test]
    fn interpolation_is_exact_at_nodes(
        e in 0usize..4,
        c in prop::collection::vec(-3.0f64..3.0, 4),
        u in prop::collection::vec(0.0f64..1.0, 2),
    ) {
        let w = 1 << e;
        let dom = [[0.5, 7.0], [-2.0, 3.0]];
        let f = |x: &[f64]| c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[1];
        let m = SimplexModel::interpolate(&dom, w, f).unwrap();
        for n in 0..m.node_count() {
            let x = m.node_coords(n);
            prop_assert!((m.value(&x).unwrap() - f(&x)).abs() <= 1e-9 * (1.0 + f(&x).abs()));
        }
        let g = |x: &[f64]| c[0] + c[1] * x[0] + c[2] * x[1];
        let a = SimplexModel::interpolate(&dom, w, g).unwrap();
        let x = point_in(&dom, &u);
        prop_assert!((a.value(&x).unwrap() - g(&x)).abs() <= 1e-9 * (1.0 + g(&x).abs()));
    }

    /// Max-of-planes models are convex, min-of-planes models concave.
    #[test]
    fn plane_models_have_one_curvature(
        planes in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 3), 1..8),
        a in prop::collection::vec(0.0f64..1.0, 2),
        b in prop::collection::vec(0.0f64..1.0, 2),
        t in 0.0f64..1.0,
    ) {
        let dom = vec![[0.0, 5.0], [0.0, 5.0]];
        let (xa, xb) = (point_in(&dom, &a), point_in(&dom, &b));
        let xm: Vec<f64> = xa.iter().zip(&xb).map(|(p, q)| t * p + (1.0 - t) * q).collect();
        for sense in [PlaneSense::Max, PlaneSense::Min] {
            let m = HyperplaneModel { planes: planes.clone(), sense, domain: dom.clone(), rmse_rel: 0.0 };
            let chord = t * m.value(&xa) + (1.0 - t) * m.value(&xb);
            let mid = m.value(&xm);
            match sense {
                PlaneSense::Max => prop_assert!(mid <= chord + 1e-9),
                PlaneSense::Min => prop_assert!(mid >= chord - 1e-9),
            }
        }
        let m = HyperplaneModel { planes, sense: PlaneSense::Max, domain: dom, rmse_rel: 0.0 };
        prop_assert!(m.value(&xm) <= m.corner_max() + 1e-9);
    }

    #[test]
    fn lmtd_is_symmetric_and_between_the_means(a in 0.01f64..500.0, b in 0.01f64..500.0) {
        let l = lmtd(a, b);
        prop_assert!((l - lmtd(b, a)).abs() <= 1e-12 * l);
        prop_assert!(l >= (a * b).sqrt() * (1.0 - 1e-12));
        prop_assert!(l <= 0.5 * (a + b) * (1.0 + 1e-12));
        prop_assert!((lmtd(a, a) - a).abs() <= 1e-12 * a);
    }

    /// The fitted LMTD surrogate on a symmetric, equidistant grid inherits
    /// the symmetry and reproduces LMTD(t, t) = t within its error bound.
    #[test]
    fn lmtd_surrogate_keeps_symmetry(u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let (m, err) = lmtd_fit();
        let dom = m.domain();
        let a = dom[0][0] + (dom[0][1] - dom[0][0]) * u;
        let b = dom[1][0] + (dom[1][1] - dom[1][0]) * v;
        prop_assert!((m.value(&[a, b]).unwrap() - m.value(&[b, a]).unwrap()).abs() <= 1e-6 * (1.0 + a + b));
        prop_assert!((m.value(&[a, a]).unwrap() - a).abs() <= *err);
    }
}

fn lmtd_fit() -> &'static (SimplexModel, f64) {
    static FIT: OnceLock<(SimplexModel, f64)> = OnceLock::new();
    FIT.get_or_init(|| {
        let samples = sample_lmtd(10.0, 200.0, 30);
        let (m, report) = fit_simplices_j1(&samples, 4, false).unwrap();
        (m, report.max_abs_err)
    })
}

#[derive(Debug, Clone)]
struct StreamDef {
    t_in: f64,
    t_out: f64,
    f: f64,
}

fn stream_toml(id: &str, side: &str, s: &StreamDef) -> String {
    format!(
        "[[stream]]\nid = \"{id}\"\nside = \"{side}\"\nt_in = {:.1}\nt_out = {:.1}\nf = {:.2}\nh = 0.5\n",
        s.t_in, s.t_out, s.f
    )
}

fn hot_stream() -> impl Strategy<Value = StreamDef> {
    (120.0f64..300.0, 10.0f64..150.0, 0.5f64..10.0).prop_map(|(t, d, f)| StreamDef { t_in: t, t_out: t - d, f })
}

fn cold_stream() -> impl Strategy<Value = StreamDef> {
    (20.0f64..200.0, 10.0f64..150.0, 0.5f64..10.0).prop_map(|(t, d, f)| StreamDef { t_in: t, t_out: t + d, f })
}

/// Random case: process streams, a conventional heater and cooler and,
/// optionally, a cooling-water stream with free outlet and flow.
fn case_text() -> impl Strategy<Value = (String, usize, usize, usize, bool)> {
    (
        prop::collection::vec(hot_stream(), 1..=3),
        prop::collection::vec(cold_stream(), 1..=3),
        1usize..=3,
        any::<bool>(),
        1.0f64..15.0,
    )
        .prop_map(|(hots, colds, n, cus, dt_min)| {
            let mut t = format!(
                "name = \"random\"\nn_stages = {n}\ndt_min = {dt_min:.1}\n[costs]\nc_f = 10.0\nc_v = 50.0\nbeta = 0.8\n"
            );
            for (i, h) in hots.iter().enumerate() {
                t += &stream_toml(&format!("H{i}"), "hot", h);
            }
            for (i, c) in colds.iter().enumerate() {
                t += &stream_toml(&format!("C{i}"), "cold", c);
            }
            if cus {
                t += "[[stream]]\nid = \"CW\"\nside = \"cold\"\nt_in = 5.0\nt_out = [6.0, 60.0]\nf = \"(0, 50]\"\nh = 0.5\ncost = 5.0\n";
            }
            t += "[[utility]]\nid = \"HU\"\nside = \"hot\"\nt_in = 400.0\nt_out = 399.0\nh = 0.5\ncost = 80.0\n";
            t += "[[utility]]\nid = \"CU\"\nside = \"cold\"\nt_in = 1.0\nt_out = 4.0\nh = 0.5\ncost = 10.0\n";
            let n_cold = colds.len() + usize::from(cus);
            (t, n, hots.len(), n_cold, cus)
        })
}

fn labels(m: &SymbolicModel, family: Family) -> BTreeSet<String> {
    m.family(family).map(|c| c.label.clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// A pair is screened out exactly when no exchanger can meet ΔT_min even
    /// with the hot stream at its hottest and the cold stream at its coldest.
    #[test]
    fn screening_matches_the_driving_force_oracle(h in hot_stream(), c in cold_stream(), dt_min in 0.5f64..30.0) {
        let text = format!(
            "name = \"pair\"\nn_stages = 2\ndt_min = {dt_min:.2}\n[costs]\nc_f = 0.0\nc_v = 1.0\nbeta = 0.8\n{}{}",
            stream_toml("H", "hot", &h),
            stream_toml("C", "cold", &c)
        );
        let case = load_case(&text).unwrap();
        let dt_min = case.dt_min;
        let (hs, cs) = (case.stream("H").unwrap(), case.stream("C").unwrap());
        // rounded as written to the case text
        let (th, tc) = (hs.t_in.max(), cs.t_in.min());
        let oracle_feasible = th - tc > dt_min
            && th > hs.t_out.min()
            && cs.t_out.max() > tc;
        let env = PairEnvelope::new(hs, cs, dt_min);
        prop_assert_eq!(!env.is_infeasible(), oracle_feasible);
        let sym = build_symbolic_model(&case);
        let pruned = sym.matches.iter().filter(|s| s.status == SlotStatus::Pruned).count();
        if oracle_feasible {
            prop_assert_eq!(pruned, 0);
        } else {
            // every slot that is not reserved for utility streams is pruned
            prop_assert!(sym.matches.iter().all(|s| s.status != SlotStatus::Allowed));
            prop_assert!(pruned > 0);
        }
    }

    /// Every constraint family of the superstructure is generated for every
    /// index it applies to.
    #[test]
    fn constraint_families_are_complete((text, n, n_hot, n_cold, cus) in case_text()) {
        let case = load_case(&text).unwrap();
        let m = build_symbolic_model(&case);
        let intervals = n + 1;
        let ids: Vec<&str> = case.streams.iter().map(|s| s.id.as_str()).collect();

        // stage blocking leaves N_h·N_c·(N+1) match variables in place
        prop_assert_eq!(m.matches.len(), n_hot * n_cold * intervals);
        prop_assert_eq!(m.variables.iter().filter(|v| v.name.starts_with("q[")).count(), n_hot * n_cold * intervals);

        let stream_bal = m.family(Family::StreamBalance).count();
        prop_assert_eq!(stream_bal, ids.len());
        let mut stage_bal = labels(&m, Family::StageBalance);
        stage_bal.extend(labels(&m, Family::UtilityLoadLink));
        let mono = labels(&m, Family::Monotonic);
        for s in &ids {
            for k in 1..=intervals {
                let (b, mo) = (format!("balance[{s},{k}]"), format!("mono[{s},{k}]"));
                prop_assert!(stage_bal.contains(&b), "{}", b);
                prop_assert!(mono.contains(&mo), "{}", mo);
            }
        }
        let fixes = labels(&m, Family::FlowFix);
        let bounds = labels(&m, Family::FlowBound);
        let inlet = labels(&m, Family::InletFix);
        let mut outlet = labels(&m, Family::OutletFix);
        outlet.extend(labels(&m, Family::OutletBound));
        for s in &case.streams {
            let (hi, fix) = (format!("flow_hi[{}]", s.id), format!("flow_fix[{}]", s.id));
            if s.flow_capacity.is_range() {
                prop_assert!(bounds.contains(&hi), "{}", hi);
            } else {
                prop_assert!(fixes.contains(&fix), "{}", fix);
            }
            let inl = format!("inlet_fix[{}]", s.id);
            prop_assert!(inlet.contains(&inl), "{}", inl);
            let (of, ol) = (format!("outlet_fix[{}]", s.id), format!("outlet_lo[{}]", s.id));
            prop_assert!(outlet.contains(&of) || outlet.contains(&ol), "{}", of);
        }

        let block = labels(&m, Family::StageBlock);
        let prune = labels(&m, Family::MatchPrune);
        let loads = labels(&m, Family::LoadBound);
        let approach = labels(&m, Family::ApproachBound);
        let lmtd_rows = labels(&m, Family::LmtdDef);
        let area_rows = labels(&m, Family::AreaDef);
        for slot in &m.matches {
            let (h, c, k) = (&slot.hot, &slot.cold, slot.stage);
            let idx = format!("[{h},{c},{k}]");
            let hot_us = case.stream(h).unwrap().is_utility_stream;
            let cold_us = case.stream(c).unwrap().is_utility_stream;
            // end stages are reserved for utility streams
            let reserved = (k == 1 && !hot_us) || (k == intervals && !cold_us);
            prop_assert!(loads.contains(&format!("load_hi{idx}")), "load_hi{}", idx);
            match slot.status {
                SlotStatus::Blocked => {
                    prop_assert!(reserved);
                    prop_assert!(block.contains(&format!("block{idx}")), "block{}", idx);
                }
                SlotStatus::Pruned => prop_assert!(prune.contains(&format!("prune{idx}")), "prune{}", idx),
                SlotStatus::Allowed => {
                    prop_assert!(!reserved);
                    for pos in [k, k + 1] {
                        let a = format!("approach[{h},{c},{k},{pos}]");
                        prop_assert!(approach.contains(&a), "{}", a);
                    }
                    prop_assert!(lmtd_rows.contains(&format!("lmtd{idx}")), "lmtd{}", idx);
                    prop_assert!(area_rows.contains(&format!("area{idx}")), "area{}", idx);
                }
                SlotStatus::Disabled => prop_assert!(false, "matches are never disabled"),
            }
        }

        // conventional coolers on process streams stay, none go on the utility stream
        for slot in &m.utility_slots {
            let target = case.stream(&slot.stream).unwrap();
            if target.is_utility_stream {
                prop_assert_eq!(slot.status, SlotStatus::Disabled);
            } else {
                prop_assert_ne!(slot.status, SlotStatus::Disabled);
            }
        }

        // variable-flow streams get bilinear balances, fixed-flow ones linear
        let bilinear: BTreeSet<String> = m
            .constraints
            .iter()
            .filter(|c| matches!(c.relation, Relation::Bilinear { .. }))
            .map(|c| c.label.clone())
            .collect();
        if cus {
            prop_assert!(bilinear.contains("stream_balance[CW]"));
        }
        for s in case.streams.iter().filter(|s| !s.has_variable_flow()) {
            let (a, b) = (format!("[{},", s.id), format!("[{}]", s.id));
            prop_assert!(bilinear.iter().all(|l| !l.contains(&a) && !l.contains(&b)));
        }

        // every hot stream's temperatures can only fall along the stages
        for s in case.streams.iter().filter(|s| s.side == Side::Hot) {
            for k in 1..=intervals {
                let label = format!("mono[{},{k}]", s.id);
                let c = m.constraints.iter().find(|c| c.label == label).unwrap();
                match &c.relation {
                    Relation::Linear { terms, .. } => {
                        let names: Vec<&str> = terms.iter().map(|(n, _)| n.as_str()).collect();
                        let tk = format!("T[{},{k}]", s.id);
                        let tk1 = format!("T[{},{}]", s.id, k + 1);
                        prop_assert!(names.contains(&tk.as_str()));
                        prop_assert!(names.contains(&tk1.as_str()));
                    }
                    _ => prop_assert!(false, "monotonicity must be linear"),
                }
            }
        }
    }
}

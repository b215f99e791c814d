//! Lowering of individual surrogates into MILP rows.
//!
//! Simplex surrogates use one weight per grid node and a logarithmic number
//! of selector binaries: one Gray-coded SOS2 branching per axis plus, in two
//! dimensions, one binary choosing the triangle orientation inside the cell.

use serde::{Deserialize, Serialize};

use super::model::MilpModel;
use crate::error::{FitError, ModelError};
use crate::pwl::{HyperplaneModel, PlaneSense, SimplexModel};
use crate::superstructure::{Sense, VarKind, VarRole};

/// Names created by one simplex encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSimplexEncoding {
    pub name: String,
    pub simplices: usize,
    pub lambdas: Vec<String>,
    pub binaries: Vec<String>,
    pub branching_rows: Vec<String>,
    pub linking_rows: Vec<String>,
}

pub fn lambda_name(enc: &str, node: usize) -> String {
    format!("lam[{enc},{node}]")
}

pub fn selector_name(enc: &str, bit: usize) -> String {
    format!("y[{enc},{bit}]")
}

pub fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Binary count `⌈log₂ T⌉`.
pub fn log2_ceil(t: usize) -> usize {
    if t <= 1 {
        0
    } else {
        (usize::BITS - (t - 1).leading_zeros()) as usize
    }
}

/// Point sets `(L, R)` of bit `b` of a Gray-coded SOS2 over points `0..=w`:
/// `L` holds the points all of whose adjacent segments have the bit set,
/// `R` those whose adjacent segments all have it clear.
pub fn sos2_branch_sets(w: usize, b: usize) -> (Vec<usize>, Vec<usize>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for i in 0..=w {
        let segs: Vec<usize> = [i.checked_sub(1), (i < w).then_some(i)]
            .into_iter()
            .flatten()
            .collect();
        let bits: Vec<bool> = segs.iter().map(|&j| gray(j) >> b & 1 == 1).collect();
        if bits.iter().all(|&x| x) {
            left.push(i);
        } else if bits.iter().all(|&x| !x) {
            right.push(i);
        }
    }
    (left, right)
}

/// Adds `x_d = Σ λ_v x_d(v)`, `Σ f_terms = Σ λ_v f(v)` and the logarithmic
/// selection rows for `fit`.
pub fn encode_log_simplices(
    model: &mut MilpModel,
    enc: &str,
    fit: &SimplexModel,
    x_vars: &[&str],
    f_terms: &[(String, f64)],
) -> Result<LogSimplexEncoding, ModelError> {
    let n = fit.dims();
    if x_vars.len() != n {
        return Err(FitError::Dimension {
            expected: n,
            got: x_vars.len(),
        }
        .into());
    }
    let w = fit.w();
    if !w.is_power_of_two() {
        return Err(FitError::NotPowerOfTwo(w).into());
    }
    let mut lambdas = Vec::with_capacity(fit.node_count());
    let mut lam_idx = Vec::with_capacity(fit.node_count());
    for v in 0..fit.node_count() {
        let name = lambda_name(enc, v);
        lam_idx.push(model.add_var(&name, VarKind::Continuous, 0.0, 1.0, VarRole::Auxiliary)?);
        lambdas.push(name);
    }
    let mut linking_rows = Vec::new();
    let convex = format!("convex[{enc}]");
    model.add_row_idx(&convex, lam_idx.iter().map(|&i| (i, 1.0)).collect(), Sense::Eq, 1.0)?;
    linking_rows.push(convex);
    for (d, x) in x_vars.iter().enumerate() {
        let mut terms = vec![(model.require(x)?, 1.0)];
        for (v, &li) in lam_idx.iter().enumerate() {
            terms.push((li, -fit.node_coords(v)[d]));
        }
        let name = format!("xlink[{enc},{d}]");
        model.add_row_idx(&name, terms, Sense::Eq, 0.0)?;
        linking_rows.push(name);
    }
    let mut terms = f_terms
        .iter()
        .map(|(name, a)| model.require(name).map(|i| (i, *a)))
        .collect::<Result<Vec<_>, _>>()?;
    for (v, &li) in lam_idx.iter().enumerate() {
        terms.push((li, -fit.values[v]));
    }
    let name = format!("flink[{enc}]");
    model.add_row_idx(&name, terms, Sense::Eq, 0.0)?;
    linking_rows.push(name);

    let mut binaries = Vec::new();
    let mut branching_rows = Vec::new();
    let mut add_branch = |model: &mut MilpModel, left: Vec<usize>, right: Vec<usize>| -> Result<(), ModelError> {
        let bit = binaries.len();
        let y = selector_name(enc, bit);
        let yi = model.add_var(&y, VarKind::Binary, 0.0, 1.0, VarRole::Auxiliary)?;
        let mut lt: Vec<(usize, f64)> = left.iter().map(|&v| (lam_idx[v], 1.0)).collect();
        lt.push((yi, -1.0));
        let mut rt: Vec<(usize, f64)> = right.iter().map(|&v| (lam_idx[v], 1.0)).collect();
        rt.push((yi, 1.0));
        let (ln, rn) = (format!("branch_l[{enc},{bit}]"), format!("branch_r[{enc},{bit}]"));
        model.add_row_idx(&ln, lt, Sense::Le, 0.0)?;
        model.add_row_idx(&rn, rt, Sense::Le, 1.0)?;
        branching_rows.push(ln);
        branching_rows.push(rn);
        binaries.push(y);
        Ok(())
    };
    let axis_bits = log2_ceil(w);
    for d in 0..n {
        for b in 0..axis_bits {
            let (l, r) = sos2_branch_sets(w, b);
            let pick = |set: &[usize]| -> Vec<usize> {
                (0..fit.node_count())
                    .filter(|&v| set.contains(&fit.node_grid(v)[d]))
                    .collect()
            };
            add_branch(model, pick(&l), pick(&r))?;
        }
    }
    if n == 2 {
        let class = |odd_r: bool| -> Vec<usize> {
            (0..fit.node_count())
                .filter(|&v| {
                    let g = fit.node_grid(v);
                    (g[0] % 2 == 1) == odd_r && (g[1] % 2 == 1) != odd_r
                })
                .collect()
        };
        add_branch(model, class(false), class(true))?;
    }
    let simplices = fit.simplex_count();
    debug_assert_eq!(binaries.len(), log2_ceil(simplices));
    debug_assert_eq!(branching_rows.len(), 2 * log2_ceil(simplices));
    Ok(LogSimplexEncoding {
        name: enc.to_string(),
        simplices,
        lambdas,
        binaries,
        branching_rows,
        linking_rows,
    })
}

/// Largest model value over the corners of `bounds`.
pub fn corner_max(fit: &HyperplaneModel, bounds: &[[f64; 2]]) -> f64 {
    let n = bounds.len();
    (0..1usize << n)
        .map(|mask| {
            let c: Vec<f64> = (0..n).map(|d| bounds[d][mask >> d & 1]).collect();
            fit.value(&c)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Gated max-of-planes area: `ared ≥ plane(lmtd, q) − M(1 − z)` per plane and
/// `ared ≤ M z`, with `M` the largest plane value over the corners of the
/// variable box. Returns the number of rows added.
pub fn encode_hyperplane_area(
    model: &mut MilpModel,
    name: &str,
    fit: &HyperplaneModel,
    lmtd: &str,
    q: &str,
    ared: &str,
    gate: &str,
) -> Result<usize, ModelError> {
    if fit.sense != PlaneSense::Max || fit.dims() != 2 {
        return Err(ModelError::Unsupported(format!(
            "area surrogate `{name}` must be a two-dimensional max of planes"
        )));
    }
    let [li, qi, ai, zi] = [lmtd, q, ared, gate].map(|v| model.require(v));
    let (li, qi, ai, zi) = (li?, qi?, ai?, zi?);
    let bounds = [li, qi].map(|i| {
        let v = &model.variables[i];
        let lo = if v.lb.is_finite() { v.lb } else { fit.domain[0][0] };
        let hi = if v.ub.is_finite() { v.ub } else { fit.domain[0][1] };
        [lo, hi]
    });
    let big_m = corner_max(fit, &bounds).max(0.0);
    for (p, plane) in fit.planes.iter().enumerate() {
        model.add_row_idx(
            format!("plane[{name},{p}]"),
            vec![(ai, 1.0), (li, -plane[1]), (qi, -plane[2]), (zi, -big_m)],
            Sense::Ge,
            plane[0] - big_m,
        )?;
    }
    model.add_row_idx(format!("gate[{name}]"), vec![(ai, 1.0), (zi, -big_m)], Sense::Le, 0.0)?;
    Ok(fit.planes.len() + 1)
}

/// Gated one-dimensional area `ared ≥ f(q) − M(1 − z)`, `ared ≤ M z`, with
/// `f` encoded by segments on an auxiliary free variable.
pub fn encode_utility_area(
    model: &mut MilpModel,
    name: &str,
    fit: &SimplexModel,
    q: &str,
    ared: &str,
    gate: &str,
) -> Result<LogSimplexEncoding, ModelError> {
    let aux = format!("fa[{name}]");
    model.add_var(&aux, VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY, VarRole::Auxiliary)?;
    let enc = encode_log_simplices(model, name, fit, &[q], &[(aux.clone(), 1.0)])?;
    let big_m = fit.max_value().max(0.0);
    let (ai, fi, zi) = (model.require(ared)?, model.require(&aux)?, model.require(gate)?);
    model.add_row_idx(
        format!("uplane[{name}]"),
        vec![(ai, 1.0), (fi, -1.0), (zi, -big_m)],
        Sense::Ge,
        -big_m,
    )?;
    model.add_row_idx(format!("gate[{name}]"), vec![(ai, 1.0), (zi, -big_m)], Sense::Le, 0.0)?;
    Ok(enc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model_with(vars: &[&str]) -> MilpModel {
        let mut m = MilpModel::new("t");
        for v in vars {
            m.add_var(*v, VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY, VarRole::Auxiliary)
                .unwrap();
        }
        m
    }

    #[test]
    fn counts_follow_log2_of_the_simplex_count() {
        let f2 = SimplexModel::interpolate(&[[0.0, 1.0], [0.0, 1.0]], 4, |x| x[0] * x[1]).unwrap();
        let mut m = model_with(&["x", "y", "f"]);
        let e = encode_log_simplices(&mut m, "a", &f2, &["x", "y"], &[("f".into(), 1.0)]).unwrap();
        assert_eq!((e.simplices, e.binaries.len(), e.branching_rows.len()), (32, 5, 10));

        let f1 = SimplexModel::interpolate(&[[0.0, 1.0]], 4, |x| x[0] * x[0]).unwrap();
        let e = encode_log_simplices(&mut m, "b", &f1, &["x"], &[("f".into(), 1.0)]).unwrap();
        assert_eq!((e.simplices, e.binaries.len(), e.branching_rows.len()), (4, 2, 4));

        let f0 = SimplexModel::interpolate(&[[0.0, 1.0]], 1, |x| x[0]).unwrap();
        let e = encode_log_simplices(&mut m, "c", &f0, &["x"], &[("f".into(), 1.0)]).unwrap();
        assert_eq!((e.simplices, e.binaries.len(), e.branching_rows.len()), (1, 0, 0));
    }

    #[test]
    fn sos2_sets_leave_exactly_one_segment_per_code() {
        for w in [2usize, 4, 8, 16] {
            let bits = log2_ceil(w);
            for seg in 0..w {
                // with y = gray(seg), the points allowed nonzero must be seg and seg + 1
                let mut allowed: Vec<usize> = (0..=w).collect();
                for b in 0..bits {
                    let (l, r) = sos2_branch_sets(w, b);
                    let y = gray(seg) >> b & 1;
                    let banned = if y == 0 { l } else { r };
                    allowed.retain(|p| !banned.contains(p));
                }
                assert_eq!(allowed, vec![seg, seg + 1], "w = {w}, segment {seg}");
            }
        }
    }

    #[test]
    fn log2_ceil_matches_definition() {
        assert_eq!(log2_ceil(1), 0);
        assert_eq!(log2_ceil(2), 1);
        assert_eq!(log2_ceil(32), 5);
        assert_eq!(log2_ceil(33), 6);
    }
}

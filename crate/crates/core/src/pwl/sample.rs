//! Sample sets for the surrogate fits.

use serde::{Deserialize, Serialize};

use crate::error::FitError;
use crate::superstructure::{ConventionalUtility, CostParams, PairEnvelope, StreamSpec, UtilityEnvelope};
use crate::thermo;

/// Sampled values of a function of one or two variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub dims: usize,
    /// Point coordinates, `dims` values per point.
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub domain: Vec<[f64; 2]>,
    pub mask: Vec<bool>,
}

impl SampleGrid {
    pub fn new(dims: usize, domain: Vec<[f64; 2]>) -> Self {
        assert_eq!(domain.len(), dims);
        SampleGrid {
            dims,
            x: Vec::new(),
            f: Vec::new(),
            domain,
            mask: Vec::new(),
        }
    }

    pub fn push(&mut self, x: &[f64], f: f64, feasible: bool) {
        debug_assert_eq!(x.len(), self.dims);
        self.x.extend_from_slice(x);
        self.f.push(f);
        self.mask.push(feasible && f.is_finite());
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.x[i * self.dims..(i + 1) * self.dims]
    }

    /// Masked-in points as `(x, f)` pairs.
    pub fn feasible(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        (0..self.len())
            .filter(|&i| self.mask[i])
            .map(|i| (self.point(i), self.f[i]))
    }

    pub fn feasible_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Builds a grid from explicit points; every point is masked in.
    pub fn from_points(dims: usize, domain: Vec<[f64; 2]>, points: &[(Vec<f64>, f64)]) -> Self {
        let mut g = SampleGrid::new(dims, domain);
        for (x, f) in points {
            g.push(x, *f, true);
        }
        g
    }

    /// Tensor grid of `n[0] × n[1]` points over `domain` (or `n[0]` points in 1-D).
    pub fn tensor(domain: Vec<[f64; 2]>, n: &[usize], f: impl Fn(&[f64]) -> f64) -> Self {
        let dims = domain.len();
        assert_eq!(n.len(), dims);
        let axes: Vec<Vec<f64>> = domain
            .iter()
            .zip(n)
            .map(|(d, &k)| linspace(d[0], d[1], k))
            .collect();
        let mut g = SampleGrid::new(dims, domain);
        match dims {
            1 => {
                for &a in &axes[0] {
                    g.push(&[a], f(&[a]), true);
                }
            }
            2 => {
                for &b in &axes[1] {
                    for &a in &axes[0] {
                        g.push(&[a, b], f(&[a, b]), true);
                    }
                }
            }
            _ => panic!("only one- and two-dimensional grids are supported"),
        }
        g
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Samples the reduced area `(q / (U·LMTD))^β` of a stream/stream exchanger
/// over its reachable `(LMTD, q)` region; coordinates are `[lmtd, q]`.
///
/// Duty levels are spread evenly over `[0, Ω]`; each level carries an even
/// share of the points spread over `[ΔT_min, LMTD_max(q)]`, so the grid has
/// exactly `n_points` points.
pub fn sample_stream_area(
    hot: &StreamSpec,
    cold: &StreamSpec,
    costs: &CostParams,
    dt_min: f64,
    n_points: usize,
) -> Result<SampleGrid, FitError> {
    let env = PairEnvelope::new(hot, cold, dt_min);
    if env.is_infeasible() {
        return Err(FitError::EmptyDomain(format!(
            "{} and {} cannot exchange heat with ΔT_min = {dt_min}",
            hot.id, cold.id
        )));
    }
    sample_pair_area(&env, costs.beta, n_points)
}

pub(crate) fn sample_pair_area(
    env: &PairEnvelope,
    beta: f64,
    n_points: usize,
) -> Result<SampleGrid, FitError> {
    if n_points < 4 {
        return Err(FitError::InvalidParameter(format!(
            "need at least 4 area samples, got {n_points}"
        )));
    }
    let levels = ((n_points as f64).sqrt().round() as usize).max(2);
    let per = n_points / levels;
    let extra = n_points % levels;
    let domain = vec![[env.dt_min, env.dt_hi], [0.0, env.omega]];
    let mut g = SampleGrid::new(2, domain);
    for (i, q) in linspace(0.0, env.omega, levels).into_iter().enumerate() {
        let count = per + usize::from(i < extra);
        let (lo, hi) = env
            .lmtd_range(q)
            .ok_or_else(|| FitError::EmptyDomain(format!("no LMTD reachable at q = {q}")))?;
        for l in linspace(lo, hi, count) {
            let a = thermo::reduced_area(q, env.u, l, beta);
            g.push(&[l, q], a, true);
        }
    }
    Ok(g)
}

/// Samples the reduced area of a conventional utility exchanger as a function
/// of its duty. The first sample sits just above zero duty (or at the
/// smallest duty that respects `ΔT_min`); the domain starts at zero.
pub fn sample_utility_area(
    stream: &StreamSpec,
    utility: &ConventionalUtility,
    costs: &CostParams,
    dt_min: f64,
    n_points: usize,
) -> Result<SampleGrid, FitError> {
    let env = UtilityEnvelope::new(stream, utility, dt_min).ok_or_else(|| {
        FitError::EmptyDomain(format!(
            "utility {} cannot serve stream {} with ΔT_min = {dt_min}",
            utility.id, stream.id
        ))
    })?;
    sample_utility_envelope(&env, costs.beta, n_points)
}

pub(crate) fn sample_utility_envelope(
    env: &UtilityEnvelope,
    beta: f64,
    n_points: usize,
) -> Result<SampleGrid, FitError> {
    if n_points < 2 {
        return Err(FitError::InvalidParameter(format!(
            "need at least 2 utility samples, got {n_points}"
        )));
    }
    let start = env.q_lo.max(env.omega * 1e-9);
    let mut g = SampleGrid::new(1, vec![[0.0, env.omega]]);
    for q in linspace(start, env.omega, n_points) {
        g.push(&[q], env.reduced_area(q, beta), true);
    }
    Ok(g)
}

/// LMTD on a square grid `[lo, hi]²`.
pub fn sample_lmtd(lo: f64, hi: f64, n_side: usize) -> SampleGrid {
    SampleGrid::tensor(vec![[lo, hi], [lo, hi]], &[n_side, n_side], |x| {
        thermo::lmtd(x[0], x[1])
    })
}

/// The product `F · ΔT` over a flow/temperature-change box.
pub fn sample_balance(flow: [f64; 2], delta: [f64; 2], n_side: usize) -> SampleGrid {
    SampleGrid::tensor(vec![flow, delta], &[n_side, n_side], |x| x[0] * x[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superstructure::{BoundedQuantity, Side};

    fn stream(id: &str, side: Side, t_in: f64, t_out: f64, f: f64) -> StreamSpec {
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

    fn costs(beta: f64) -> CostParams {
        CostParams {
            c_f: 0.0,
            c_v: 1.0,
            beta,
            currency_label: "$".into(),
        }
    }

    #[test]
    fn stream_area_sample_count_is_exact() {
        let h = stream("H", Side::Hot, 270.0, 160.0, 18.0);
        let c = stream("C", Side::Cold, 50.0, 210.0, 20.0);
        let g = sample_stream_area(&h, &c, &costs(0.8), 10.0, 2014).unwrap();
        assert_eq!(g.len(), 2014);
        assert_eq!(g.feasible_count(), 2014);
        for (x, f) in g.feasible() {
            assert!(x[0] >= 10.0 - 1e-12 && x[0] <= 220.0 + 1e-12);
            if x[1] == 0.0 {
                assert_eq!(f, 0.0);
            }
        }
    }

    #[test]
    fn utility_area_samples_follow_the_closed_form() {
        let h = stream("H", Side::Hot, 270.0, 160.0, 18.0);
        let cu = ConventionalUtility {
            id: "CU".into(),
            side: Side::Cold,
            t_in: 10.0,
            t_out: 30.0,
            h: 1.0,
            cost: 1.0,
        };
        let g = sample_utility_area(&h, &cu, &costs(0.8), 10.0, 25).unwrap();
        assert_eq!(g.len(), 25);
        assert!(g.f[0] < 1e-3);
        let (x, f) = g.feasible().nth(12).unwrap();
        let q = x[0];
        let u = 0.5;
        let closed = (q * ((160.0 + q / 18.0 - 30.0).ln() - (160.0f64 - 10.0).ln())
            / (u * (q / 18.0 - 30.0 + 10.0)))
            .powf(0.8);
        assert!((f - closed).abs() <= 1e-12 * closed.abs().max(1.0));
    }

    #[test]
    fn infeasible_pair_is_an_empty_domain() {
        let h = stream("H", Side::Hot, 60.0, 40.0, 1.0);
        let c = stream("C", Side::Cold, 70.0, 90.0, 1.0);
        assert!(matches!(
            sample_stream_area(&h, &c, &costs(0.8), 1.0, 100),
            Err(FitError::EmptyDomain(_))
        ));
    }
}

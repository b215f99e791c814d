//! Continuous piecewise-linear surrogates on rectilinear grids.
//!
//! One-dimensional models are plain segment chains. Two-dimensional models
//! split every grid cell into two triangles whose diagonal alternates with
//! the cell parity (the "union jack" pattern): cells with even `r + s` are
//! cut from their lower-left to their upper-right corner, odd cells from
//! lower-right to upper-left. All diagonals then meet at the grid nodes
//! whose two indices are odd.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{rmse_rel, FitReport, SampleGrid};
use crate::error::FitError;

/// Golden-section and coordinate-descent step tolerance, relative to the axis range.
pub const STEP_TOL: f64 = 1e-6;
/// Smallest allowed breakpoint spacing, relative to the axis range.
const MIN_GAP: f64 = 1e-3;
const MAX_SWEEPS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexModel {
    /// Strictly increasing breakpoints per dimension, `w + 1` each.
    pub breakpoints: Vec<Vec<f64>>,
    /// Node values, first dimension fastest.
    pub values: Vec<f64>,
}

impl SimplexModel {
    pub fn new(breakpoints: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self, FitError> {
        if breakpoints.is_empty() || breakpoints.len() > 2 {
            return Err(FitError::Dimension {
                expected: 2,
                got: breakpoints.len(),
            });
        }
        let w = breakpoints[0].len().saturating_sub(1);
        if !w.is_power_of_two() {
            return Err(FitError::NotPowerOfTwo(w));
        }
        for axis in &breakpoints {
            if axis.len() != w + 1 {
                return Err(FitError::InvalidParameter("axes must share the grid width".into()));
            }
            if axis.windows(2).any(|p| !(p[1] > p[0])) {
                return Err(FitError::InvalidParameter("breakpoints must increase strictly".into()));
            }
        }
        let nodes = (w + 1).pow(breakpoints.len() as u32);
        if values.len() != nodes {
            return Err(FitError::Dimension {
                expected: nodes,
                got: values.len(),
            });
        }
        Ok(SimplexModel { breakpoints, values })
    }

    /// Model that interpolates `f` at the nodes of an equidistant grid.
    pub fn interpolate(domain: &[[f64; 2]], w: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self, FitError> {
        let breakpoints: Vec<Vec<f64>> = domain
            .iter()
            .map(|d| super::sample::linspace(d[0], d[1], w + 1))
            .collect();
        let mut m = SimplexModel {
            values: Vec::new(),
            breakpoints,
        };
        m.values = (0..m.node_count()).map(|v| f(&m.node_coords(v))).collect();
        SimplexModel::new(m.breakpoints, m.values)
    }

    pub fn dims(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn w(&self) -> usize {
        self.breakpoints[0].len() - 1
    }

    pub fn node_count(&self) -> usize {
        (self.w() + 1).pow(self.dims() as u32)
    }

    /// Number of simplices, `wⁿ · n!`.
    pub fn simplex_count(&self) -> usize {
        let n = self.dims();
        let fact: usize = (1..=n).product();
        self.w().pow(n as u32) * fact
    }

    pub fn domain(&self) -> Vec<[f64; 2]> {
        self.breakpoints
            .iter()
            .map(|b| [b[0], *b.last().unwrap()])
            .collect()
    }

    pub fn node_index(&self, idx: &[usize]) -> usize {
        match idx {
            [i] => *i,
            [i, j] => i + (self.w() + 1) * j,
            _ => panic!("unsupported dimension"),
        }
    }

    /// Grid indices of a node.
    pub fn node_grid(&self, node: usize) -> Vec<usize> {
        let side = self.w() + 1;
        match self.dims() {
            1 => vec![node],
            _ => vec![node % side, node / side],
        }
    }

    pub fn node_coords(&self, node: usize) -> Vec<f64> {
        self.node_grid(node)
            .iter()
            .enumerate()
            .map(|(d, &i)| self.breakpoints[d][i])
            .collect()
    }

    /// Node sets of all simplices. In 2-D the two triangles of cell `(r, s)`
    /// come out as consecutive entries.
    pub fn simplices(&self) -> Vec<Vec<usize>> {
        let w = self.w();
        match self.dims() {
            1 => (0..w).map(|i| vec![i, i + 1]).collect(),
            _ => {
                let mut out = Vec::with_capacity(2 * w * w);
                for s in 0..w {
                    for r in 0..w {
                        let n00 = self.node_index(&[r, s]);
                        let n10 = self.node_index(&[r + 1, s]);
                        let n01 = self.node_index(&[r, s + 1]);
                        let n11 = self.node_index(&[r + 1, s + 1]);
                        if (r + s) % 2 == 0 {
                            out.push(vec![n00, n10, n11]);
                            out.push(vec![n00, n01, n11]);
                        } else {
                            out.push(vec![n00, n10, n01]);
                            out.push(vec![n10, n01, n11]);
                        }
                    }
                }
                out
            }
        }
    }

    fn check(&self, x: &[f64]) -> Result<(), FitError> {
        if x.len() != self.dims() {
            return Err(FitError::Dimension {
                expected: self.dims(),
                got: x.len(),
            });
        }
        for (d, &v) in x.iter().enumerate() {
            let b = &self.breakpoints[d];
            let (lo, hi) = (b[0], b[b.len() - 1]);
            let tol = 1e-9 * (hi - lo).max(1.0);
            if !(v >= lo - tol && v <= hi + tol) {
                return Err(FitError::OutOfDomain { point: x.to_vec() });
            }
        }
        Ok(())
    }

    /// Interpolation weights of the vertices of the simplex containing `x`.
    pub fn weights(&self, x: &[f64]) -> Result<Vec<(usize, f64)>, FitError> {
        self.check(x)?;
        Ok(weights_on(&self.breakpoints, x))
    }

    /// Surrogate value at `x`.
    pub fn value(&self, x: &[f64]) -> Result<f64, FitError> {
        Ok(self
            .weights(x)?
            .into_iter()
            .map(|(v, l)| l * self.values[v])
            .sum())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn cell(axis: &[f64], v: f64) -> (usize, f64) {
    let w = axis.len() - 1;
    let v = v.clamp(axis[0], axis[w]);
    // index of the last breakpoint <= v, capped at the last cell
    let i = axis.partition_point(|&b| b <= v).saturating_sub(1).min(w - 1);
    let t = (v - axis[i]) / (axis[i + 1] - axis[i]);
    (i, t.clamp(0.0, 1.0))
}

fn weights_on(breakpoints: &[Vec<f64>], x: &[f64]) -> Vec<(usize, f64)> {
    let side = breakpoints[0].len();
    if breakpoints.len() == 1 {
        let (i, t) = cell(&breakpoints[0], x[0]);
        return vec![(i, 1.0 - t), (i + 1, t)];
    }
    let (r, u) = cell(&breakpoints[0], x[0]);
    let (s, v) = cell(&breakpoints[1], x[1]);
    let n = |a: usize, b: usize| (r + a) + side * (s + b);
    if (r + s) % 2 == 0 {
        if u >= v {
            // (0,0) (1,0) (1,1)
            vec![(n(0, 0), 1.0 - u), (n(1, 0), u - v), (n(1, 1), v)]
        } else {
            // (0,0) (0,1) (1,1)
            vec![(n(0, 0), 1.0 - v), (n(0, 1), v - u), (n(1, 1), u)]
        }
    } else if u + v <= 1.0 {
        // (0,0) (1,0) (0,1)
        vec![(n(0, 0), 1.0 - u - v), (n(1, 0), u), (n(0, 1), v)]
    } else {
        // (1,0) (0,1) (1,1)
        vec![(n(1, 0), 1.0 - v), (n(0, 1), 1.0 - u), (n(1, 1), u + v - 1.0)]
    }
}

/// Least-squares node values for fixed breakpoints; returns the values and SSE.
fn node_values(breakpoints: &[Vec<f64>], x: &[f64], f: &[f64]) -> (Vec<f64>, f64) {
    let dims = breakpoints.len();
    let side = breakpoints[0].len();
    let nodes = side.pow(dims as u32);
    let mut ata = DMatrix::<f64>::zeros(nodes, nodes);
    let mut atb = DVector::<f64>::zeros(nodes);
    let rows: Vec<Vec<(usize, f64)>> = (0..f.len())
        .map(|i| weights_on(breakpoints, &x[i * dims..(i + 1) * dims]))
        .collect();
    for (row, &fi) in rows.iter().zip(f) {
        for &(a, wa) in row {
            atb[a] += wa * fi;
            for &(b, wb) in row {
                ata[(a, b)] += wa * wb;
            }
        }
    }
    // weak pull towards the mean keeps nodes without support well defined
    let mean = f.iter().sum::<f64>() / f.len() as f64;
    let rho = 1e-12 * (ata.trace() / nodes as f64).max(1e-300);
    for a in 0..nodes {
        ata[(a, a)] += rho;
        atb[a] += rho * mean;
    }
    let sol = match ata.clone().cholesky() {
        Some(c) => c.solve(&atb),
        None => ata.lu().solve(&atb).unwrap_or_else(|| DVector::from_element(nodes, mean)),
    };
    let values: Vec<f64> = sol.iter().copied().collect();
    let sse = rows
        .iter()
        .zip(f)
        .map(|(row, &fi)| {
            let e = row.iter().map(|&(v, l)| l * values[v]).sum::<f64>() - fi;
            e * e
        })
        .sum();
    (values, sse)
}

struct Fit {
    breakpoints: Vec<Vec<f64>>,
    values: Vec<f64>,
    sse: f64,
    iterations: usize,
}

fn golden_section(mut lo: f64, mut hi: f64, tol: f64, mut g: impl FnMut(f64) -> f64) -> (f64, f64, usize) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let mut ga = g(a);
    let mut gb = g(b);
    let mut evals = 2;
    while hi - lo > tol {
        if ga <= gb {
            hi = b;
            b = a;
            gb = ga;
            a = hi - r * (hi - lo);
            ga = g(a);
        } else {
            lo = a;
            a = b;
            ga = gb;
            b = lo + r * (hi - lo);
            gb = g(b);
        }
        evals += 1;
    }
    if ga <= gb {
        (a, ga, evals)
    } else {
        (b, gb, evals)
    }
}

/// Coordinate descent over the interior breakpoints; every trial position
/// re-fits the node values.
fn descend(mut breakpoints: Vec<Vec<f64>>, x: &[f64], f: &[f64]) -> Fit {
    let (mut values, mut sse) = node_values(&breakpoints, x, f);
    let mut iterations = 0;
    for _ in 0..MAX_SWEEPS {
        let mut moved: f64 = 0.0;
        for d in 0..breakpoints.len() {
            let w = breakpoints[d].len() - 1;
            let range = breakpoints[d][w] - breakpoints[d][0];
            for i in 1..w {
                let lo = breakpoints[d][i - 1] + MIN_GAP * range;
                let hi = breakpoints[d][i + 1] - MIN_GAP * range;
                if hi <= lo {
                    continue;
                }
                let mut trial = breakpoints.clone();
                let (t, t_sse, evals) = golden_section(lo, hi, STEP_TOL * range, |t| {
                    trial[d][i] = t;
                    node_values(&trial, x, f).1
                });
                iterations += evals;
                if t_sse < sse {
                    moved = moved.max((t - breakpoints[d][i]).abs() / range);
                    breakpoints[d][i] = t;
                    sse = t_sse;
                }
            }
        }
        if moved < STEP_TOL {
            break;
        }
    }
    let (v, s) = node_values(&breakpoints, x, f);
    if s <= sse {
        values = v;
        sse = s;
    }
    Fit {
        breakpoints,
        values,
        sse,
        iterations,
    }
}

/// Breakpoints spaced geometrically, denser towards the low (`towards_lo`)
/// or high end of the axis.
fn geometric(lo: f64, hi: f64, w: usize, towards_lo: bool) -> Vec<f64> {
    let ratio: f64 = 1.8;
    let total: f64 = (0..w).map(|i| ratio.powi(i as i32)).sum();
    let mut out = vec![lo];
    let mut acc = 0.0;
    for i in 0..w {
        let step = if towards_lo {
            ratio.powi(i as i32)
        } else {
            ratio.powi((w - 1 - i) as i32)
        };
        acc += step;
        out.push(if i + 1 == w { hi } else { lo + (hi - lo) * acc / total });
    }
    out
}

fn collect(samples: &SampleGrid) -> Result<(Vec<f64>, Vec<f64>), FitError> {
    let mut x = Vec::new();
    let mut f = Vec::new();
    for (p, v) in samples.feasible() {
        x.extend_from_slice(p);
        f.push(v);
    }
    if f.is_empty() {
        return Err(FitError::NoSamples);
    }
    Ok((x, f))
}

fn report(model: &SimplexModel, samples: &SampleGrid, iterations: usize, target: Option<f64>) -> FitReport {
    let mut sse = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut count = 0;
    let (mut fmin, mut fmax) = (f64::INFINITY, f64::NEG_INFINITY);
    for (x, f) in samples.feasible() {
        let e = model.value(x).unwrap_or(f64::NAN) - f;
        sse += e * e;
        max_abs = max_abs.max(e.abs());
        count += 1;
        fmin = fmin.min(f);
        fmax = fmax.max(f);
    }
    let rmse = rmse_rel(sse, count, fmin, fmax);
    FitReport {
        rmse_rel: rmse,
        max_abs_err: max_abs,
        pieces: model.simplex_count(),
        iterations,
        converged: target.is_none_or(|t| rmse <= t),
        sse,
    }
}

/// Fits a grid surrogate of width `w` in every dimension. With
/// `free_breakpoints` the interior breakpoints are moved to minimise the SSE;
/// otherwise the grid stays equidistant.
pub fn fit_grid(
    samples: &SampleGrid,
    w: usize,
    free_breakpoints: bool,
) -> Result<(SimplexModel, FitReport), FitError> {
    if !w.is_power_of_two() {
        return Err(FitError::NotPowerOfTwo(w));
    }
    if samples.dims == 0 || samples.dims > 2 {
        return Err(FitError::Dimension {
            expected: 2,
            got: samples.dims,
        });
    }
    let (x, f) = collect(samples)?;
    let nodes = (w + 1).pow(samples.dims as u32);
    if f.len() < nodes {
        return Err(FitError::Underdetermined {
            samples: f.len(),
            nodes,
        });
    }
    for d in &samples.domain {
        if !(d[1] > d[0]) {
            return Err(FitError::EmptyDomain(format!("axis [{}, {}]", d[0], d[1])));
        }
    }
    let axes = |make: &dyn Fn(f64, f64) -> Vec<f64>| -> Vec<Vec<f64>> {
        samples.domain.iter().map(|d| make(d[0], d[1])).collect()
    };
    let equidistant = axes(&|lo, hi| super::sample::linspace(lo, hi, w + 1));
    let fit = if free_breakpoints && w > 1 {
        let starts = [
            equidistant,
            axes(&|lo, hi| geometric(lo, hi, w, true)),
            axes(&|lo, hi| geometric(lo, hi, w, false)),
        ];
        let mut best: Option<Fit> = None;
        let mut iterations = 0;
        for start in starts {
            let fit = descend(start, &x, &f);
            iterations += fit.iterations;
            if best.as_ref().is_none_or(|b| fit.sse < b.sse) {
                best = Some(fit);
            }
        }
        let mut best = best.unwrap();
        best.iterations = iterations;
        best
    } else {
        let (values, sse) = node_values(&equidistant, &x, &f);
        Fit {
            breakpoints: equidistant,
            values,
            sse,
            iterations: 1,
        }
    };
    let model = SimplexModel::new(fit.breakpoints, fit.values)?;
    let report = report(&model, samples, fit.iterations, None);
    Ok((model, report))
}

/// Two-dimensional fit on a `w × w` union-jack grid.
pub fn fit_simplices_j1(
    samples: &SampleGrid,
    w: usize,
    free_breakpoints: bool,
) -> Result<(SimplexModel, FitReport), FitError> {
    if samples.dims != 2 {
        return Err(FitError::Dimension {
            expected: 2,
            got: samples.dims,
        });
    }
    fit_grid(samples, w, free_breakpoints)
}

/// One-dimensional continuous segment chain with free breakpoints. The
/// segment count doubles from 1 until the target RMSE or `max_segments`
/// is reached.
pub fn fit_segments_1d(
    samples: &SampleGrid,
    target_rmse_rel: f64,
    max_segments: usize,
) -> Result<(SimplexModel, FitReport), FitError> {
    if samples.dims != 1 {
        return Err(FitError::Dimension {
            expected: 1,
            got: samples.dims,
        });
    }
    if !max_segments.is_power_of_two() {
        return Err(FitError::NotPowerOfTwo(max_segments));
    }
    let mut w = 1;
    let mut iterations = 0;
    loop {
        let (model, mut rep) = fit_grid(samples, w, true)?;
        iterations += rep.iterations;
        if rep.rmse_rel <= target_rmse_rel || w >= max_segments {
            rep.iterations = iterations;
            rep.converged = rep.rmse_rel <= target_rmse_rel;
            return Ok((model, rep));
        }
        w *= 2;
    }
}

/// Fit report of an existing model against a sample set.
pub fn evaluate_fit(model: &SimplexModel, samples: &SampleGrid) -> FitReport {
    report(model, samples, 0, None)
}

//! Max-affine (and min-affine) least-squares fits.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{rmse_rel, FitReport, SampleGrid};
use crate::error::FitError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlaneSense {
    /// Convex surrogate: the largest plane is active.
    Max,
    /// Concave surrogate: the smallest plane is active.
    Min,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperplaneModel {
    /// Coefficients `[a0, a1, .., an]` of `a0 + Σ a_d x_d`, one row per plane.
    pub planes: Vec<Vec<f64>>,
    pub sense: PlaneSense,
    pub domain: Vec<[f64; 2]>,
    pub rmse_rel: f64,
}

impl HyperplaneModel {
    pub fn dims(&self) -> usize {
        self.domain.len()
    }

    pub fn plane_value(plane: &[f64], x: &[f64]) -> f64 {
        plane[0] + plane[1..].iter().zip(x).map(|(a, v)| a * v).sum::<f64>()
    }

    /// Model value without any domain check.
    pub fn value(&self, x: &[f64]) -> f64 {
        let it = self.planes.iter().map(|p| Self::plane_value(p, x));
        match self.sense {
            PlaneSense::Max => it.fold(f64::NEG_INFINITY, f64::max),
            PlaneSense::Min => it.fold(f64::INFINITY, f64::min),
        }
    }

    /// Largest plane value over the corners of the domain box. For a
    /// max-affine model this is the maximum over the whole box.
    pub fn corner_max(&self) -> f64 {
        let n = self.dims();
        let mut best = f64::NEG_INFINITY;
        for mask in 0..(1usize << n) {
            let corner: Vec<f64> = (0..n)
                .map(|d| self.domain[d][(mask >> d) & 1])
                .collect();
            best = best.max(self.value(&corner));
        }
        best
    }
}

/// Options for the alternating fit.
#[derive(Debug, Clone, Copy)]
pub struct HyperplaneOptions {
    pub seed: u64,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Stop adding planes once the last few additions together improved the
    /// RMSE by less than this relative amount; the smallest model within the
    /// same tolerance of the best one is returned. Zero disables the rule.
    pub stall_tol: f64,
}

impl Default for HyperplaneOptions {
    fn default() -> Self {
        HyperplaneOptions {
            seed: 7,
            restarts: 6,
            max_iterations: 200,
            stall_tol: 0.005,
        }
    }
}

/// Fits a convex max-of-planes model, adding planes until the relative RMSE
/// drops to `target_rmse_rel` (percent) or `max_planes` is reached.
pub fn fit_hyperplanes(
    samples: &SampleGrid,
    target_rmse_rel: f64,
    max_planes: usize,
) -> Result<(HyperplaneModel, FitReport), FitError> {
    fit_hyperplanes_with(
        samples,
        PlaneSense::Max,
        target_rmse_rel,
        max_planes,
        HyperplaneOptions::default(),
    )
}

/// Fits exactly `planes` planes (no escalation).
pub fn fit_hyperplanes_fixed(
    samples: &SampleGrid,
    sense: PlaneSense,
    planes: usize,
    options: HyperplaneOptions,
) -> Result<(HyperplaneModel, FitReport), FitError> {
    let options = HyperplaneOptions {
        stall_tol: 0.0,
        ..options
    };
    fit_hyperplanes_with(samples, sense, 0.0, planes, options).and_then(|(m, r)| {
        if m.planes.len() == planes || r.rmse_rel == 0.0 {
            Ok((m, r))
        } else {
            Err(FitError::InvalidParameter(format!(
                "stopped at {} planes",
                m.planes.len()
            )))
        }
    })
}

pub fn fit_hyperplanes_with(
    samples: &SampleGrid,
    sense: PlaneSense,
    target_rmse_rel: f64,
    max_planes: usize,
    options: HyperplaneOptions,
) -> Result<(HyperplaneModel, FitReport), FitError> {
    if target_rmse_rel < 0.0 || max_planes == 0 {
        return Err(FitError::InvalidParameter(format!(
            "target {target_rmse_rel}, max planes {max_planes}"
        )));
    }
    let data = Data::new(samples, sense)?;
    let (fmin, fmax) = data.range();
    if fmax - fmin <= f64::EPSILON * fmax.abs().max(1.0) {
        // constant data: a single flat plane is exact
        let mut plane = vec![0.0; data.dims + 1];
        plane[0] = data.sign * data.f[0];
        let model = HyperplaneModel {
            planes: vec![plane],
            sense,
            domain: samples.domain.clone(),
            rmse_rel: 0.0,
        };
        let report = FitReport {
            rmse_rel: 0.0,
            max_abs_err: 0.0,
            pieces: 1,
            iterations: 0,
            converged: true,
            sse: 0.0,
        };
        return Ok((model, report));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut current: Vec<Vec<f64>> = Vec::new();
    let mut current_sse = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    let mut history: Vec<(Vec<Vec<f64>>, f64)> = Vec::new();
    const STALL_WINDOW: usize = 4;
    for p in 1..=max_planes {
        let mut best: Option<(Vec<Vec<f64>>, f64)> = None;
        let mut consider = |planes: Vec<Vec<f64>>, iters: usize, best: &mut Option<(Vec<Vec<f64>>, f64)>| {
            let (planes, sse, it) = data.alternate(planes, options.max_iterations);
            iterations += iters + it;
            if best.as_ref().is_none_or(|b| sse < b.1) {
                *best = Some((planes, sse));
            }
        };
        // warm start: previous planes plus one aimed at the worst underestimated points
        if !current.is_empty() {
            let mut warm = current.clone();
            warm.push(data.plane_for_underestimated(&current));
            consider(warm, 0, &mut best);
        }
        for _ in 0..options.restarts {
            let init = data.kmeans_planes(p, &mut rng);
            consider(init, 0, &mut best);
        }
        let (mut planes, mut sse) = best.expect("at least one start");
        if sse > current_sse {
            // never lose ground when adding a plane: duplicate an existing one
            planes = current.clone();
            planes.push(current[0].clone());
            sse = current_sse;
        }
        current = planes;
        current_sse = sse;
        history.push((current.clone(), sse));
        let rmse = rmse_rel(sse, data.len(), fmin, fmax);
        if rmse <= target_rmse_rel {
            converged = true;
            break;
        }
        if options.stall_tol > 0.0 && p > STALL_WINDOW {
            let before = history[p - 1 - STALL_WINDOW].1.sqrt();
            if before - sse.sqrt() < options.stall_tol * before {
                break;
            }
        }
    }
    if !converged && options.stall_tol > 0.0 {
        // smallest model that is as good as the best one within the tolerance
        let best = current_sse.sqrt();
        if let Some((planes, _)) = history
            .into_iter()
            .find(|(_, s)| s.sqrt() <= best * (1.0 + options.stall_tol))
        {
            current = planes;
        }
    }

    let planes: Vec<Vec<f64>> = current
        .iter()
        .map(|p| data.unscale(p))
        .collect();
    let model = HyperplaneModel {
        planes,
        sense,
        domain: samples.domain.clone(),
        rmse_rel: 0.0,
    };
    let mut sse = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut count = 0;
    for (x, f) in samples.feasible() {
        let e = model.value(x) - f;
        sse += e * e;
        max_abs = max_abs.max(e.abs());
        count += 1;
    }
    let rmse = rmse_rel(sse, count, fmin, fmax);
    let model = HyperplaneModel {
        rmse_rel: rmse,
        ..model
    };
    let report = FitReport {
        rmse_rel: rmse,
        max_abs_err: max_abs,
        pieces: model.planes.len(),
        iterations,
        converged: converged || rmse <= target_rmse_rel,
        sse,
    };
    Ok((model, report))
}

/// Feasible samples with inputs scaled to the unit box and the sign flipped
/// for concave fits, so that every fit internally is a max-of-planes fit.
struct Data {
    dims: usize,
    x: Vec<f64>,
    f: Vec<f64>,
    lo: Vec<f64>,
    scale: Vec<f64>,
    sign: f64,
}

impl Data {
    fn new(samples: &SampleGrid, sense: PlaneSense) -> Result<Self, FitError> {
        let dims = samples.dims;
        let sign = match sense {
            PlaneSense::Max => 1.0,
            PlaneSense::Min => -1.0,
        };
        let lo: Vec<f64> = samples.domain.iter().map(|d| d[0]).collect();
        let scale: Vec<f64> = samples
            .domain
            .iter()
            .map(|d| if d[1] > d[0] { d[1] - d[0] } else { 1.0 })
            .collect();
        let mut x = Vec::new();
        let mut f = Vec::new();
        for (p, v) in samples.feasible() {
            for d in 0..dims {
                x.push((p[d] - lo[d]) / scale[d]);
            }
            f.push(sign * v);
        }
        if f.is_empty() {
            return Err(FitError::NoSamples);
        }
        Ok(Data {
            dims,
            x,
            f,
            lo,
            scale,
            sign,
        })
    }

    fn len(&self) -> usize {
        self.f.len()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.x[i * self.dims..(i + 1) * self.dims]
    }

    /// Range of the original (unsigned) function values.
    fn range(&self) -> (f64, f64) {
        let (a, b) = self
            .f
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        if self.sign > 0.0 {
            (a, b)
        } else {
            (-b, -a)
        }
    }

    fn active(&self, planes: &[Vec<f64>], i: usize) -> (usize, f64) {
        let x = self.point(i);
        let mut best = (0, f64::NEG_INFINITY);
        for (k, p) in planes.iter().enumerate() {
            let v = HyperplaneModel::plane_value(p, x);
            if v > best.1 {
                best = (k, v);
            }
        }
        best
    }

    fn sse(&self, planes: &[Vec<f64>]) -> f64 {
        (0..self.len())
            .map(|i| {
                let e = self.active(planes, i).1 - self.f[i];
                e * e
            })
            .sum()
    }

    /// Least-squares plane through a subset of the points.
    fn ls_plane(&self, idx: &[usize]) -> Option<Vec<f64>> {
        let n = self.dims + 1;
        if idx.len() < n {
            return None;
        }
        let mut ata = DMatrix::<f64>::zeros(n, n);
        let mut atb = DVector::<f64>::zeros(n);
        let mut row = vec![0.0; n];
        for &i in idx {
            row[0] = 1.0;
            row[1..].copy_from_slice(self.point(i));
            for a in 0..n {
                atb[a] += row[a] * self.f[i];
                for b in 0..n {
                    ata[(a, b)] += row[a] * row[b];
                }
            }
        }
        let ridge = 1e-12 * (ata.trace() / n as f64).max(1e-300);
        for a in 0..n {
            ata[(a, a)] += ridge;
        }
        ata.cholesky().map(|c| c.solve(&atb).iter().copied().collect())
    }

    /// Alternates assignment and per-plane least squares, accepting only
    /// improving steps.
    fn alternate(&self, mut planes: Vec<Vec<f64>>, max_iterations: usize) -> (Vec<Vec<f64>>, f64, usize) {
        let mut sse = self.sse(&planes);
        let mut it = 0;
        while it < max_iterations {
            it += 1;
            let mut groups: Vec<Vec<usize>> = vec![Vec::new(); planes.len()];
            for i in 0..self.len() {
                groups[self.active(&planes, i).0].push(i);
            }
            let mut next = planes.clone();
            for (k, g) in groups.iter().enumerate() {
                if let Some(p) = self.ls_plane(g) {
                    next[k] = p;
                }
            }
            let next_sse = self.sse(&next);
            if next_sse < sse * (1.0 - 1e-12) {
                planes = next;
                sse = next_sse;
            } else {
                break;
            }
        }
        (planes, sse, it)
    }

    /// k-means++ clustering of the points, then one least-squares plane per cluster.
    fn kmeans_planes(&self, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let m = self.len();
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>();
        let mut centers: Vec<Vec<f64>> = vec![self.point(rng.gen_range(0..m)).to_vec()];
        while centers.len() < k {
            let d: Vec<f64> = (0..m)
                .map(|i| {
                    centers
                        .iter()
                        .map(|c| dist(self.point(i), c))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            let total: f64 = d.iter().sum();
            if total <= 0.0 {
                centers.push(self.point(rng.gen_range(0..m)).to_vec());
                continue;
            }
            let mut r = rng.gen::<f64>() * total;
            let mut pick = m - 1;
            for (i, v) in d.iter().enumerate() {
                if r < *v {
                    pick = i;
                    break;
                }
                r -= v;
            }
            centers.push(self.point(pick).to_vec());
        }
        let mut assign = vec![0usize; m];
        for _ in 0..25 {
            for (i, a) in assign.iter_mut().enumerate() {
                *a = (0..k)
                    .min_by(|&u, &v| {
                        dist(self.point(i), &centers[u]).total_cmp(&dist(self.point(i), &centers[v]))
                    })
                    .unwrap();
            }
            for (c, center) in centers.iter_mut().enumerate() {
                let members: Vec<usize> = (0..m).filter(|&i| assign[i] == c).collect();
                if members.is_empty() {
                    continue;
                }
                for d in 0..self.dims {
                    center[d] = members.iter().map(|&i| self.point(i)[d]).sum::<f64>() / members.len() as f64;
                }
            }
        }
        let global = self.ls_plane(&(0..m).collect::<Vec<_>>()).unwrap_or_else(|| {
            let mut p = vec![0.0; self.dims + 1];
            p[0] = self.f.iter().sum::<f64>() / m as f64;
            p
        });
        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(rng);
        order
            .into_iter()
            .map(|c| {
                let members: Vec<usize> = (0..m).filter(|&i| assign[i] == c).collect();
                self.ls_plane(&members).unwrap_or_else(|| global.clone())
            })
            .collect()
    }

    /// Least-squares plane through the points the current model
    /// underestimates the most.
    fn plane_for_underestimated(&self, planes: &[Vec<f64>]) -> Vec<f64> {
        let mut resid: Vec<(usize, f64)> = (0..self.len())
            .map(|i| (i, self.f[i] - self.active(planes, i).1))
            .collect();
        resid.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let take = (self.len() / (planes.len() + 1)).max(self.dims + 1);
        let idx: Vec<usize> = resid.iter().take(take).map(|r| r.0).collect();
        self.ls_plane(&idx).unwrap_or_else(|| planes[0].clone())
    }

    /// Converts a plane on scaled inputs back to original units and sign.
    fn unscale(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; p.len()];
        out[0] = p[0];
        for d in 0..self.dims {
            let a = p[d + 1] / self.scale[d];
            out[d + 1] = a;
            out[0] -= a * self.lo[d];
        }
        out.iter().map(|v| self.sign * v).collect()
    }
}

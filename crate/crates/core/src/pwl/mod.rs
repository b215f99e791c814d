//! Piecewise-linear surrogates: sampling, max-of-planes fits for the area
//! terms and simplex grids for LMTD and bilinear balances.

pub mod hyperplane;
pub mod library;
pub mod sample;
pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::FitError;

pub use hyperplane::{
    fit_hyperplanes, fit_hyperplanes_fixed, fit_hyperplanes_with, HyperplaneModel, HyperplaneOptions,
    PlaneSense,
};
pub use library::{FitEntry, FitLibrary, LIBRARY_VERSION};
pub use sample::{
    linspace, sample_balance, sample_lmtd, sample_stream_area, sample_utility_area, SampleGrid,
};
pub use simplex::{evaluate_fit, fit_grid, fit_segments_1d, fit_simplices_j1, SimplexModel};

/// Quality summary of a surrogate fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// RMSE as a percentage of the sampled value range.
    pub rmse_rel: f64,
    pub max_abs_err: f64,
    /// Planes or simplices in the fitted model.
    pub pieces: usize,
    pub iterations: usize,
    pub converged: bool,
    pub sse: f64,
}

/// Root-mean-square error in percent of `fmax - fmin`; zero for a flat range.
pub fn rmse_rel(sse: f64, n: usize, fmin: f64, fmax: f64) -> f64 {
    let range = fmax - fmin;
    if n == 0 || !(range > 0.0) {
        return 0.0;
    }
    100.0 * (sse / n as f64).sqrt() / range
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PwlModel {
    Hyperplanes(HyperplaneModel),
    Simplices(SimplexModel),
}

impl PwlModel {
    pub fn dims(&self) -> usize {
        match self {
            PwlModel::Hyperplanes(m) => m.dims(),
            PwlModel::Simplices(m) => m.dims(),
        }
    }

    pub fn domain(&self) -> Vec<[f64; 2]> {
        match self {
            PwlModel::Hyperplanes(m) => m.domain.clone(),
            PwlModel::Simplices(m) => m.domain(),
        }
    }

    pub fn pieces(&self) -> usize {
        match self {
            PwlModel::Hyperplanes(m) => m.planes.len(),
            PwlModel::Simplices(m) => m.simplex_count(),
        }
    }
}

/// Evaluates a surrogate; points outside its domain are an error.
pub fn eval_pwl(model: &PwlModel, x: &[f64]) -> Result<f64, FitError> {
    match model {
        PwlModel::Simplices(m) => m.value(x),
        PwlModel::Hyperplanes(m) => {
            if x.len() != m.dims() {
                return Err(FitError::Dimension {
                    expected: m.dims(),
                    got: x.len(),
                });
            }
            for (v, d) in x.iter().zip(&m.domain) {
                let tol = 1e-9 * (d[1] - d[0]).abs().max(1.0);
                if !(*v >= d[0] - tol && *v <= d[1] + tol) {
                    return Err(FitError::OutOfDomain { point: x.to_vec() });
                }
            }
            Ok(m.value(x))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_is_relative_to_the_range() {
        assert_eq!(rmse_rel(4.0, 4, 0.0, 10.0), 10.0);
        assert_eq!(rmse_rel(1.0, 1, 3.0, 3.0), 0.0);
    }

    #[test]
    fn eval_checks_the_domain() {
        let m = PwlModel::Simplices(SimplexModel::interpolate(&[[0.0, 1.0]], 1, |x| x[0]).unwrap());
        assert_eq!(eval_pwl(&m, &[0.25]).unwrap(), 0.25);
        assert!(eval_pwl(&m, &[2.0]).is_err());
    }
}

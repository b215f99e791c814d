//! All surrogates one case needs, fitted together and stored as a
//! versioned JSON artifact.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hyperplane::{fit_hyperplanes_with, HyperplaneOptions, PlaneSense};
use super::sample::{sample_balance, sample_lmtd, sample_pair_area, sample_utility_envelope};
use super::simplex::{fit_grid, fit_segments_1d, fit_simplices_j1, SimplexModel};
use super::{eval_pwl, FitReport, PwlModel};
use crate::error::{FitError, ModelError};
use crate::superstructure::{CaseStudy, FitKind, FitRequest, FitSettings, SymbolicModel};

pub const LIBRARY_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub request: FitRequest,
    pub model: PwlModel,
    pub report: FitReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitLibrary {
    pub version: u32,
    pub case: String,
    pub entries: BTreeMap<String, FitEntry>,
}

impl FitLibrary {
    /// Fits every surrogate requested by `model`, in parallel.
    pub fn build(case: &CaseStudy, model: &SymbolicModel) -> Result<Self, ModelError> {
        let entries: Vec<FitEntry> = model
            .fit_requests
            .par_iter()
            .map(|req| fit_request(case, model, req).map_err(ModelError::from))
            .collect::<Result<_, _>>()?;
        Ok(FitLibrary {
            version: LIBRARY_VERSION,
            case: case.name.clone(),
            entries: entries
                .into_iter()
                .map(|e| (e.request.key.clone(), e))
                .collect(),
        })
    }

    pub fn get(&self, key: &str) -> Option<&FitEntry> {
        self.entries.get(key)
    }

    pub fn model(&self, key: &str) -> Result<&PwlModel, ModelError> {
        self.get(key)
            .map(|e| &e.model)
            .ok_or_else(|| ModelError::MissingFit(key.to_string()))
    }

    pub fn eval(&self, key: &str, x: &[f64]) -> Result<f64, ModelError> {
        Ok(eval_pwl(self.model(key)?, x)?)
    }

    /// Checks that the library carries a surrogate for every request of
    /// `model` and that each covers the requested domain.
    pub fn covers(&self, model: &SymbolicModel) -> Result<(), ModelError> {
        for req in &model.fit_requests {
            let have = self.model(&req.key)?.domain();
            let ok = have.len() == req.domain.len()
                && have.iter().zip(&req.domain).all(|(h, r)| {
                    let tol = 1e-6 * (r[1] - r[0]).abs().max(1.0);
                    h[0] <= r[0] + tol && h[1] >= r[1] - tol
                });
            if !ok {
                return Err(ModelError::Unsupported(format!(
                    "surrogate `{}` covers {have:?}, needs {:?}",
                    req.key, req.domain
                )));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit library serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let lib: FitLibrary = serde_json::from_str(text)
            .map_err(|e| ModelError::Unsupported(format!("unreadable fit library: {e}")))?;
        if lib.version != LIBRARY_VERSION {
            return Err(ModelError::Unsupported(format!(
                "fit library version {} (expected {LIBRARY_VERSION})",
                lib.version
            )));
        }
        Ok(lib)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Unsupported(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Largest relative RMSE over all entries.
    pub fn worst_rmse(&self) -> f64 {
        self.entries
            .values()
            .map(|e| e.report.rmse_rel)
            .fold(0.0, f64::max)
    }
}

fn side_count(n: usize) -> usize {
    ((n as f64).sqrt().round() as usize).max(3)
}

/// Balance surrogate: node values interpolate `F·ΔT` exactly, so zero
/// temperature change maps to zero duty and stage and stream surrogates
/// agree on grid lines.
fn balance_model(req: &FitRequest, fit: &FitSettings) -> Result<(SimplexModel, FitReport), FitError> {
    let samples = sample_balance(req.domain[0], req.domain[1], side_count(fit.grid_samples));
    let mut model = if fit.balance_free_breakpoints {
        let (m, _) = fit_grid(&samples, fit.grid_w, true)?;
        m
    } else {
        SimplexModel::interpolate(&req.domain, fit.grid_w, |x| x[0] * x[1])?
    };
    for v in 0..model.node_count() {
        let c = model.node_coords(v);
        model.values[v] = c[0] * c[1];
    }
    let report = super::simplex::evaluate_fit(&model, &samples);
    Ok((model, report))
}

fn fit_request(case: &CaseStudy, model: &SymbolicModel, req: &FitRequest) -> Result<FitEntry, FitError> {
    let fit = &case.fit;
    let (pwl, report) = match &req.kind {
        FitKind::StreamArea { hot, cold } => {
            let env = model
                .pair(hot, cold)
                .ok_or_else(|| FitError::EmptyDomain(format!("no envelope for {hot}/{cold}")))?;
            let samples = sample_pair_area(env, case.costs.beta, fit.area_samples)?;
            let options = HyperplaneOptions {
                seed: fit.seed,
                ..HyperplaneOptions::default()
            };
            let (mut m, r) =
                fit_hyperplanes_with(&samples, PlaneSense::Max, fit.area_rmse, fit.max_planes, options)?;
            m.domain = req.domain.clone();
            (PwlModel::Hyperplanes(m), r)
        }
        FitKind::UtilityArea { utility, stream } => {
            let env = model
                .utility_slots
                .iter()
                .find(|s| &s.utility == utility && &s.stream == stream)
                .and_then(|s| s.envelope.as_ref())
                .ok_or_else(|| FitError::EmptyDomain(format!("no envelope for {utility}/{stream}")))?;
            let samples = sample_utility_envelope(env, case.costs.beta, fit.line_samples)?;
            let (m, r) = fit_segments_1d(&samples, fit.utility_rmse, fit.max_segments)?;
            (PwlModel::Simplices(m), r)
        }
        FitKind::Lmtd { .. } => {
            let [lo, hi] = req.domain[0];
            let samples = sample_lmtd(lo, hi, side_count(fit.grid_samples));
            let (m, r) = fit_simplices_j1(&samples, fit.grid_w, fit.lmtd_free_breakpoints)?;
            (PwlModel::Simplices(m), r)
        }
        FitKind::StageBalance { .. } | FitKind::StreamBalance { .. } => {
            let (m, r) = balance_model(req, fit)?;
            (PwlModel::Simplices(m), r)
        }
    };
    log::debug!(
        "fitted {} with {} pieces, rmse {:.3}%",
        req.key,
        pwl.pieces(),
        report.rmse_rel
    );
    Ok(FitEntry {
        request: req.clone(),
        model: pwl,
        report,
    })
}

//! Lowering of a symbolic superstructure plus fitted surrogates to a MILP.

use serde::{Deserialize, Serialize};

use super::encode::{encode_hyperplane_area, encode_log_simplices, encode_utility_area, LogSimplexEncoding};
use super::model::MilpModel;
use crate::error::ModelError;
use crate::pwl::{FitLibrary, PwlModel, SimplexModel};
use crate::superstructure::{AreaRelation, CaseStudy, Relation, SymbolicModel, VarKind};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoweringStats {
    pub encodings: Vec<LogSimplexEncoding>,
    pub plane_rows: usize,
    /// Existence binaries of the superstructure itself.
    pub structural_binaries: usize,
}

impl LoweringStats {
    pub fn selector_binaries(&self) -> usize {
        self.encodings.iter().map(|e| e.binaries.len()).sum()
    }
}

/// `lmtd[H1,C1,2]` becomes `lmtd_H1_C1_2`.
pub fn encoding_name(label: &str) -> String {
    label
        .chars()
        .filter_map(|c| match c {
            '[' | ',' => Some('_'),
            ']' => None,
            c => Some(c),
        })
        .collect()
}

fn simplex<'a>(fits: &'a FitLibrary, key: &str) -> Result<&'a SimplexModel, ModelError> {
    match fits.model(key)? {
        PwlModel::Simplices(m) => Ok(m),
        PwlModel::Hyperplanes(_) => Err(ModelError::Unsupported(format!(
            "surrogate `{key}` must be a simplex grid"
        ))),
    }
}

pub fn lower_case_to_milp(
    case: &CaseStudy,
    symbolic: &SymbolicModel,
    fits: &FitLibrary,
) -> Result<MilpModel, ModelError> {
    lower_with_stats(case, symbolic, fits).map(|(m, _)| m)
}

pub fn lower_with_stats(
    case: &CaseStudy,
    symbolic: &SymbolicModel,
    fits: &FitLibrary,
) -> Result<(MilpModel, LoweringStats), ModelError> {
    let mut model = MilpModel::new(&case.name);
    for v in &symbolic.variables {
        model.add_var(&v.name, v.kind, v.lb, v.ub, v.role)?;
    }
    let mut stats = LoweringStats {
        structural_binaries: model.num_binaries(),
        ..Default::default()
    };
    // surrogate LMTD values may undershoot the variable bounds by the fit error
    for c in &symbolic.constraints {
        if let Relation::Lmtd { lmtd, fit, .. } = &c.relation {
            let m = simplex(fits, fit)?;
            let (lo, hi) = (m.min_value(), m.max_value());
            let spec = model
                .spec_mut(lmtd)
                .ok_or_else(|| ModelError::UnknownVariable(lmtd.clone()))?;
            spec.lb = spec.lb.min(lo);
            spec.ub = spec.ub.max(hi);
        }
    }
    for c in &symbolic.constraints {
        match &c.relation {
            Relation::Linear { terms, sense, rhs } => {
                model.add_row(&c.label, terms, *sense, *rhs)?;
            }
            Relation::Lmtd { dt1, dt2, lmtd, fit } => {
                let m = simplex(fits, fit)?;
                let enc = encode_log_simplices(
                    &mut model,
                    &encoding_name(&c.label),
                    m,
                    &[dt1, dt2],
                    &[(lmtd.clone(), 1.0)],
                )?;
                stats.encodings.push(enc);
            }
            Relation::Bilinear { lhs, flow, delta, fit } => {
                let m = simplex(fits, fit)?;
                let enc = encode_log_simplices(&mut model, &encoding_name(&c.label), m, &[flow, delta], lhs)?;
                stats.encodings.push(enc);
            }
            Relation::Area(AreaRelation::Stream { lmtd, q, ared, gate, fit }) => {
                let PwlModel::Hyperplanes(m) = fits.model(fit)? else {
                    return Err(ModelError::Unsupported(format!(
                        "surrogate `{fit}` must be a max of planes"
                    )));
                };
                stats.plane_rows +=
                    encode_hyperplane_area(&mut model, &encoding_name(&c.label), m, lmtd, q, ared, gate)?;
            }
            Relation::Area(AreaRelation::Utility { q, ared, gate, fit }) => {
                let m = simplex(fits, fit)?;
                let enc = encode_utility_area(&mut model, &encoding_name(&c.label), m, q, ared, gate)?;
                stats.encodings.push(enc);
            }
        }
    }
    for (name, coef) in &symbolic.objective {
        model.add_objective(name, *coef)?;
    }
    debug_assert_eq!(
        model.num_binaries(),
        stats.structural_binaries + stats.selector_binaries()
    );
    let meta = &mut model.metadata;
    meta.insert("case".into(), case.name.clone());
    meta.insert("stages".into(), symbolic.n_stages.to_string());
    meta.insert("structural_binaries".into(), stats.structural_binaries.to_string());
    meta.insert("selector_binaries".into(), stats.selector_binaries().to_string());
    meta.insert("encodings".into(), stats.encodings.len().to_string());
    meta.insert("plane_rows".into(), stats.plane_rows.to_string());
    Ok((model, stats))
}

/// Number of binaries that decide network structure (`z` variables).
pub fn structural_binaries(symbolic: &SymbolicModel) -> usize {
    symbolic
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .count()
}

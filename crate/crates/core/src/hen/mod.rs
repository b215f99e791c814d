//! Reconstruction, exact costing and validation of solved networks.

mod design;
mod validate;

pub use design::{
    compare_tac, reconstruct, HenDesign, LoadSummary, MatchRecord, StreamState, TacBreakdown,
    UtilityRecord, INTEGRALITY_TOL, TAC_FLAG_PCT, ZERO_DUTY,
};
pub use validate::{validate, Check, ValidationReport, TOL_ABS, TOL_REL, TOL_TEMP};

#[cfg(test)]
pub(crate) use design::tests as tests_support;

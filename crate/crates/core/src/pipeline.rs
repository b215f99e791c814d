//! End-to-end helpers chaining the stages: case → fits → MILP → solve →
//! design.

use crate::error::{DesignError, ModelError, SolverError};
use crate::hen::{reconstruct, validate, HenDesign};
use crate::milp::{lower_with_stats, LoweringStats, MilpModel};
use crate::pwl::FitLibrary;
use crate::report::ResultDocument;
use crate::solver::{self, ConvergenceTrace, Solution, SolverConfig};
use crate::superstructure::{build_symbolic_model, CaseStudy, SymbolicModel};

/// A case lowered to a MILP, ready to solve.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub case: CaseStudy,
    pub symbolic: SymbolicModel,
    pub fits: FitLibrary,
    pub model: MilpModel,
    pub stats: LoweringStats,
}

/// Builds the superstructure and lowers it. When `fits` is given it must
/// cover every nonlinear relation of the case; otherwise fits are computed.
pub fn prepare(case: &CaseStudy, fits: Option<FitLibrary>) -> Result<Prepared, ModelError> {
    let symbolic = build_symbolic_model(case);
    let fits = match fits {
        Some(f) => {
            f.covers(&symbolic)?;
            f
        }
        None => FitLibrary::build(case, &symbolic)?,
    };
    let (model, stats) = lower_with_stats(case, &symbolic, &fits)?;
    Ok(Prepared {
        case: case.clone(),
        symbolic,
        fits,
        model,
        stats,
    })
}

impl Prepared {
    /// Solves `repeats` times (at least once), keeping the fastest run.
    pub fn solve(&self, cfg: &SolverConfig, repeats: usize) -> Result<(Solution, ConvergenceTrace), SolverError> {
        solver::solve_repeated(&self.model, cfg, repeats)
    }

    pub fn design(&self, solution: &Solution) -> Result<HenDesign, DesignError> {
        reconstruct(&self.case, &self.symbolic, solution)
    }

    /// Reconstructs, validates and packages a solution.
    pub fn document(&self, solution: &Solution) -> Result<ResultDocument, DesignError> {
        let design = self.design(solution)?;
        let report = validate(&self.case, &design);
        Ok(ResultDocument::new(design, report))
    }
}

//! Heat exchanger network synthesis with utilities modelled as streams.
//!
//! The pipeline runs case file → symbolic superstructure → surrogate fits →
//! MILP → external solver → reconstructed network → reports.

pub mod error;
pub mod hen;
pub mod milp;
pub mod pipeline;
pub mod pwl;
pub mod report;
pub mod solver;
pub mod superstructure;
pub mod thermo;

pub use error::{CaseError, DesignError, FitError, ModelError, SolverError};
pub use pwl::{FitLibrary, FitReport, PwlModel, SampleGrid};
pub use superstructure::{build_symbolic_model, load_case, load_case_file, CaseStudy};
pub use hen::{HenDesign, ValidationReport};
pub use milp::MilpModel;
pub use report::ResultDocument;
pub use solver::{ConvergenceTrace, Solution, SolveStatus, SolverConfig};

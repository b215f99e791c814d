//! Concrete MILP model and the lowering of surrogates into it.

pub mod encode;
pub mod lower;
pub mod model;

pub use encode::{
    encode_hyperplane_area, encode_log_simplices, encode_utility_area, gray, log2_ceil, sos2_branch_sets,
    LogSimplexEncoding,
};
pub use lower::{encoding_name, lower_case_to_milp, lower_with_stats, structural_binaries, LoweringStats};
pub use model::{MilpModel, Row};

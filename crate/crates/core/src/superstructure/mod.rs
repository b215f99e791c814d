//! Problem data and the symbolic superstructure model.

pub mod case;
pub mod envelope;
pub mod symbolic;

pub use case::{
    load_case, load_case_file, BoundedQuantity, CaseStudy, ConventionalUtility, CostParams,
    DerivedSets, FitSettings, HeatLoadBounds, Side, SolverSettings, StreamSpec,
};
pub use envelope::{PairEnvelope, UtilityEnvelope};
pub use symbolic::{
    build_symbolic_model, AreaRelation, Family, MatchSlot, Terms, UtilitySlot, FitKind, FitRequest, Relation, Sense, SlotStatus,
    SymbolicConstraint, SymbolicModel, VarKind, VarRole, VarSpec,
};

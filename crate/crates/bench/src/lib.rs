//! Shared fixtures for the benchmarks.

use std::path::PathBuf;

use hens_core::superstructure::{BoundedQuantity, CostParams, Side, StreamSpec};
use hens_core::{load_case_file, CaseStudy};

pub fn case(name: &str) -> CaseStudy {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../cases")
        .join(format!("{name}.case"));
    load_case_file(&path).expect("bundled case loads")
}

/// Hot 270 → 160 °C and cold 50 → 210 °C, the pair used for the area fits.
pub fn reference_pair() -> (StreamSpec, StreamSpec, CostParams) {
    let stream = |id: &str, side, t_in, t_out, f| StreamSpec {
        id: id.into(),
        side,
        t_in: BoundedQuantity::fixed(t_in),
        t_out: BoundedQuantity::fixed(t_out),
        flow_capacity: BoundedQuantity::fixed(f),
        h: 1.0,
        is_utility_stream: false,
        utility_cost: 0.0,
    };
    let costs = CostParams {
        c_f: 0.0,
        c_v: 1.0,
        beta: 0.8,
        currency_label: "$".into(),
    };
    (
        stream("H", Side::Hot, 270.0, 160.0, 18.0),
        stream("C", Side::Cold, 50.0, 210.0, 20.0),
        costs,
    )
}

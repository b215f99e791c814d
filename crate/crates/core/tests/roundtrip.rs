//! Model files written for the external solver read back to the same model.

use std::path::PathBuf;
use std::sync::OnceLock;

use hens_core::milp::MilpModel;
use hens_core::pipeline::prepare;
use hens_core::solver::{read_lp, read_mps, write_lp, write_mps};
use hens_core::superstructure::VarRole;
use hens_core::load_case_file;

fn case_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../cases").join(name)
}

fn cs1() -> &'static MilpModel {
    static MODEL: OnceLock<MilpModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let case = load_case_file(&case_path("cs1_base.case")).unwrap();
        prepare(&case, None).unwrap().model
    })
}

fn assert_same(a: &MilpModel, b: &MilpModel) {
    assert_eq!(a.name, b.name);
    assert_eq!(a.variables.len(), b.variables.len());
    for (x, y) in a.variables.iter().zip(&b.variables) {
        assert_eq!(x, y);
    }
    assert_eq!(a.rows.len(), b.rows.len());
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!(x, y);
    }
    assert_eq!(a.objective, b.objective);
    assert_eq!(a.objective_constant, b.objective_constant);
    assert!(a == b);
}

/// The file formats carry neither variable roles nor annotations.
fn strip(m: &MilpModel) -> MilpModel {
    let mut m = m.clone();
    for v in &mut m.variables {
        v.role = VarRole::Auxiliary;
    }
    m.metadata.clear();
    m
}

#[test]
fn lp_file_round_trips() {
    let m = cs1();
    let text = write_lp(m).unwrap();
    let back = read_lp(&text).unwrap();
    assert_eq!(back.num_vars(), m.num_vars());
    assert_eq!(back.num_binaries(), m.num_binaries());
    assert_eq!(back.num_rows(), m.num_rows());
    assert_same(&back, &strip(m));
    assert_eq!(write_lp(&back).unwrap(), text);
}

#[test]
fn mps_file_round_trips() {
    let m = cs1();
    let text = write_mps(m).unwrap();
    // columns come back in column-major order
    let by_column = |m: &MilpModel| {
        let mut m = m.clone();
        for r in &mut m.rows {
            r.terms.sort_by_key(|t| t.0);
        }
        m.objective.sort_by_key(|t| t.0);
        m
    };
    let back = read_mps(&text).unwrap();
    assert_same(&by_column(&back), &by_column(&strip(m)));
    assert_eq!(write_mps(&back).unwrap(), text);
}

#[test]
fn model_files_are_reproducible() {
    let case = load_case_file(&case_path("micro.case")).unwrap();
    let a = prepare(&case, None).unwrap().model;
    let b = prepare(&case, None).unwrap().model;
    assert_eq!(write_lp(&a).unwrap(), write_lp(&b).unwrap());
    assert_eq!(write_mps(&a).unwrap(), write_mps(&b).unwrap());
}

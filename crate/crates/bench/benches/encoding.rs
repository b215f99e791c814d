use criterion::{criterion_group, criterion_main, Criterion};
use hens_bench::case;
use hens_core::milp::encode::encode_log_simplices;
use hens_core::milp::{lower_case_to_milp, MilpModel};
use hens_core::pwl::SimplexModel;
use hens_core::solver::{write_lp, write_mps};
use hens_core::superstructure::{VarKind, VarRole};
use hens_core::{build_symbolic_model, FitLibrary};

fn encoding(c: &mut Criterion) {
    let fit = SimplexModel::interpolate(&[[0.0, 1.0], [0.0, 1.0]], 8, |x| x[0] * x[1]).unwrap();
    c.bench_function("log_simplices_w8", |b| {
        b.iter(|| {
            let mut m = MilpModel::new("bench");
            for v in ["x", "y", "f"] {
                m.add_var(v, VarKind::Continuous, 0.0, 1.0, VarRole::Auxiliary).unwrap();
            }
            encode_log_simplices(&mut m, "e", &fit, &["x", "y"], &[("f".into(), 1.0)]).unwrap()
        })
    });

    let cs1 = case("cs1_base");
    let symbolic = build_symbolic_model(&cs1);
    let fits = FitLibrary::build(&cs1, &symbolic).unwrap();
    c.bench_function("symbolic_cs1", |b| b.iter(|| build_symbolic_model(&cs1)));
    c.bench_function("lower_cs1", |b| {
        b.iter(|| lower_case_to_milp(&cs1, &symbolic, &fits).unwrap())
    });
    let model = lower_case_to_milp(&cs1, &symbolic, &fits).unwrap();
    c.bench_function("write_lp_cs1", |b| b.iter(|| write_lp(&model).unwrap()));
    c.bench_function("write_mps_cs1", |b| b.iter(|| write_mps(&model).unwrap()));
}

criterion_group!(benches, encoding);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, Criterion};
use mfat_core::beam::analysis::modal;
use mfat_core::constraints::Model;
use mfat_core::fidelity::{make_hf, make_lf};
use mfat_core::harness::compare::{compare_aeroelastic, cruise_flow, ModelPair, Thresholds};
use mfat_core::laminate::lp_from_stack;
use mfat_core::{DesignVector, RunConfig};
use std::hint::black_box;

fn structure(c: &mut Criterion) {
    let cfg = RunConfig::benchmark();
    let lf = make_lf(&cfg).unwrap();
    let panels = DesignVector::initial(&lf).panels();
    c.bench_function("benchmark_lf_assemble", |b| b.iter(|| lf.structure(black_box(&panels)).unwrap()));
    let s = lf.structure(&panels).unwrap();
    c.bench_function("benchmark_lf_modal_10", |b| b.iter(|| modal(black_box(&s.system), 10).unwrap()));
    let stack: Vec<f64> = [0.0, 45.0, -45.0, 90.0, 0.0, 0.0, 45.0, -45.0].iter().map(|a: &f64| a.to_radians()).collect();
    c.bench_function("lp_from_stack_8", |b| b.iter(|| lp_from_stack(black_box(&stack)).unwrap()));
}

fn evaluation(c: &mut Criterion) {
    let cfg = RunConfig::toy();
    let (lf, hf) = (make_lf(&cfg).unwrap(), make_hf(&cfg).unwrap());
    let x = DesignVector::initial(&lf).values;
    let mut g = c.benchmark_group("toy_evaluation");
    g.sample_size(10);
    g.bench_function("lf_values", |b| b.iter(|| lf.evaluate_values(black_box(&x)).unwrap()));
    g.bench_function("hf_values", |b| b.iter(|| hf.evaluate_values(black_box(&x)).unwrap()));
    g.bench_function("lf_with_gradients", |b| b.iter(|| lf.evaluate(black_box(&x)).unwrap()));
    g.finish();
}

fn comparison(c: &mut Criterion) {
    let cfg = RunConfig::toy();
    let pair = ModelPair::new(&cfg).unwrap();
    let flow = cruise_flow(&cfg, 140.0, 0.69);
    let th = Thresholds::default();
    let mut g = c.benchmark_group("toy_comparison");
    g.sample_size(10);
    g.bench_function("aeroelastic_case", |b| b.iter(|| compare_aeroelastic(&pair, None, black_box(&flow), 5, &th).unwrap()));
    g.finish();
}

criterion_group!(benches, structure, evaluation, comparison);
criterion_main!(benches);

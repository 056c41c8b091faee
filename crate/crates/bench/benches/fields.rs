use criterion::{black_box, criterion_group, criterion_main, Criterion};
use twocharge_core::{
    circular_initial_condition, h0_field, h_field, integrate, make_params, LevelConfig, StateVector, StopCondition,
    Tolerances, Vec3,
};

fn field_evaluations(c: &mut Criterion) {
    let ret = make_params(1.0, -1, 0.5).unwrap();
    let sym = make_params(1.0, -1, 0.0).unwrap();
    let x = circular_initial_condition(&ret, 50.0).unwrap();
    let spatial = StateVector::new(x.r1, x.v1 + Vec3::new(0.0, 0.0, 0.01), x.r2, x.v2);

    c.bench_function("h0 planar", |b| b.iter(|| h0_field(black_box(&x), &ret).unwrap()));
    c.bench_function("h0 spatial", |b| b.iter(|| h0_field(black_box(&spatial), &ret).unwrap()));

    let cfg = LevelConfig::new(1);
    c.bench_function("h1 retarded", |b| b.iter(|| h_field(1, black_box(&x), &ret, &cfg).unwrap()));
    c.bench_function("h1 symmetric", |b| b.iter(|| h_field(1, black_box(&x), &sym, &cfg).unwrap()));
}

fn instantaneous_run(c: &mut Criterion) {
    let p = make_params(1.0, -1, 0.5).unwrap();
    let x = circular_initial_condition(&p, 50.0).unwrap();
    let field = move |y: &StateVector| h0_field(y, &p);
    let mut group = c.benchmark_group("integrate");
    group.sample_size(20);
    group.bench_function("level 0 to threshold", |b| {
        b.iter(|| integrate(&field, black_box(x), 1e7, Tolerances::default(), StopCondition::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, field_evaluations, instantaneous_run);
criterion_main!(benches);

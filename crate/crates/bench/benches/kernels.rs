use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use phlab::cuk::{build_cuk, solve_equilibrium};
use phlab::observers::gpebo::drem_mix;
use phlab::sim::rk4::{rk4_step, Rk4Workspace};
use phlab::{run_scenario, CukParams, Matrix, RootPolicy, Simulation, Vector};
use phlab_bench::nominal_scenario;
use std::hint::black_box;

fn equilibrium(c: &mut Criterion) {
    let p = CukParams::default();
    c.bench_function("solve_equilibrium", |b| {
        b.iter(|| solve_equilibrium(black_box(&p), black_box(-15.0), RootPolicy::default()).unwrap())
    });
}

fn rk4(c: &mut Criterion) {
    let model = build_cuk(&CukParams::default()).unwrap();
    let u = [0.6];
    let a = model.drift_matrix(&u);
    let b_vec = model.input_vector(&u);
    let mut ws = Rk4Workspace::new(4);
    let mut y = vec![0.75e-2, 3.3e-4, -1.5e-2, -4e-4];
    c.bench_function("rk4_step_open_loop", |b| {
        b.iter(|| {
            rk4_step(
                |_, s, out| {
                    let x = Vector::from_column_slice(s);
                    out.copy_from_slice((&a * x + &b_vec).as_slice());
                },
                0.0,
                &mut y,
                black_box(1e-7),
                &mut ws,
            )
            .unwrap()
        })
    });
}

fn drem(c: &mut Criterion) {
    let omega = Matrix::from_fn(4, 4, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
    let y = Vector::from_fn(4, |i, _| i as f64 - 1.5);
    c.bench_function("drem_mix_4x4", |b| b.iter(|| drem_mix(black_box(&omega), black_box(&y))));
}

fn closed_loop(c: &mut Criterion) {
    let scenario = nominal_scenario(1e-3);
    c.bench_function("closed_loop_step", |b| {
        b.iter_batched_ref(|| Simulation::new(&scenario).unwrap(), |sim| sim.step().unwrap(), BatchSize::SmallInput)
    });
    let mut g = c.benchmark_group("closed_loop_run");
    g.sample_size(10);
    g.bench_function("nominal_1ms", |b| b.iter(|| run_scenario(black_box(&scenario)).unwrap()));
    g.finish();
}

criterion_group!(kernels, equilibrium, rk4, drem, closed_loop);
criterion_main!(kernels);

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use scnsim_core::simulator::{generate_realization, run, SimConfig};
use scnsim_core::units::dbm_to_mw;
use scnsim_core::{build_case1, UeDensity};

fn config(lambda: f64, side: f64, trials: usize) -> SimConfig {
    let mut c = SimConfig::new(build_case1(), lambda, UeDensity::Finite(300.0), dbm_to_mw(24.0), dbm_to_mw(-95.0))
        .unwrap();
    c.region_side = side;
    c.trials = trials;
    c
}

fn simulation(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulation");
    g.sample_size(10);
    for (lambda, side) in [(100.0, 1.5), (1000.0, 0.6), (10000.0, 0.3)] {
        let cfg = config(lambda, side, 200);
        g.bench_function(format!("200 trials λ={lambda}"), |b| b.iter(|| run(black_box(&cfg)).unwrap()));
    }
    let cfg = config(1000.0, 0.6, 1);
    g.bench_function("realization λ=1e3", |b| b.iter(|| generate_realization(black_box(&cfg), 0)));
    g.finish();
}

criterion_group!(benches, simulation);
criterion_main!(benches);

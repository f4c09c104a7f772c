use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gasket_core::cocycle::Variant;
use gasket_core::induction::render_gasket;
use gasket_core::lyapunov::{gibbs_replicas, SpectrumOptions};
use gasket_core::thermo::{build_transfer, gibbs_chain, pressure_curve, solve_kappa0};
use gasket_core::Exec;

const MODES: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn render(c: &mut Criterion) {
    let mut g = c.benchmark_group("render_gasket_128_depth_10");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| render_gasket(128, 10, 256, exec)));
    }
    g.finish();
}

fn replicas(c: &mut Criterion) {
    let k = solve_kappa0(20, (1.0, 4.0), 1e-9).unwrap();
    let chain = gibbs_chain(&build_transfer(20, k.kappa0).unwrap()).unwrap();
    let opts = SpectrumOptions::new(Variant::B, 50_000);
    let mut g = c.benchmark_group("gibbs_replicas_8x50k");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| gibbs_replicas(&chain, 1, 8, &opts, exec).unwrap()));
    }
    g.finish();
}

fn pressure(c: &mut Criterion) {
    let kappas: Vec<f64> = (0..16).map(|i| 1.0 + 0.2 * i as f64).collect();
    let mut g = c.benchmark_group("pressure_curve_16_points");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| pressure_curve(20, &kappas, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, render, replicas, pressure);
criterion_main!(benches);

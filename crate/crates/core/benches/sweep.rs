use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use etppc_core::scenario::BUNDLED_SCENARIO;
use etppc_core::sweep::{run_sweep, run_sweep_sequential, SweepAxis, SweepOptions};

fn beta_axis(cells: usize) -> SweepAxis {
    let values = (0..cells).map(|i| format!("{:e}", 2e-3 + 1e-3 * i as f64)).collect::<Vec<_>>().join(",");
    SweepAxis::parse(&format!("trigger.beta={values}")).expect("valid axis")
}

fn bench_sweep(c: &mut Criterion) {
    let common = vec!["simulation.t_end=2.0".to_string()];
    let opts = SweepOptions { analyze: false, out_dir: None };
    let mut group = c.benchmark_group("sweep_2s_horizon");
    group.sample_size(10);
    for cells in [4usize, 16] {
        let axes = [beta_axis(cells)];
        group.bench_with_input(BenchmarkId::new("parallel", cells), &axes, |b, axes| {
            b.iter(|| black_box(run_sweep(BUNDLED_SCENARIO, &common, axes, &opts, None)))
        });
        group.bench_with_input(BenchmarkId::new("sequential", cells), &axes, |b, axes| {
            b.iter(|| black_box(run_sweep_sequential(BUNDLED_SCENARIO, &common, axes, &opts)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sweep);
criterion_main!(benches);

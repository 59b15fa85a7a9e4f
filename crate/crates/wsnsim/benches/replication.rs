//! Replication batch throughput: sequential loop vs rayon data-parallel
//! execution over independent seeds.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use wsnsim::scenario::preset::static_preset;
use wsnsim::scenario::{run_batch, ExecutionMode, RunOptions, ScenarioConfig};
use wsnsim::time::SimTime;

fn batch_config(until_s: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::parse(&static_preset()).expect("preset parses");
    cfg.until = SimTime::from_secs(until_s);
    cfg
}

fn bench_replications(c: &mut Criterion) {
    let cfg = batch_config(30);
    let opts = RunOptions::default();
    let mut group = c.benchmark_group("replication_batch");
    for &n_seeds in &[4usize, 16] {
        let seeds: Vec<u64> = (1..=n_seeds as u64).collect();
        group.bench_with_input(
            BenchmarkId::new("sequential", n_seeds),
            &seeds,
            |b, seeds| {
                b.iter(|| {
                    run_batch(&cfg, seeds, &opts, ExecutionMode::Sequential)
                        .expect("batch runs")
                        .len()
                })
            },
        );
        group.bench_with_input(
            BenchmarkId::new("parallel", n_seeds),
            &seeds,
            |b, seeds| {
                b.iter(|| {
                    run_batch(&cfg, seeds, &opts, ExecutionMode::Parallel)
                        .expect("batch runs")
                        .len()
                })
            },
        );
    }
    group.finish();
}

fn bench_single_run(c: &mut Criterion) {
    let cfg = batch_config(60);
    let opts = RunOptions::default();
    c.bench_function("static_scenario_60s", |b| {
        b.iter(|| {
            wsnsim::scenario::run_scenario(&cfg, &opts)
                .expect("run succeeds")
                .summary
                .events_dispatched
        })
    });
}

criterion_group!(benches, bench_replications, bench_single_run);
criterion_main!(benches);

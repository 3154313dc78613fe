use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mmreg::ctmc::Chain;
use mmreg::experiments::{run_big_sample, ExperimentConfig};
use mmreg::oracle::mc_conditional_sojourn;
use mmreg::regression::expected_sojourns;
use mmreg::study;
use mmreg::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn block_experiment(c: &mut Criterion) {
    let mut group = c.benchmark_group("block_experiment");
    group.sample_size(10);
    for q in [100, 500] {
        for (name, exec) in MODES {
            let mut cfg = ExperimentConfig::study(q, 7);
            cfg.execution = exec;
            group.bench_with_input(BenchmarkId::new(name, q), &cfg, |b, cfg| {
                b.iter(|| run_big_sample(cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let rates = study::rates();
    let mut group = c.benchmark_group("mc_conditional_sojourn");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| mc_conditional_sojourn(&rates, 5.0, 1, 0, 20_000, 3, exec).unwrap())
        });
    }
    group.finish();
}

fn sojourn_profiles(c: &mut Criterion) {
    let chain = Chain::new(study::rates());
    let data = study::dataset();
    let mut group = c.benchmark_group("expected_sojourns");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| expected_sojourns(&chain, &data, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, block_experiment, monte_carlo, sojourn_profiles);
criterion_main!(benches);

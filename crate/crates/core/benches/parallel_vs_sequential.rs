use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use skewbound::bounds_product::BoundInputPair;
use skewbound::cli::benchmark_report;
use skewbound::exec::Exec;
use skewbound::metric::gamma_matrix;
use skewbound::scenarios::{builtin_example, example_bounds, example_range, random_instance, run_sweep, EvalOptions};
use skewbound::search::{best_spq, SearchKind, SearchStrategy};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn sweep(c: &mut Criterion) {
    let scenario = builtin_example(4).unwrap();
    let bounds = example_bounds(4).unwrap();
    let (start, end) = example_range(4).unwrap();
    let options = EvalOptions::default();
    let mut group = c.benchmark_group("sweep_example4_200");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| run_sweep(&scenario, start, end, 200, &bounds, &options, exec).unwrap())
        });
    }
    group.finish();
}

fn random_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("benchmark_dim2_50");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| benchmark_report(2, 50, black_box(7), None, exec).unwrap())
        });
    }
    group.finish();
}

fn search(c: &mut Criterion) {
    let s = random_instance(3, 2, 3).unwrap();
    let gf = gamma_matrix(&s.state.at(0.0).unwrap(), s.p).unwrap();
    let pair = BoundInputPair::from_state(&gf, &s.observables[0], &s.observables[1]).unwrap();
    let mut group = c.benchmark_group("best_spq_hybrid_n9");
    group.sample_size(10);
    for (name, exec) in MODES {
        let strategy = SearchStrategy { exec, ..SearchStrategy::with_kind(SearchKind::Hybrid) };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| best_spq(&pair, 3, 1, &strategy).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, random_batch, search);
criterion_main!(benches);

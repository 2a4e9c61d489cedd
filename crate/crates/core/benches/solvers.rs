use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use procache::experiment::{load_scenario, run_sweep_with, Scheme, SweepSpec};
use procache::solver::{solve_exhaustive_coop_with, solve_exhaustive_noncoop_with};
use procache::{Exec, Scenario};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn highway(items: usize, cache: usize) -> Scenario {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/two_rsu_highway.json");
    let mut s = load_scenario(path).unwrap();
    s.library.item_count = items;
    s.reseeded(1).unwrap().with_cache_items(cache)
}

fn exhaustive(c: &mut Criterion) {
    let mut group = c.benchmark_group("exhaustive_noncoop");
    group.sample_size(10);
    for items in [14, 18] {
        let s = highway(items, items / 2);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, items), &s, |b, s| {
                b.iter(|| solve_exhaustive_noncoop_with(black_box(s), 0, exec).unwrap())
            });
        }
    }
    group.finish();

    let mut group = c.benchmark_group("exhaustive_coop");
    group.sample_size(10);
    let s = highway(9, 4);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, 9), &s, |b, s| {
            b.iter(|| solve_exhaustive_coop_with(black_box(s), exec).unwrap())
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let s = highway(20, 10);
    let spec = SweepSpec {
        cache_sizes: vec![1, 2, 3, 5, 10, 20],
        gammas: vec![0.01],
        schemes: vec![
            Scheme::Reactive,
            Scheme::NoncoopGreedy,
            Scheme::NoncoopOptimal,
            Scheme::CoopGreedy,
        ],
        replications: 4,
        base_seed: 1,
    };
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| run_sweep_with(black_box(&s), &spec, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, exhaustive, sweep);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use mcm_bench::corpus_checker;
use mcm_core::constraints::Mode;
use mcm_core::explore::ExploreOptions;

const PREDICATES: Mode = Mode {
    guards: true,
    predicates: true,
    stages: false,
};

fn toy(c: &mut Criterion) {
    let checker = corpus_checker("toy/toy.mcm-prog", "toy/toy.mcm", &[]);
    let mut g = c.benchmark_group("toy");
    for mode in [Mode::BASELINE, PREDICATES] {
        g.bench_with_input(BenchmarkId::from_parameter(mode), &mode, |b, &mode| {
            b.iter(|| checker.explore(&ExploreOptions::new(mode)).unwrap())
        });
    }
    g.finish();
}

fn litmus(c: &mut Criterion) {
    let mut g = c.benchmark_group("litmus");
    for (prog, mcm) in [
        ("litmus/sb.mcm-prog", "mcm/tso.mcm"),
        ("litmus/mp.mcm-prog", "mcm/pso.mcm"),
        ("litmus/iriw.mcm-prog", "mcm/tso.mcm"),
    ] {
        let checker = corpus_checker(prog, mcm, &[]);
        for mode in [PREDICATES, Mode::ALL] {
            let mut opts = ExploreOptions::new(mode);
            opts.stop_at_first_violation = false;
            g.bench_function(format!("{prog}/{mcm}/{mode}"), |b| {
                b.iter(|| checker.explore(&opts).unwrap())
            });
        }
    }
    g.finish();
}

fn gc(c: &mut Criterion) {
    let mut g = c.benchmark_group("gc");
    g.sample_size(10);
    for prog in [
        "gc/chicken.mcm-prog",
        "gc/staccato.mcm-prog",
        "gc/stopless.mcm-prog",
    ] {
        let checker = corpus_checker(prog, "mcm/pso.mcm", &[(0, 1), (1, 2)]);
        for workers in [1, 4] {
            let mut opts = ExploreOptions::new(Mode::ALL);
            opts.workers = workers;
            g.bench_function(format!("{prog}/pso/workers={workers}"), |b| {
                b.iter(|| checker.explore(&opts).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, toy, litmus, gc);
criterion_main!(benches);

use std::hint::black_box;

use churnline_bench::{finished_run, options, workload};
use churnline_core::checker::{run_checks, Property};
use churnline_core::engine::{parse_trace, write_trace};
use churnline_core::workload::run_scenario;
use churnline_core::Mode;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn simulate(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate");
    group.sample_size(20);
    for requests in [50, 200] {
        let sc = workload(1, 50, requests);
        for mode in [Mode::Line, Mode::SkipList] {
            group.bench_with_input(
                BenchmarkId::new(mode.to_string(), requests),
                &sc,
                |b, sc| b.iter(|| run_scenario(black_box(sc), &options(1, mode)).unwrap()),
            );
        }
    }
    group.finish();
}

fn check(c: &mut Criterion) {
    let out = finished_run(1, Mode::Line);
    c.bench_function("check_all", |b| {
        b.iter(|| run_checks(&Property::ALL, black_box(&out.trace), &out.snapshot))
    });
    let text = write_trace(&out.trace);
    c.bench_function("parse_trace", |b| {
        b.iter(|| parse_trace(black_box(&text)).unwrap())
    });
}

criterion_group!(benches, simulate, check);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use tarstop::sim::{gen_synthetic, replicate_with, Execution};
use tarstop::{table_rows, RuleConfig, SyntheticModel};

fn replication(c: &mut Criterion) {
    let record = gen_synthetic(&SyntheticModel::geometric(100_000, 0.03, 5.0), 7).unwrap();
    let mut group = c.benchmark_group("replicate");
    group.sample_size(10);
    for r in [50u64, 458] {
        let config = RuleConfig::qbcb(r, 0.8, 0.05).unwrap();
        for (label, mode) in [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel),
        ] {
            group.bench_with_input(BenchmarkId::new(label, r), &config, |b, cfg| {
                b.iter(|| replicate_with(&record, cfg, 1000, black_box(3), mode).unwrap())
            });
        }
    }
    group.finish();
}

fn planning(c: &mut Criterion) {
    let sizes = [
        14u64, 22, 29, 30, 31, 37, 44, 50, 63, 76, 88, 106, 129, 158, 198, 255, 332, 457,
    ];
    c.bench_function("table_rows", |b| {
        b.iter(|| table_rows(0.8, 0.05, black_box(&sizes), &[21]).unwrap())
    });
}

criterion_group!(benches, replication, planning);
criterion_main!(benches);

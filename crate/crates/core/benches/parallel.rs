use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use robust_coreset::coreset::Variant;
use robust_coreset::datagen::{generate, GenSpec};
use robust_coreset::solvers::{brute_force_opt, EnumBudget};
use robust_coreset::verify::{verify_approximate_coreset, AuditMode};
use robust_coreset::{mr_coreset, CoresetConfig, Exec, IndexSubset, PointSet, ProxySet, WeightFn};

fn blobs(n: usize) -> PointSet {
    let spec = GenSpec {
        n,
        dim: 2,
        k_true: 5,
        spread: 1.0,
        sep: 20.0,
        z_true: 10.min(n / 4),
        outlier_dist: 200.0,
        seed: 1,
    };
    generate(&spec).unwrap().0
}

const STRATEGIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn coreset(c: &mut Criterion) {
    let ps = blobs(4000);
    let mut group = c.benchmark_group("mr_coreset_n4000");
    group.sample_size(10);
    for variant in [Variant::Basic, Variant::Improved] {
        for (name, exec) in STRATEGIES {
            let mut cfg = CoresetConfig::new(5, 10, 0.25);
            cfg.variant = variant;
            cfg.exec = exec;
            group.bench_with_input(BenchmarkId::new(format!("{variant:?}"), name), &cfg, |b, cfg| {
                b.iter(|| mr_coreset(black_box(&ps), cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn brute_force(c: &mut Criterion) {
    let ps = blobs(25);
    let all = IndexSubset::all(25);
    let w = WeightFn::unit(0..25);
    let mut group = c.benchmark_group("brute_force_n25_k3_z2");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(name, |b| {
            b.iter(|| brute_force_opt(black_box(&ps), &all, &w, 3, 2, EnumBudget::default(), exec).unwrap())
        });
    }
    group.finish();
}

fn audit(c: &mut Criterion) {
    let ps = blobs(30);
    let cs = ProxySet::identity(&IndexSubset::all(30));
    let mut group = c.benchmark_group("exhaustive_audit_n30_k2_z2");
    group.sample_size(10);
    for (name, exec) in STRATEGIES {
        group.bench_function(name, |b| {
            b.iter(|| {
                verify_approximate_coreset(black_box(&ps), &cs, 2, 2, 0.1, AuditMode::Exhaustive, exec)
                    .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, coreset, brute_force, audit);
criterion_main!(benches);

//! Parallel vs sequential batch execution on independent cases.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lrec_core::batch::{run_indexed, ExecMode};
use lrec_core::psp::{generate_instance, solve_via_lfp, TreeGroupSpec};
use lrec_core::verify::{run_suite, VerifyOptions};

fn psp_specs(n: usize) -> Vec<TreeGroupSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    (0..n)
        .map(|_| {
            let (h, p) = (4, 5);
            let sigma = (0..1usize << h).map(|_| rng.gen_range(0..p)).collect();
            TreeGroupSpec::new(h, p, sigma, rng.gen_range(0..p))
        })
        .collect()
}

fn bench_modes(c: &mut Criterion) {
    let specs = psp_specs(32);
    let mut group = c.benchmark_group("psp-lfp-batch");
    group.sample_size(10);
    for mode in [ExecMode::Sequential, ExecMode::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| run_indexed(specs.len(), mode, |i| solve_via_lfp(&generate_instance(&specs[i]).expect("valid"))))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("verify-quotient");
    group.sample_size(10);
    for mode in [ExecMode::Sequential, ExecMode::Parallel] {
        let opts = VerifyOptions { mode, ..VerifyOptions::default() };
        group.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &opts, |b, opts| {
            b.iter(|| run_suite("quotient", opts).expect("known suite"))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_modes);
criterion_main!(benches);

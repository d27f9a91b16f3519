use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use roughcorr::controlled::FunctionSpec;
use roughcorr::simulate::{sample_paths_with, Sampler};
use roughcorr::stochastic::correction::IdentityExperiment;
use roughcorr::{CovarianceModel, Exec};

fn execs() -> [(&'static str, Exec); 2] {
    [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)]
}

fn sampling(c: &mut Criterion) {
    let model = CovarianceModel::fbm(0.45, 1.0).unwrap();
    let mut group = c.benchmark_group("sample_paths");
    group.sample_size(10);
    for (name, exec) in execs() {
        group.bench_with_input(BenchmarkId::new(name, 2048), &exec, |b, &exec| {
            b.iter(|| sample_paths_with(&model, 2048, 1, 64, black_box(1), Sampler::Auto, exec).unwrap())
        });
    }
    group.finish();
}

fn identity(c: &mut Criterion) {
    let model = CovarianceModel::fbm(0.45, 1.0).unwrap();
    let exp = IdentityExperiment::new(FunctionSpec::Quadratic, &model, 256, 8, 1).unwrap();
    let mut group = c.benchmark_group("verify_correction");
    group.sample_size(10);
    for (name, exec) in execs() {
        group.bench_with_input(BenchmarkId::new(name, 256), &exec, |b, &exec| {
            b.iter(|| exp.run(black_box(2), 64, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sampling, identity);
criterion_main!(benches);

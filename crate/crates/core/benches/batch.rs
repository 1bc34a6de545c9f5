// SPDX-License-Identifier: Apache-2.0

use criterion::{criterion_group, criterion_main, Criterion};
use minihls::batch::{verify_parallel, verify_sequential, BatchJob};
use minihls::corpus::CORPUS;
use minihls::sim::DEFAULT_SEED;

fn jobs() -> Vec<BatchJob> {
    CORPUS.iter().map(|k| BatchJob::corpus(k, DEFAULT_SEED, 8)).collect()
}

fn batch(c: &mut Criterion) {
    let jobs = jobs();
    let mut g = c.benchmark_group("corpus_verify");
    g.sample_size(10);
    g.bench_function("sequential", |b| b.iter(|| verify_sequential(&jobs)));
    g.bench_function("parallel", |b| b.iter(|| verify_parallel(&jobs)));
    g.finish();
}

criterion_group!(benches, batch);
criterion_main!(benches);

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use faithcurve::corpus::measure_batch;
use faithcurve::selection::{cross_validated_select, RocCriterion, SelectorConfig, SelectorMode};
use faithcurve::synthetic::{self, CandidateFixture};
use faithcurve::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn batch_extractiveness(c: &mut Criterion) {
    let mut group = c.benchmark_group("measure_batch");
    for n in [1_000, 10_000] {
        let corpus = synthetic::corpus(n, 400, 7);
        group.throughput(Throughput::Elements(n as u64));
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, n), &corpus, |b, corpus| {
                b.iter(|| measure_batch(black_box(corpus), exec))
            });
        }
    }
    group.finish();
}

fn cross_validation(c: &mut Criterion) {
    let sets = CandidateFixture {
        n_examples: 2_000,
        ..CandidateFixture::default()
    }
    .generate();
    let config = SelectorConfig::new(SelectorMode::Roc(RocCriterion::Youden), 10, 1).unwrap();
    let mut group = c.benchmark_group("cross_validated_select");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| cross_validated_select(black_box(&sets), &config, exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, batch_extractiveness, cross_validation);
criterion_main!(benches);

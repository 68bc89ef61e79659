use criterion::{criterion_group, criterion_main, Criterion};
use ladder_core::simlab::{run_boosting_experiment, ExperimentConfig};

fn boosting(c: &mut Criterion) {
    let mut group = c.benchmark_group("boosting");
    group.sample_size(10);
    let mut config = ExperimentConfig::boosting(1);
    config.repetitions = 1;
    group.bench_function("N=12000 k=400 one repetition", |b| {
        b.iter(|| run_boosting_experiment(&config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, boosting);
criterion_main!(benches);

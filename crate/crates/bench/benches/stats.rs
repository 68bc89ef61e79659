use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ladder_core::rng::seeded;
use ladder_core::stats::{paired_t, t_to_p};
use rand::Rng;

fn tail(c: &mut Criterion) {
    for dof in [1u64, 30, 8399] {
        c.bench_function(&format!("t_to_p/dof={dof}"), |b| {
            b.iter(|| t_to_p(black_box(2.3), dof))
        });
    }
}

fn paired(c: &mut Criterion) {
    let mut rng = seeded(5);
    let u: Vec<f64> = (0..8400).map(|_| f64::from(rng.random_range(0..2u8))).collect();
    let v: Vec<f64> = (0..8400).map(|_| f64::from(rng.random_range(0..2u8))).collect();
    c.bench_function("paired_t/n=8400", |b| b.iter(|| paired_t(black_box(&u), black_box(&v)).unwrap()));
}

criterion_group!(benches, tail, paired);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, Criterion};
use marblebot_bench::{canonical_marble, scenario};
use marblebot_core::lab::run_scenario;
use marblebot_core::oregonator::{find_limit_cycle, step};
use marblebot_core::{OscillatorParams, OscillatorState};
use std::hint::black_box;

fn oscillator(c: &mut Criterion) {
    let p = OscillatorParams::default();
    let s0 = OscillatorState::new(0.5, 0.3);
    let mut group = c.benchmark_group("oscillator");
    group.bench_function("step_one_period", |b| {
        b.iter(|| step(black_box(s0), 0.0, 20.445, &p, |_| 0.0).unwrap())
    });
    group.sample_size(20);
    group.bench_function("find_limit_cycle", |b| {
        b.iter(|| find_limit_cycle(black_box(&p), 0.0).unwrap())
    });
    group.finish();
}

fn marble(c: &mut Criterion) {
    c.bench_function("marble_advance_1s", |b| {
        b.iter_batched(
            || canonical_marble(1),
            |mut m| {
                for _ in 0..100 {
                    m.advance().unwrap();
                }
                m
            },
            criterion::BatchSize::SmallInput,
        )
    });
}

fn scenarios(c: &mut Criterion) {
    let mut group = c.benchmark_group("run_scenario");
    group.sample_size(10);
    for name in ["E1", "E4"] {
        let s = scenario(name);
        group.bench_function(name, |b| b.iter(|| run_scenario(black_box(&s)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, oscillator, marble, scenarios);
criterion_main!(benches);

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use slowlight_core::source::{self, PulseSequenceConfig};
use slowlight_core::wavepacket::{extract_delay, propagate, DelayOptions, TemporalEnvelope};
use slowlight_core::{complex_index, group_velocity, DelayModel};

fn index_sweep(c: &mut Criterion) {
    let model = DelayModel::default();
    let a = model.medium(395.0, 0.67).unwrap().strength;
    let d = &model.doublet;
    let span = 2.0 * std::f64::consts::PI * 3e9;
    let grid: Vec<f64> = (0..10_001).map(|i| -span + 2.0 * span * i as f64 / 10_000.0).collect();
    c.bench_function("index sweep 10k", |b| {
        b.iter(|| {
            grid.iter()
                .map(|&x| complex_index(x, d, a).re + group_velocity(x, d, a).unwrap_or(0.0))
                .sum::<f64>()
        })
    });
}

fn propagation(c: &mut Criterion) {
    let model = DelayModel::default();
    let medium = model.medium(395.0, 0.67).unwrap();
    let env = TemporalEnvelope::photon(8e-9, 2e-9, 20e-9, 128e-12, 200e-9).unwrap();
    c.bench_function("propagate photon", |b| {
        b.iter(|| propagate(black_box(&env), &medium, &model.doublet, 0.0).unwrap())
    });
    let out = propagate(&env, &medium, &model.doublet, 0.0).unwrap();
    c.bench_function("xcorr delay", |b| {
        b.iter(|| extract_delay(&env, &out.envelope, DelayOptions::default()).unwrap())
    });
}

fn simulation(c: &mut Criterion) {
    let cfg = PulseSequenceConfig::default();
    let mut g = c.benchmark_group("source");
    g.sample_size(10);
    g.bench_function("simulate 4 blocks", |b| {
        b.iter(|| source::simulate(&cfg, 4, 7).unwrap())
    });
    g.finish();
}

criterion_group!(benches, index_sweep, propagation, simulation);
criterion_main!(benches);

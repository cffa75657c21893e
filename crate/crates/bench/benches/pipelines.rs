use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mimo_ee::beamforming::build_precoders;
use mimo_ee::network::realize;
use mimo_ee::sca::{waterfill, WaterfillUser};
use mimo_ee::{BeamMode, Pipeline};
use mimo_ee_bench::{feasible_fixture, fixture};
use std::hint::black_box;

fn channels(c: &mut Criterion) {
    let mut g = c.benchmark_group("realize");
    for cells in [1, 3] {
        let (cfg, _) = fixture(40, cells, 0);
        g.bench_with_input(BenchmarkId::from_parameter(cells), &cfg, |b, cfg| {
            b.iter(|| realize(black_box(cfg), 7).unwrap())
        });
    }
    g.finish();
}

fn precoders(c: &mut Criterion) {
    let (cfg, real) = fixture(40, 1, 0);
    let mut g = c.benchmark_group("precoders_n64_k40");
    for mode in [BeamMode::Zf, BeamMode::Rzf, BeamMode::TfRzf] {
        g.bench_function(format!("{mode:?}"), |b| {
            b.iter(|| build_precoders(black_box(&real), &cfg, mode).unwrap())
        });
    }
    g.finish();
}

fn water(c: &mut Criterion) {
    let users: Vec<WaterfillUser> = (0..40)
        .map(|k| WaterfillUser {
            offset: 1.0 + 0.05 * k as f64,
            gain: 10f64.powf(2.0 + 0.1 * k as f64),
            norm_sq: 1.0 / 64.0,
        })
        .collect();
    c.bench_function("waterfill_40", |b| {
        b.iter(|| waterfill(black_box(0.05), 2.58, &users, 1.0, 39.8))
    });
}

fn pipelines(c: &mut Criterion) {
    let mut g = c.benchmark_group("pipeline_n64");
    g.sample_size(10);
    for (p, users) in [(Pipeline::Cwzf, 16), (Pipeline::Rzf, 24), (Pipeline::TfRzf, 24)] {
        let (cfg, real) = feasible_fixture(p, users, 1, 100);
        let pset = build_precoders(&real, &cfg, p.beam_mode()).unwrap();
        g.bench_function(format!("{p}_{users}"), |b| b.iter(|| p.run_on(black_box(&pset), &cfg)));
    }
    g.finish();
}

criterion_group!(benches, channels, precoders, water, pipelines);
criterion_main!(benches);

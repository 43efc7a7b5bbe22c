//! Sequential vs. data-parallel throughput.
//!
//! Every workload runs twice: inside a one-thread rayon pool, which matches
//! what the sequential fallback does, and inside the default global pool.
//! Build with `--no-default-features` to bench the plain-iterator path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pas_core::airsolver::sweep;
use pas_core::alphabets::make_ask;
use pas_core::channel::{Dmc, Quantizer};
use pas_core::infomeasures::Pmf;
use pas_core::signcode::{run_experiment, ChannelSpec, CodeMode, Decoder, ExperimentConfig};
use pas_core::typicality::{enumerate_b_typical, enumerate_typical, TypConfig};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("sequential", one), ("parallel", all)]
}

fn bench_sweep(c: &mut Criterion) {
    let ask = make_ask(1).unwrap();
    let q = Quantizer {
        num_bins: 400,
        clip_sigmas: 6.0,
    };
    let grid: Vec<f64> = (0..8).map(|i| i as f64 * 2.0).collect();
    let mut group = c.benchmark_group("air_sweep");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| sweep(&ask, &grid, &q)))
        });
    }
    group.finish();
}

fn bench_typical(c: &mut Criterion) {
    let pmf = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
    let cfg = TypConfig::new(12, 0.1);
    let input = Pmf::new(vec![0.3, 0.7]).unwrap();
    let bsc = Dmc::new(2, 2, vec![0.95, 0.05, 0.05, 0.95], vec![0.0, 1.0]).unwrap();
    let bcfg = TypConfig::new(14, 0.3);
    let mut group = c.benchmark_group("typicality");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::new("enumerate", name), |b| {
            b.iter(|| pool.install(|| enumerate_typical(&pmf, &cfg).unwrap()))
        });
        group.bench_function(BenchmarkId::new("b_typical", name), |b| {
            b.iter(|| pool.install(|| enumerate_b_typical(&input, &bsc, &bcfg).unwrap()))
        });
    }
    group.finish();
}

fn bench_sim(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        m: 1,
        channel: ChannelSpec::CyclicPairs { offset: 2 },
        amplitude_pmf: Some(vec![5.0 / 6.0, 1.0 / 6.0]),
        eps: 0.1,
        n: 10,
        gamma: 0.1,
        decoder: Decoder::Smd,
        mode: CodeMode::Iid,
        trials: 2000,
        seed: 7,
        budget: 10_000_000,
        decode_budget: 1_000_000,
    };
    let mut group = c.benchmark_group("sign_coding");
    group.sample_size(10);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| pool.install(|| run_experiment(&cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_typical, bench_sim);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use dbar_bench::{chain_pair, random_pair};
use dbar_core::gcb::pressure;
use dbar_core::ipm::d_p;
use dbar_core::lattice::{ConfigSpace, LocalFunction, Volume};
use dbar_core::measures::ProcessSpec;
use dbar_core::transport::{hamming_w1, q_p};
use dbar_core::Exponent;

fn bench_hamming_ot(c: &mut Criterion) {
    let mut group = c.benchmark_group("hamming_w1");
    for sites in [4i64, 6, 8] {
        let (mu, nu) = random_pair(sites, 0xBE11C);
        group.bench_with_input(BenchmarkId::from_parameter(sites), &sites, |b, _| {
            b.iter(|| hamming_w1(&mu, &nu).unwrap());
        });
    }
    group.finish();
}

fn bench_q_p(c: &mut Criterion) {
    let mut group = c.benchmark_group("q_p");
    for (label, p) in [
        ("p=3/2", Exponent::rational(3, 2).unwrap()),
        ("p=2", Exponent::TWO),
        ("p=inf", Exponent::Infinity),
    ] {
        let (mu, nu) = chain_pair(7);
        group.bench_function(label, |b| {
            b.iter(|| q_p(&mu, &nu, p).unwrap());
        });
    }
    group.finish();
}

fn bench_d_p_lp(c: &mut Criterion) {
    let (mu, nu) = random_pair(3, 0xD11);
    c.bench_function("d_p lipschitz LP (p=inf, 8 states)", |b| {
        b.iter(|| d_p(&mu, &nu, Exponent::Infinity).unwrap());
    });
}

fn bench_pressure(c: &mut Criterion) {
    let spec = ProcessSpec::two_state_flip(0.2).unwrap();
    let space = ConfigSpace::new(Volume::interval(0, 2).unwrap(), 2).unwrap();
    let f = LocalFunction::from_fn(space, |cfg| {
        let s = |k: usize| 2.0 * cfg[k] as f64 - 1.0;
        s(0) + 0.5 * s(0) * s(1) - 0.25 * s(1) * s(2)
    })
    .unwrap();
    c.bench_function("pressure range-3 markov", |b| {
        b.iter(|| pressure(&spec, &f).unwrap());
    });
}

criterion_group!(benches, bench_hamming_ot, bench_q_p, bench_d_p_lp, bench_pressure);
criterion_main!(benches);

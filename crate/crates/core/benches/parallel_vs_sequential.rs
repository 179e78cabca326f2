// Compares a single-thread rayon pool with the default pool on the main
// data-parallel kernels. Build with `--no-default-features` for the plain
// iterator path.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use repnet::binexp::zero_loss_search;
use repnet::cdm::{rho_mc, squared_diff, ClosedKind};
use repnet::envs::{EnvKind, Environment};
use repnet::rng;
use std::hint::black_box;

fn pools() -> Vec<(String, rayon::ThreadPool)> {
    let full = rayon::current_num_threads();
    let mut out = vec![("1".to_string(), rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap())];
    if full > 1 {
        out.push((full.to_string(), rayon::ThreadPoolBuilder::new().num_threads(full).build().unwrap()));
    }
    out
}

fn bench_zero_loss(c: &mut Criterion) {
    let env = Environment::build(EnvKind::Binary5x3 { seed: 7 }).unwrap();
    let z = env.draw_nm_sample(9, 22, &mut rng::stream(7)).unwrap();
    let mut g = c.benchmark_group("zero_loss_search");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::new("threads", &name), &z, |b, z| {
            b.iter(|| pool.install(|| zero_loss_search(black_box(z)).unwrap()))
        });
    }
    g.finish();
}

fn bench_rho_mc(c: &mut Criterion) {
    let sampler = ClosedKind::Quadratic11.sampler();
    let mut g = c.benchmark_group("rho_mc");
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::new("threads", &name), |b| {
            b.iter(|| pool.install(|| rho_mc(&sampler, squared_diff, &0.3, &-0.6, 1 << 18, 1).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_zero_loss, bench_rho_mc);
criterion_main!(benches);

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use papc_bench::{fixed_iterations, smre1d_problem, smre2d_problem, tv_problem};
use papc_core::papc::solve;
use papc_core::IterateState;

fn tv(c: &mut Criterion) {
    let mut g = c.benchmark_group("tv_denoise_100_iters");
    for n in [256usize, 4096] {
        let prob = tv_problem(n);
        let cfg = fixed_iterations(&prob, 0.9, 100, false);
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve(&prob, &cfg, IterateState::zeros(&prob)).unwrap())
        });
    }
    g.finish();
}

fn smre1d(c: &mut Criterion) {
    let p = smre1d_problem(512, 10);
    let tau = 0.8 / p.problem.f().lipschitz_grad();
    let mut g = c.benchmark_group("smre1d_n512_L10_20_iters");
    g.sample_size(20);
    for parallel in [false, true] {
        let cfg = fixed_iterations(&p.problem, tau, 20, parallel);
        let label = if parallel { "parallel" } else { "sequential" };
        g.bench_function(label, |b| {
            b.iter(|| solve(&p.problem, &cfg, IterateState::zeros(&p.problem)).unwrap())
        });
    }
    g.finish();
}

fn smre2d(c: &mut Criterion) {
    let p = smre2d_problem(64, 3);
    let cfg = fixed_iterations(&p.problem, 0.02, 5, false);
    let mut g = c.benchmark_group("smre2d_n64_L3");
    g.sample_size(10);
    g.bench_function("5_iters", |b| {
        b.iter(|| solve(&p.problem, &cfg, IterateState::zeros(&p.problem)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, tv, smre1d, smre2d);
criterion_main!(benches);

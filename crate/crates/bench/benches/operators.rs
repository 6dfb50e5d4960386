use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use papc_core::io::gaussian_psf;
use papc_core::linops::{operator_norm_sq, Convolution2d, Grad1dDirichlet, Grad2dNeumann};
use papc_core::problems::enumerate_windows;
use papc_core::LinearOperator;

fn ramp(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 * 0.37).sin()).collect()
}

fn apply_pairs(c: &mut Criterion) {
    let ops: Vec<(&str, Box<dyn LinearOperator>)> = vec![
        ("grad1d_4096", Box::new(Grad1dDirichlet::new(4096).unwrap())),
        ("grad2d_128", Box::new(Grad2dNeumann::new(128).unwrap())),
        (
            "conv2d_64_k7",
            Box::new(Convolution2d::new(64, gaussian_psf(7, 1.0).unwrap()).unwrap()),
        ),
    ];
    let mut g = c.benchmark_group("apply_and_adjoint");
    for (name, op) in &ops {
        let x = ramp(op.domain_dim());
        let y = ramp(op.codomain_dim());
        let mut out = vec![0.0; op.codomain_dim()];
        let mut back = vec![0.0; op.domain_dim()];
        g.bench_function(*name, |b| {
            b.iter(|| {
                op.apply_into(black_box(&x), &mut out);
                op.apply_adjoint_into(black_box(&y), &mut back);
            })
        });
    }
    g.finish();
}

fn power_iteration(c: &mut Criterion) {
    let op = Grad2dNeumann::new(32).unwrap();
    c.bench_function("operator_norm_grad2d_32", |b| {
        b.iter(|| operator_norm_sq(&op, 500, 1e-10, 0))
    });
}

fn windows(c: &mut Criterion) {
    c.bench_function("enumerate_windows_512_10", |b| {
        b.iter(|| enumerate_windows(black_box(512), 10).unwrap())
    });
}

criterion_group!(benches, apply_pairs, power_iteration, windows);
criterion_main!(benches);

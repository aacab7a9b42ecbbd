use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mdl_relu::estimator::{mdl_estimate, reduce, Method};
use mdl_relu::model::{generate_dataset, sample_true_param};
use mdl_relu::rng::seeded;
use mdl_relu::spectral::{
    approx_basis, gram_report, leading_spectrum, monte_carlo_fim, residual_matrix, R_SERIES_REL_TOL,
};
use mdl_relu::{CodedBasis, NetworkModel};

fn fim(c: &mut Criterion) {
    let mut g = c.benchmark_group("monte_carlo_fim");
    g.sample_size(10);
    for m in [250, 1000] {
        let model = NetworkModel::sample(4, m, 1.0, 1).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), &model, |b, model| {
            b.iter(|| monte_carlo_fim(black_box(model), 20_000, 7).unwrap())
        });
    }
    g.finish();

    let model = NetworkModel::sample(4, 1000, 1.0, 1).unwrap();
    let j = monte_carlo_fim(&model, 20_000, 7).unwrap();
    let mut g = c.benchmark_group("leading_spectrum");
    g.sample_size(10);
    g.bench_function("m1000_k20", |b| b.iter(|| leading_spectrum(black_box(&j), 20).unwrap()));
    g.finish();
}

fn analytic(c: &mut Criterion) {
    let mut g = c.benchmark_group("analytic");
    g.sample_size(10);
    let model = NetworkModel::sample(4, 500, 1.0, 2).unwrap();
    g.bench_function("residual_matrix_m500", |b| {
        b.iter(|| residual_matrix(black_box(&model), R_SERIES_REL_TOL).unwrap())
    });
    let wide = NetworkModel::sample(4, 4000, 1.0, 2).unwrap();
    g.bench_function("approx_basis_gram_m4000", |b| {
        b.iter(|| gram_report(&approx_basis(black_box(&wide)).unwrap()).unwrap())
    });
    g.finish();
}

fn estimator(c: &mut Criterion) {
    let model = NetworkModel::sample(2, 500, 1.0, 3).unwrap();
    let ab = approx_basis(&model).unwrap();
    let basis = CodedBasis::from_approx(&ab, &gram_report(&ab).unwrap());
    let vstar = sample_true_param(500, &mut seeded(4)).unwrap();
    let mut g = c.benchmark_group("mdl_estimate");
    g.sample_size(10);
    for n in [100, 1000] {
        let data = generate_dataset(&model, &vstar, n, &mut seeded(5)).unwrap();
        let spec = basis.code(2.0, 1.0, n).unwrap();
        let problem = reduce(&data, basis.rows.view(), 1.0).unwrap();
        for method in [Method::Exhaustive, Method::NearestPlane] {
            g.bench_function(format!("{method:?}_n{n}"), |b| {
                b.iter(|| mdl_estimate(black_box(&problem), &spec, 2.0, method).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, fim, analytic, estimator);
criterion_main!(benches);

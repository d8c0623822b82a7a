use std::hint::black_box;

use bpsurv::bernstein::basis_all;
use bpsurv::likelihood::BpLikelihood;
use bpsurv::simulate::{generate_dataset, GeneratorSettings};
use bpsurv::{fit_ml, fixture, sample_posterior, BernsteinBasis, McmcConfig, MlOptions, ModelKind, PriorSpec};
use criterion::{criterion_group, criterion_main, Criterion};

fn basis(c: &mut Criterion) {
    let mut group = c.benchmark_group("basis_all");
    for m in [10usize, 50] {
        group.bench_function(format!("m={m}"), |b| b.iter(|| basis_all(black_box(m), black_box(0.37))));
    }
    group.finish();
}

fn likelihood(c: &mut Criterion) {
    let data = generate_dataset(&GeneratorSettings::weibull(200), 1).unwrap();
    let basis = BernsteinBasis::new(15, data.max_time()).unwrap();
    let mut group = c.benchmark_group("loglik_grad_n200_m15");
    for model in [ModelKind::Ph, ModelKind::Po, ModelKind::Aft] {
        let lik = BpLikelihood::new(model, &data, basis);
        let theta = vec![0.1; lik.dim()];
        let mut grad = vec![0.0; lik.dim()];
        group.bench_function(model.to_string(), |b| b.iter(|| lik.loglik_grad(black_box(&theta), &mut grad)));
    }
    group.finish();
}

fn fits(c: &mut Criterion) {
    let larynx = fixture("larynx").unwrap();
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    group.bench_function("ml_ph_larynx", |b| {
        b.iter(|| fit_ml(ModelKind::Ph, &larynx, None, &MlOptions::default()).unwrap())
    });
    let config = McmcConfig { chains: 1, iter: 200, warmup: 100, ..McmcConfig::default() };
    group.bench_function("bayes_ph_larynx_200_iter", |b| {
        b.iter(|| sample_posterior(ModelKind::Ph, &larynx, &PriorSpec::default(), &config, None).unwrap())
    });
    group.finish();
}

criterion_group!(benches, basis, likelihood, fits);
criterion_main!(benches);

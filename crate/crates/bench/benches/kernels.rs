use bell_halfline::bell::{bell_correlator, family_quadruple};
use bell_halfline::compress::build_compression;
use bell_halfline::forms::{carleman_form, carleman_form_log, hankel_form_laplace};
use bell_halfline::momentum::{bump_spinor, momentum_pairings, spatial_ft};
use bell_halfline::specfun::{bessel_k0, bessel_k1};
use bell_halfline::testfn::{build_phi_tilde, damp_exponential, normalize};
use bell_halfline::{KernelForm, QuadratureSpec, Side, TSIRELSON_C};
use criterion::{black_box, criterion_group, criterion_main, Criterion};

fn bessel(c: &mut Criterion) {
    let grid: Vec<f64> = (0..256).map(|i| 1e-3 * 1.05f64.powi(i)).collect();
    c.bench_function("bessel_k0_k1_256", |b| {
        b.iter(|| grid.iter().map(|&u| bessel_k0(black_box(u)).unwrap() + bessel_k1(u).unwrap()).sum::<f64>())
    });
}

fn forms(c: &mut Criterion) {
    let spec = QuadratureSpec::default();
    let phi = normalize(&build_phi_tilde(1e-2).unwrap(), &spec).unwrap();
    let damped = normalize(&damp_exponential(&build_phi_tilde(1e-2).unwrap()), &spec).unwrap();
    let mut g = c.benchmark_group("forms_eps_1e-2");
    g.sample_size(20);
    g.bench_function("carleman_direct", |b| b.iter(|| carleman_form(black_box(&phi), &spec).unwrap()));
    g.bench_function("carleman_log", |b| b.iter(|| carleman_form_log(black_box(&phi), &spec).unwrap()));
    g.bench_function("hankel_laplace", |b| b.iter(|| hankel_form_laplace(black_box(&damped), 1.0, &spec).unwrap()));
    g.finish();
}

fn correlator(c: &mut Criterion) {
    let spec = QuadratureSpec::default();
    let q = family_quadruple(1e-2, KernelForm::Massless, TSIRELSON_C, &spec).unwrap();
    let mut g = c.benchmark_group("correlator");
    g.sample_size(10);
    g.bench_function("massless_eps_1e-2", |b| b.iter(|| bell_correlator(black_box(&q), KernelForm::Massless, &spec).unwrap()));
    g.finish();
}

fn compression(c: &mut Criterion) {
    let mut g = c.benchmark_group("compression");
    g.sample_size(10);
    g.bench_function("J6_K6", |b| b.iter(|| build_compression(black_box(6), 6).unwrap()));
    g.finish();
}

fn momentum(c: &mut Criterion) {
    let spec = QuadratureSpec::default();
    let phi = build_phi_tilde(1e-2).unwrap();
    c.bench_function("structured_transform_64", |b| {
        b.iter(|| (0..64).map(|i| spatial_ft(&phi, black_box(17.0 * i as f64)).norm()).sum::<f64>())
    });
    let u = bump_spinor(-2.25, -0.25, Side::Alice).unwrap();
    let v = bump_spinor(0.25, 2.25, Side::Bob).unwrap();
    let mut g = c.benchmark_group("momentum");
    g.sample_size(10);
    g.bench_function("bump_pairing_eta_1e-2", |b| {
        b.iter(|| momentum_pairings(&[black_box(&u)], &[&v], 1e-2, 1.0, &spec).unwrap())
    });
    g.finish();
}

criterion_group!(benches, bessel, forms, correlator, compression, momentum);
criterion_main!(benches);

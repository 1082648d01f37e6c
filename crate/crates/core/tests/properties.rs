use bell_halfline::compress::{
    carleman_entry_piecewise_constant, symmetric_eigensolve, symmetric_eigensolve_with_vectors, DyadicBasis,
    build_compression,
};
use bell_halfline::forms::rayleigh_quotient;
use bell_halfline::momentum::{bump_hat, spatial_ft};
use bell_halfline::quadrature::integrate_2d_kernel;
use bell_halfline::specfun::{bessel_k0, bessel_k1, cosh_kernel, smooth_step};
use bell_halfline::testfn::{assemble_quadruple, build_phi_tilde, normalize};
use bell_halfline::{KernelForm, QuadratureSpec, TestFunction1D};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn smooth_step_in_unit_range_and_monotone(eps in 1e-4f64..2.0, a in -0.5f64..1.5, b in -0.5f64..1.5) {
        let (x, y) = (a.min(b) * eps, a.max(b) * eps);
        let (sx, sy) = (smooth_step(x, eps), smooth_step(y, eps));
        prop_assert!((0.0..=1.0).contains(&sx));
        prop_assert!(sx <= sy);
    }

    #[test]
    fn bessel_two_sided_bound(log_u in -6.0f64..1.7) {
        let u = 10f64.powf(log_u);
        let k1 = bessel_k1(u).unwrap();
        prop_assert!((-u).exp() / u <= k1 && k1 <= 1.0 / u);
        prop_assert!(bessel_k0(u).unwrap() < k1);
    }

    #[test]
    fn cosh_kernel_even_and_bounded(r in -200.0f64..200.0) {
        let h = cosh_kernel(r);
        prop_assert_eq!(h, cosh_kernel(-r));
        prop_assert!(h > 0.0 || r.abs() > 1400.0);
        prop_assert!(h <= 0.5);
    }

    #[test]
    fn carleman_entry_symmetric_and_scales(a in 0.0f64..5.0, la in 0.01f64..3.0, c in 0.0f64..5.0, lc in 0.01f64..3.0, s in 0.1f64..10.0) {
        let e = carleman_entry_piecewise_constant((a, a + la), (c, c + lc)).unwrap();
        let f = carleman_entry_piecewise_constant((c, c + lc), (a, a + la)).unwrap();
        prop_assert!((e - f).abs() <= 1e-13 * e.abs());
        // The kernel is homogeneous of degree -1, so the entry scales linearly.
        let g = carleman_entry_piecewise_constant((s * a, s * (a + la)), (s * c, s * (c + lc))).unwrap();
        prop_assert!((g - s * e).abs() <= 1e-11 * g.abs());
        prop_assert!(e > 0.0);
    }

    #[test]
    fn transforms_are_conjugate_symmetric(eps in 0.005f64..0.5, k in 0.0f64..5000.0) {
        let phi = build_phi_tilde(eps).unwrap();
        let plus = spatial_ft(&phi, k);
        let minus = spatial_ft(&phi, -k);
        prop_assert!((plus - minus.conj()).norm() <= 1e-10 * (1.0 + plus.norm()));
    }

    #[test]
    fn bump_transform_even_and_bounded(xi in -400.0f64..400.0) {
        let b = bump_hat(xi);
        prop_assert_eq!(b, bump_hat(-xi));
        prop_assert!(b.abs() <= 1.0 + 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn quadruple_ansatz_holds(eps in 0.01f64..0.5, c in 0.0f64..1.0) {
        let phi = normalize(&build_phi_tilde(eps).unwrap(), &QuadratureSpec::default()).unwrap();
        let q = assemble_quadruple(&phi, c).unwrap();
        let grid: Vec<f64> = (0..200).map(|i| 0.013 * i as f64 + 1e-3).collect();
        prop_assert!(q.ansatz_deviation(&grid) < 1e-12);
    }

    #[test]
    fn rayleigh_quotient_below_norm(eps in 0.005f64..0.9, scale in 0.1f64..10.0) {
        let phi = build_phi_tilde(eps).unwrap().scaled(scale);
        let q = rayleigh_quotient(&phi, KernelForm::Massless, &QuadratureSpec::default()).unwrap();
        prop_assert!(q > 0.0 && q <= PI);
    }

    #[test]
    fn graded_basis_is_orthonormal(levels in 0u32..7, span in 0u32..6) {
        let b = DyadicBasis::new(levels, span).unwrap();
        let n = b.len();
        prop_assert_eq!(n, (1usize << span) + levels as usize);
        let g = b.gram();
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g[i * n + j] - want).abs() < 1e-13);
            }
        }
    }
}

#[test]
fn jacobi_on_random_symmetric_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = 50;
    for _ in 0..3 {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = rng.gen_range(-1.0..1.0);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let d = symmetric_eigensolve_with_vectors(&a, n).unwrap();
        let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
        assert!((trace - d.values.iter().sum::<f64>()).abs() < 1e-10);
        assert!(d.values.windows(2).all(|w| w[0] <= w[1]));
        for (col, &lambda) in d.values.iter().enumerate() {
            let mut residual = 0.0;
            for i in 0..n {
                let av: f64 = (0..n).map(|k| a[i * n + k] * d.vectors[k * n + col]).sum();
                residual += (av - lambda * d.vectors[i * n + col]).powi(2);
            }
            assert!(residual.sqrt() < 1e-9, "pair {col}: residual {}", residual.sqrt());
        }
        assert_eq!(symmetric_eigensolve(&a, n).unwrap(), d.values);
    }
}

#[test]
fn random_entries_match_tensor_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = QuadratureSpec::default();
    for _ in 0..20 {
        let a: f64 = rng.gen_range(0.0..4.0);
        let b = a + rng.gen_range(0.01..2.0);
        let c: f64 = rng.gen_range(0.0..4.0);
        let d = c + rng.gen_range(0.01..2.0);
        let closed = carleman_entry_piecewise_constant((a, b), (c, d)).unwrap();
        let u = TestFunction1D::indicator(a, b).unwrap();
        let v = TestFunction1D::indicator(c, d).unwrap();
        let q = integrate_2d_kernel(&|x, y| 1.0 / (x + y), &u, &v, &spec).unwrap().value;
        assert!((closed - q).abs() < 1e-9, "[{a}, {b}] x [{c}, {d}]: {closed} vs {q}");
    }
}

#[test]
fn nested_compressions_do_not_lose_the_edge() {
    let mut previous = 0.0;
    for (j, k) in [(0, 0), (1, 1), (2, 2), (3, 3), (4, 4), (5, 5)] {
        let r = build_compression(j, k).unwrap();
        assert!(r.lambda_max >= previous - 1e-12, "({j}, {k})");
        assert!(r.lambda_max <= PI);
        previous = r.lambda_max;
    }
}

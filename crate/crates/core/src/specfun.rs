//! Modified Bessel functions `K0`, `K1`, the cosh kernel `h(r) = 1/(2 cosh(r/2))`
//! and the smooth step used to cut off the test-function families.
//!
//! `K0`/`K1` are evaluated in three regimes:
//!
//! * `u <= 2`: ascending power series with the logarithmic term,
//! * `2 < u <= 25`: Steed's continued fraction for the ratio `K1/K0`
//!   combined with Temme's normalisation sum,
//! * `u > 25`: the Hankel asymptotic expansion.

use crate::error::{domain, Result};
use std::f64::consts::PI;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Accuracy contract of the Bessel routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselAccuracy {
    /// Relative error bound on `[1e-8, 700]`.
    pub rel_tol: f64,
    /// Upper end of the power-series regime.
    pub series_limit: f64,
    /// Lower end of the asymptotic regime.
    pub asymptotic_start: f64,
}

pub const BESSEL_ACCURACY: BesselAccuracy = BesselAccuracy {
    rel_tol: 1e-12,
    series_limit: 2.0,
    asymptotic_start: 25.0,
};

/// `K0(u)` for `u > 0`.
pub fn bessel_k0(u: f64) -> Result<f64> {
    check_arg("bessel_k0", u)?;
    Ok(k0_k1(u).0)
}

/// `K1(u)` for `u > 0`.
pub fn bessel_k1(u: f64) -> Result<f64> {
    check_arg("bessel_k1", u)?;
    Ok(k0_k1(u).1)
}

fn check_arg(routine: &'static str, u: f64) -> Result<()> {
    if u <= 0.0 {
        return Err(domain(routine, format!("argument must be positive, got {u}")));
    }
    Ok(())
}

/// Both `K0(u)` and `K1(u)` without argument validation.
///
/// Returns NaN for NaN input and for `u <= 0`; hot loops that already
/// guarantee a positive argument call this directly.
pub fn k0_k1(u: f64) -> (f64, f64) {
    if u.is_nan() || u <= 0.0 {
        return (f64::NAN, f64::NAN);
    }
    if u <= BESSEL_ACCURACY.series_limit {
        (k0_series(u), k1_series(u))
    } else if u <= BESSEL_ACCURACY.asymptotic_start {
        k0_k1_steed(u)
    } else if u > 745.0 {
        (0.0, 0.0)
    } else {
        (asymptotic(0.0, u), asymptotic(1.0, u))
    }
}

/// `K1(u)` without argument validation (see [`k0_k1`]).
pub fn k1_unchecked(u: f64) -> f64 {
    if u.is_nan() || u <= 0.0 {
        return f64::NAN;
    }
    if u <= BESSEL_ACCURACY.series_limit {
        k1_series(u)
    } else if u <= BESSEL_ACCURACY.asymptotic_start {
        k0_k1_steed(u).1
    } else if u > 745.0 {
        0.0
    } else {
        asymptotic(1.0, u)
    }
}

fn k0_series(u: f64) -> f64 {
    let y = 0.25 * u * u;
    let log_term = (0.5 * u).ln() + EULER_GAMMA;
    let mut term = 1.0; // y^k / (k!)^2
    let mut i0 = 1.0;
    let mut harmonic = 0.0;
    let mut tail = 0.0;
    for k in 1..200 {
        let kf = k as f64;
        term *= y / (kf * kf);
        harmonic += 1.0 / kf;
        i0 += term;
        tail += harmonic * term;
        if term * harmonic < 1e-18 * tail.abs().max(1.0) {
            break;
        }
    }
    -log_term * i0 + tail
}

fn k1_series(u: f64) -> f64 {
    let y = 0.25 * u * u;
    // term_k = y^k / (k! (k+1)!)
    let mut term = 1.0;
    let mut i1_sum = 1.0;
    let mut h_k = 0.0;
    let mut h_k1 = 1.0;
    let mut psi_sum = (h_k + h_k1 - 2.0 * EULER_GAMMA) * term;
    for k in 1..200 {
        let kf = k as f64;
        term *= y / (kf * (kf + 1.0));
        h_k = h_k1;
        h_k1 += 1.0 / (kf + 1.0);
        i1_sum += term;
        let add = (h_k + h_k1 - 2.0 * EULER_GAMMA) * term;
        psi_sum += add;
        if term < 1e-18 * i1_sum && add.abs() < 1e-18 * psi_sum.abs().max(1e-300) {
            break;
        }
    }
    let i1 = 0.5 * u * i1_sum;
    1.0 / u + (0.5 * u).ln() * i1 - 0.25 * u * psi_sum
}

/// Steed's continued fraction CF2 with Temme's sum for order zero.
fn k0_k1_steed(x: f64) -> (f64, f64) {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

/// Hankel expansion `sqrt(pi/2u) e^{-u} sum a_k(nu) / u^k`.
fn asymptotic(nu: f64, u: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        let next = term * (mu - odd * odd) / (8.0 * kf * u);
        if next.abs() >= term.abs() && k > 10 {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    (PI / (2.0 * u)).sqrt() * (-u).exp() * sum
}

/// The cosh kernel `h(r) = 1 / (2 cosh(r/2))`, written so that it never overflows.
pub fn cosh_kernel(r: f64) -> f64 {
    let e = (-r.abs()).exp();
    (-0.5 * r.abs()).exp() / (1.0 + e)
}

/// Smooth step: 0 for `x <= 0`, 1 for `x >= eps`, and
/// `1 / (1 + exp(eps (2x - eps) / (x (x - eps))))` in between.
///
/// The exponent is clamped to `[-700, 700]`.
pub fn smooth_step(x: f64, eps: f64) -> f64 {
    if x.is_nan() || eps.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return 0.0;
    }
    if x >= eps {
        return 1.0;
    }
    let exponent = (eps * (2.0 * x - eps) / (x * (x - eps))).clamp(-700.0, 700.0);
    1.0 / (1.0 + exponent.exp())
}

//! Carleman and Bessel–Hankel quadratic forms, each by more than one route:
//! the direct double integral, the log-variable autocorrelation and the
//! Laplace representation.

use crate::error::{domain, Error, Result};
use crate::quadrature::{
    autocorrelation, gauss_legendre, integrate_2d_kernel, sample, LineFunction, Mesh, Profile, QuadratureSpec,
    Substitution,
};
use crate::specfun::{cosh_kernel, k1_unchecked};
use crate::testfn::{FamilyTag, TestFunction1D};
use rayon::prelude::*;

/// Pairing kernel: `1/u` or `m K1(m u)`, with `u = x + y` for the
/// half-line forms and `u = y - x` for the Bell pairings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelForm {
    /// The Carleman kernel.
    Massless,
    /// The Bessel kernel with mass `m > 0`.
    Massive(f64),
}

impl KernelForm {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelForm::Massless => Ok(()),
            KernelForm::Massive(m) if m > 0.0 && m.is_finite() => Ok(()),
            KernelForm::Massive(m) => Err(domain("KernelForm", format!("mass must be positive, got {m}"))),
        }
    }

    /// Kernel profile at separation `u > 0`.
    #[inline]
    pub fn profile(&self, u: f64) -> f64 {
        match *self {
            KernelForm::Massless => 1.0 / u,
            KernelForm::Massive(m) => m * k1_unchecked(m * u),
        }
    }

    pub fn mass(&self) -> f64 {
        match *self {
            KernelForm::Massless => 0.0,
            KernelForm::Massive(m) => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Direct,
    LogAutocorr,
    Laplace,
}

impl Route {
    pub fn name(&self) -> &'static str {
        match self {
            Route::Direct => "direct",
            Route::LogAutocorr => "log",
            Route::Laplace => "laplace",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormValue {
    pub value: f64,
    pub route: Route,
    pub error_estimate: f64,
}

/// Rejects supports that reach into the negative axis, and supports that
/// touch 0 where the function blows up at least like `x^{-1/2}`.
fn check_half_line(phi: &TestFunction1D) -> Result<()> {
    let (lo, hi) = phi.support();
    if lo < 0.0 {
        return Err(Error::Precondition(format!("support [{lo}, {hi}] must lie in [0, inf)")));
    }
    if lo == 0.0 {
        // x^{-1/2} blow-up keeps sqrt(x)|phi(x)| from decaying toward 0.
        let weighted = |x: f64| phi.eval(x).abs() * x.sqrt();
        let (d1, d2) = (1e-12 * hi, 1e-6 * hi);
        let (near, far) = (weighted(d1), weighted(d2));
        if !near.is_finite() || (near > 0.0 && near >= 0.5 * far) {
            return Err(Error::Precondition(
                "function is not square integrable against the kernel near x = 0".into(),
            ));
        }
    }
    Ok(())
}

fn direct_form(phi: &TestFunction1D, kernel: KernelForm, spec: &QuadratureSpec, route: Route) -> Result<FormValue> {
    let k = move |x: f64, y: f64| kernel.profile(x + y);
    let r = integrate_2d_kernel(&k, phi, phi, spec)?;
    Ok(FormValue { value: r.value, route, error_estimate: r.error_estimate })
}

/// `iint phi(x) phi(y) / (x + y) dx dy` by the tensor rule.
pub fn carleman_form(phi: &TestFunction1D, spec: &QuadratureSpec) -> Result<FormValue> {
    check_half_line(phi)?;
    direct_form(phi, KernelForm::Massless, spec, Route::Direct)
}

/// `psi(s) = e^{s/2} phi(e^s)` as a line function in `s = ln x`.
pub fn log_profile(phi: &TestFunction1D) -> Result<Profile<impl Fn(f64) -> f64 + Sync + '_>> {
    check_half_line(phi)?;
    let mut bps = phi.breakpoints();
    if bps[0] == 0.0 {
        bps[0] = bps[bps.len() - 1] * (-90f64).exp();
    }
    let lo = bps[0];
    let s_bps: Vec<f64> = bps.iter().map(|b| b.ln()).collect();
    Ok(Profile::new(
        move |s: f64| {
            let x = s.exp();
            if x < lo {
                0.0
            } else {
                (0.5 * s).exp() * phi.eval(x)
            }
        },
        s_bps,
    ))
}

/// Quadrature layout for the `r`-integral of the log route: panels of width
/// at most 0.8 that break at every difference of log-breakpoints.
fn lag_edges(s_bps: &[f64], panels: usize) -> Vec<f64> {
    let span = s_bps[s_bps.len() - 1] - s_bps[0];
    let mut cuts: Vec<f64> = Vec::new();
    for a in s_bps {
        for b in s_bps {
            let d = a - b;
            if d.abs() <= span {
                cuts.push(d);
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let max_width = 3.2 / panels as f64;
    let mut edges = vec![cuts[0]];
    for pair in cuts.windows(2) {
        let len = pair[1] - pair[0];
        let n = ((len / max_width).ceil() as usize).max(1);
        for i in 1..=n {
            edges.push(pair[0] + len * i as f64 / n as f64);
        }
    }
    edges
}

fn log_route_once(phi: &TestFunction1D, spec: &QuadratureSpec) -> Result<f64> {
    let psi = log_profile(phi)?;
    let s_bps = psi.breakpoints();
    let mesh = Mesh::from_edges(&lag_edges(&s_bps, spec.panels), &gauss_legendre(spec.nodes_per_panel));
    let terms: Vec<Result<f64>> = mesh
        .x
        .par_iter()
        .zip(&mesh.w)
        .map(|(&r, &w)| Ok(w * cosh_kernel(r) * autocorrelation(&psi, r, spec)?))
        .collect();
    let mut total = 0.0;
    for t in terms {
        total += t?;
    }
    Ok(total)
}

/// The Carleman form as `int h(r) W(r) dr` with `W` the autocorrelation of
/// the log profile.
pub fn carleman_form_log(phi: &TestFunction1D, spec: &QuadratureSpec) -> Result<FormValue> {
    let coarse = log_route_once(phi, spec)?;
    let fine = log_route_once(phi, &spec.refined())?;
    Ok(FormValue { value: coarse, route: Route::LogAutocorr, error_estimate: (fine - coarse).abs() })
}

/// `W(r)` for the log profile of `phi`.
pub fn log_autocorrelation(phi: &TestFunction1D, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    let psi = log_profile(phi)?;
    autocorrelation(&psi, r, spec)
}

/// `iint m K1(m(x + y)) phi(x) phi(y) dx dy` by the tensor rule.
pub fn hankel_form(phi: &TestFunction1D, m: f64, spec: &QuadratureSpec) -> Result<FormValue> {
    KernelForm::Massive(m).validate()?;
    check_half_line(phi)?;
    direct_form(phi, KernelForm::Massive(m), spec, Route::Direct)
}

/// Upper end of the `theta` range: `exp(-m x_min cosh theta) < 1e-18`.
fn theta_max(m: f64, x_min: f64) -> f64 {
    if x_min <= 0.0 {
        return 45.0;
    }
    let t = 41.5 / (m * x_min);
    if t <= 1.0 {
        1.0
    } else {
        t.acosh().min(45.0)
    }
}

fn laplace_route_once(phi: &TestFunction1D, m: f64, spec: &QuadratureSpec) -> Result<f64> {
    let s = sample(phi, &QuadratureSpec { substitution: Substitution::None, ..*spec })?;
    let tmax = theta_max(m, phi.support().0);
    let n = ((tmax / (1.6 / spec.panels as f64)).ceil() as usize).max(spec.panels);
    let edges: Vec<f64> = (0..=n).map(|i| tmax * i as f64 / n as f64).collect();
    let mesh = Mesh::from_edges(&edges, &gauss_legendre(spec.nodes_per_panel));
    let terms: Vec<f64> = mesh
        .x
        .par_iter()
        .zip(&mesh.w)
        .map(|(&th, &w)| {
            let t = m * th.cosh();
            let lap = s.integrate_against(|x| (-t * x).exp());
            w * th.cosh() * lap * lap
        })
        .collect();
    Ok(m * terms.iter().sum::<f64>())
}

/// The Hankel form through `m int cosh(theta) |L phi(m cosh theta)|^2 dtheta`,
/// nonnegative by construction.
pub fn hankel_form_laplace(phi: &TestFunction1D, m: f64, spec: &QuadratureSpec) -> Result<FormValue> {
    KernelForm::Massive(m).validate()?;
    check_half_line(phi)?;
    let coarse = laplace_route_once(phi, m, spec)?;
    let fine = laplace_route_once(phi, m, &spec.refined())?;
    Ok(FormValue { value: coarse, route: Route::Laplace, error_estimate: (fine - coarse).abs() })
}

/// `(1/N) iint e^{-beta(x+y)}/(x+y) phi~(x) phi~(y)` with `N = ||e^{-x} phi~||^2`.
pub fn weighted_carleman_bound(phi_tilde: &TestFunction1D, beta: u32, spec: &QuadratureSpec) -> Result<f64> {
    if !matches!(phi_tilde.family_tag(), FamilyTag::PhiEps { .. }) {
        return Err(Error::Precondition("weighted bound needs an undamped, undilated cutoff profile".into()));
    }
    if beta != 1 && beta != 2 {
        return Err(domain("weighted_carleman_bound", format!("beta must be 1 or 2, got {beta}")));
    }
    let s = sample(phi_tilde, &QuadratureSpec { substitution: Substitution::None, ..*spec })?;
    let n = s.integrate_against(|x| phi_tilde.eval(x) * (-2.0 * x).exp());
    let b = beta as f64;
    let k = move |x: f64, y: f64| (-b * (x + y)).exp() / (x + y);
    let r = integrate_2d_kernel(&k, phi_tilde, phi_tilde, spec)?;
    Ok(r.value / n)
}

/// Form value divided by `||phi||^2`.
pub fn rayleigh_quotient(phi: &TestFunction1D, kernel: KernelForm, spec: &QuadratureSpec) -> Result<f64> {
    kernel.validate()?;
    let n = phi.measure_l2_norm(spec)?;
    if !(n > 0.0) {
        return Err(Error::Precondition("Rayleigh quotient of the zero function".into()));
    }
    let v = match kernel {
        KernelForm::Massless => carleman_form(phi, spec)?,
        KernelForm::Massive(m) => hankel_form(phi, m, spec)?,
    };
    Ok(v.value / (n * n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::{build_phi_tilde, damp_exponential, dilate, normalize};

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn exponential_oracle() {
        // iint F(x+y) = int s F(s) ds gives 2 int_0^inf e^{-s} ds = 2
        let e = TestFunction1D::normalized_exponential();
        let v = carleman_form(&e, &spec()).unwrap();
        assert!((v.value - 2.0).abs() < 1e-8, "{}", v.value);
        let q = rayleigh_quotient(&e, KernelForm::Massless, &spec()).unwrap();
        assert!((q - 2.0).abs() < 1e-8);
    }

    #[test]
    fn indicator_closed_form() {
        let ind = TestFunction1D::indicator(1.0, 2.0).unwrap();
        let v = carleman_form(&ind, &spec()).unwrap().value;
        // F(4) - 2F(3) + F(2) with F(s) = s ln s
        let exact = 10.0 * 2f64.ln() - 6.0 * 3f64.ln();
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
    }

    #[test]
    fn routes_agree_at_moderate_eps() {
        let phi = normalize(&build_phi_tilde(0.1).unwrap(), &spec()).unwrap();
        let d = carleman_form(&phi, &spec()).unwrap();
        let l = carleman_form_log(&phi, &spec()).unwrap();
        let lx = carleman_form(&phi, &spec().with_substitution(Substitution::LogXY)).unwrap();
        assert!((d.value - l.value).abs() < 1e-9, "{} {}", d.value, l.value);
        assert!((d.value - lx.value).abs() < 1e-9);
        let w0 = log_autocorrelation(&phi, 0.0, &spec()).unwrap();
        assert!((w0 - 1.0).abs() < 1e-10);
        for i in -20..=20 {
            let w = log_autocorrelation(&phi, 0.3 * i as f64, &spec()).unwrap();
            assert!((-1e-15..=1.0 + 1e-10).contains(&w), "r={} W={w}", 0.3 * i as f64);
        }
        assert!((carleman_form(&phi.scaled(3.0), &spec()).unwrap().value - 9.0 * d.value).abs() < 1e-12);
    }

    #[test]
    fn hankel_routes_and_scaling() {
        let e = TestFunction1D::normalized_exponential();
        let d = hankel_form(&e, 1.0, &spec()).unwrap();
        let l = hankel_form_laplace(&e, 1.0, &spec()).unwrap();
        assert!(d.value > 0.0 && d.value < 2.0);
        assert!((d.value - l.value).abs() < 1e-9, "{} {}", d.value, l.value);

        let big = damp_exponential(&build_phi_tilde(0.1).unwrap());
        let big = normalize(&big, &spec()).unwrap();
        let a = hankel_form(&big, 1.0, &spec()).unwrap().value;
        let b = hankel_form_laplace(&big, 1.0, &spec()).unwrap().value;
        assert!((a - b).abs() < 1e-9, "{a} {b}");
        for m in [0.25, 4.0] {
            let u = dilate(&big, m).unwrap();
            let lm = hankel_form_laplace(&u, m, &spec()).unwrap().value;
            assert!((lm - b).abs() < 1e-10);
        }
        assert!(hankel_form(&big, 0.0, &spec()).is_err());
    }

    #[test]
    fn laplace_route_nonnegative_for_sign_changing_input() {
        let f = TestFunction1D::custom(|x| (3.0 * x).sin() * (-x).exp(), vec![0.0, 30.0]).unwrap();
        let v = hankel_form_laplace(&f, 1.0, &spec()).unwrap();
        assert!(v.value >= 0.0);
        let d = hankel_form(&f, 1.0, &spec()).unwrap();
        assert!((d.value - v.value).abs() < 1e-8);
    }

    #[test]
    fn singular_origin_is_rejected() {
        let f = TestFunction1D::custom(|x| 1.0 / x.sqrt(), vec![0.0, 1.0]).unwrap();
        assert!(matches!(carleman_form(&f, &spec()), Err(Error::Precondition(_))));
    }
}

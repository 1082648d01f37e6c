//! Composite Gauss–Legendre quadrature on fixed panel layouts.
//!
//! Every rule here is deterministic: panel layouts depend only on the
//! breakpoints of the integrand and on [`QuadratureSpec`], and all sums run
//! in panel-index order even when rows of a tensor rule are evaluated in
//! parallel.

use crate::error::{Error, Result};
use rayon::prelude::*;

/// Coordinates in which a double integral over `(0, inf)^2` is discretised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Substitution {
    /// Gauss nodes placed directly in `x` and `y`.
    #[default]
    None,
    /// Gauss nodes placed in `s = ln x`, `t = ln y`.
    LogXY,
    /// Reduction to the difference variable `r = s - t` (autocorrelation route).
    ConvolutionR,
}

/// Rule order and panel layout for every integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Base panel count. Uniform rules use exactly this many panels; function
    /// meshes use this many panels per e-fold of a positive segment.
    pub panels: usize,
    /// Gauss–Legendre order on each panel.
    pub nodes_per_panel: usize,
    /// Absolute tolerance used by self-consistency checks.
    pub abs_tol: f64,
    pub substitution: Substitution,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { panels: 6, nodes_per_panel: 16, abs_tol: 1e-10, substitution: Substitution::None }
    }
}

impl QuadratureSpec {
    pub fn with_panels(mut self, panels: usize) -> Self {
        self.panels = panels;
        self
    }

    pub fn with_substitution(mut self, substitution: Substitution) -> Self {
        self.substitution = substitution;
        self
    }

    /// The next refinement level: twice as many panels.
    pub fn refined(&self) -> Self {
        Self { panels: self.panels * 2, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.panels < 1 || self.nodes_per_panel < 2 {
            return Err(Error::Precondition(format!(
                "quadrature spec needs panels >= 1 and nodes_per_panel >= 2 (got {} and {})",
                self.panels, self.nodes_per_panel
            )));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::Precondition("abs_tol must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Outcome of a quadrature: value plus `|refined - coarse|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    /// Radius at which an infinite range was cut, when one was.
    pub truncation_radius: Option<f64>,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Computes the `n`-point Gauss–Legendre rule by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> GaussRule {
    assert!(n >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d.is_finite() { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Quadrature nodes and weights on an explicit panel layout.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Mesh {
    /// Places `rule` on every panel `[edges[i], edges[i+1]]`.
    pub fn from_edges(edges: &[f64], rule: &GaussRule) -> Self {
        let mut x = Vec::with_capacity(edges.len().saturating_sub(1) * rule.nodes.len());
        let mut w = Vec::with_capacity(x.capacity());
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if b <= a {
                continue;
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (t, wt) in rule.nodes.iter().zip(&rule.weights) {
                x.push(mid + half * t);
                w.push(half * wt);
            }
        }
        Self { x, w }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `sum w_i f(x_i)`; fails on the first non-finite sample.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (&x, &w) in self.x.iter().zip(&self.w) {
            let v = f(x);
            if !v.is_finite() {
                return Err(Error::Evaluation { node: x, value: v });
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

/// A real function on the line with declared breakpoints. The first and last
/// breakpoints bound the support; interior breakpoints mark points where the
/// function is only piecewise smooth.
pub trait LineFunction: Sync {
    fn value(&self, x: f64) -> f64;
    fn breakpoints(&self) -> Vec<f64>;
}

/// A closure-backed [`LineFunction`].
pub struct Profile<F> {
    pub f: F,
    pub breakpoints: Vec<f64>,
}

impl<F: Fn(f64) -> f64 + Sync> Profile<F> {
    pub fn new(f: F, mut breakpoints: Vec<f64>) -> Self {
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Self { f, breakpoints }
    }
}

impl<F: Fn(f64) -> f64 + Sync> LineFunction for Profile<F> {
    fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

/// Grading ratio and depth used when a segment ends at the origin.
const ORIGIN_RATIO: f64 = 0.25;
const ORIGIN_DEPTH: f64 = 1e-16;

/// Panel edges for a single smooth segment `[a, b]`.
///
/// Segments on one side of the origin get geometric panels (`panels` per
/// e-fold); a segment touching 0 gets uniform panels with the first one
/// graded geometrically toward 0.
pub fn segment_edges(a: f64, b: f64, panels: usize) -> Vec<f64> {
    if b <= a {
        return vec![a, b];
    }
    if b <= 0.0 {
        let mut e: Vec<f64> = segment_edges(-b, -a, panels).into_iter().map(|v| -v).collect();
        e.reverse();
        return e;
    }
    if a > 0.0 {
        let n = panels * ((b / a).ln().ceil() as usize).max(1);
        let ratio = (b / a).powf(1.0 / n as f64);
        let mut edges = Vec::with_capacity(n + 1);
        edges.push(a);
        let mut e = a;
        for _ in 1..n {
            e *= ratio;
            edges.push(e);
        }
        edges.push(b);
        return edges;
    }
    if a == 0.0 {
        let n = 2 * panels;
        let h = b / n as f64;
        let mut edges = vec![0.0];
        let mut graded = Vec::new();
        let mut e = h;
        while e > ORIGIN_DEPTH * b {
            e *= ORIGIN_RATIO;
            graded.push(e);
        }
        graded.reverse();
        edges.extend(graded);
        for i in 1..n {
            edges.push(h * i as f64);
        }
        edges.push(b);
        return edges;
    }
    let n = 2 * panels;
    (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect()
}

/// Panel edges for a whole function: every breakpoint interval is laid out
/// with [`segment_edges`].
pub fn function_edges(breakpoints: &[f64], panels: usize) -> Vec<f64> {
    let mut edges: Vec<f64> = Vec::new();
    for pair in breakpoints.windows(2) {
        let seg = segment_edges(pair[0], pair[1], panels);
        if edges.is_empty() {
            edges.extend(seg);
        } else {
            edges.extend(seg.into_iter().skip(1));
        }
    }
    edges
}

/// Nodes, weights and sampled values of a function on its mesh.
#[derive(Debug, Clone, Default)]
pub struct SampledMesh {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub f: Vec<f64>,
}

impl SampledMesh {
    pub fn new(mesh: Mesh, f: &dyn LineFunction) -> Result<Self> {
        let mut values = Vec::with_capacity(mesh.len());
        for &x in &mesh.x {
            let v = f.value(x);
            if !v.is_finite() {
                return Err(Error::Evaluation { node: x, value: v });
            }
            values.push(v);
        }
        Ok(Self { x: mesh.x, w: mesh.w, f: values })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `sum w_i f(x_i) g(x_i)`.
    pub fn integrate_against(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.x.iter().zip(&self.w).zip(&self.f).map(|((&x, &w), &f)| w * f * g(x)).sum()
    }
}

/// The mesh of `f` in the coordinates requested by `spec`.
///
/// With [`Substitution::LogXY`] the Gauss nodes are placed in `ln x` on the
/// same panel layout, and weights carry the Jacobian `x`; this requires the
/// support to lie in `(0, inf)`.
pub fn sample(f: &dyn LineFunction, spec: &QuadratureSpec) -> Result<SampledMesh> {
    spec.validate()?;
    let bps = f.breakpoints();
    if bps.len() < 2 {
        return Ok(SampledMesh::default());
    }
    let rule = gauss_legendre(spec.nodes_per_panel);
    let edges = function_edges(&bps, spec.panels);
    let mesh = match spec.substitution {
        Substitution::LogXY => {
            if bps[0] <= 0.0 {
                return Err(Error::Precondition(
                    "logarithmic substitution needs a support inside (0, inf)".into(),
                ));
            }
            let log_edges: Vec<f64> = edges.iter().map(|e| e.ln()).collect();
            let m = Mesh::from_edges(&log_edges, &rule);
            let x: Vec<f64> = m.x.iter().map(|s| s.exp()).collect();
            let w = m.w.iter().zip(&x).map(|(w, x)| w * x).collect();
            Mesh { x, w }
        }
        _ => Mesh::from_edges(&edges, &rule),
    };
    SampledMesh::new(mesh, f)
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]` with `spec.panels`
/// uniform panels; the error estimate comes from doubling the panel count.
pub fn integrate_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, spec: &QuadratureSpec) -> Result<IntegralResult> {
    spec.validate()?;
    if !(a < b) {
        return Err(Error::Precondition(format!("integrate_1d needs a < b, got [{a}, {b}]")));
    }
    let rule = gauss_legendre(spec.nodes_per_panel);
    let run = |panels: usize| -> Result<f64> {
        let edges: Vec<f64> = (0..=panels).map(|i| a + (b - a) * i as f64 / panels as f64).collect();
        Mesh::from_edges(&edges, &rule).integrate(&f)
    };
    let coarse = run(spec.panels)?;
    let fine = run(spec.panels * 2)?;
    Ok(IntegralResult {
        value: coarse,
        error_estimate: (fine - coarse).abs(),
        evaluations: 3 * spec.panels * spec.nodes_per_panel,
        truncation_radius: None,
    })
}

/// Tensor-product sum `sum_ij w_i w_j K(x_i, y_j) phi(x_i) psi(y_j)`.
///
/// Rows are evaluated in parallel and summed in row order.
pub fn tensor_sum(kernel: &(dyn Fn(f64, f64) -> f64 + Sync), a: &SampledMesh, b: &SampledMesh) -> Result<f64> {
    let rows: Vec<Result<f64>> = (0..a.len())
        .into_par_iter()
        .map(|i| {
            let x = a.x[i];
            let mut acc = 0.0;
            for j in 0..b.len() {
                let k = kernel(x, b.x[j]);
                if !k.is_finite() {
                    return Err(Error::Evaluation { node: x, value: k });
                }
                acc += b.w[j] * b.f[j] * k;
            }
            Ok(a.w[i] * a.f[i] * acc)
        })
        .collect();
    let mut total = 0.0;
    for r in rows {
        total += r?;
    }
    Ok(total)
}

/// `iint kernel(x, y) phi(x) psi(y) dx dy` over the support rectangle.
pub fn integrate_2d_kernel(
    kernel: &(dyn Fn(f64, f64) -> f64 + Sync),
    phi: &dyn LineFunction,
    psi: &dyn LineFunction,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let run = |s: &QuadratureSpec| -> Result<(f64, usize)> {
        let a = sample(phi, s)?;
        let b = sample(psi, s)?;
        Ok((tensor_sum(kernel, &a, &b)?, a.len() * b.len()))
    };
    let (coarse, n1) = run(spec)?;
    let (fine, n2) = run(&spec.refined())?;
    Ok(IntegralResult {
        value: coarse,
        error_estimate: (fine - coarse).abs(),
        evaluations: n1 + n2,
        truncation_radius: None,
    })
}

/// Panel edges for the overlap integral `int psi(t + r) psi(t) dt`.
fn autocorrelation_edges(bps: &[f64], r: f64, panels: usize) -> Vec<f64> {
    let (lo, hi) = (bps[0], bps[bps.len() - 1]);
    let start = lo.max(lo - r);
    let end = hi.min(hi - r);
    if !(start < end) {
        return Vec::new();
    }
    let mut cuts: Vec<f64> = bps
        .iter()
        .flat_map(|&b| [b, b - r])
        .filter(|&c| c > start && c < end)
        .collect();
    cuts.push(start);
    cuts.push(end);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    let mut edges = vec![cuts[0]];
    for pair in cuts.windows(2) {
        let len = pair[1] - pair[0];
        let n = panels * (len.ceil() as usize).max(1);
        for i in 1..=n {
            edges.push(pair[0] + len * i as f64 / n as f64);
        }
    }
    edges
}

/// `W(r) = int psi(t + r) psi(t) dt`, with panels that respect the
/// breakpoints of both shifted copies.
pub fn autocorrelation(psi: &dyn LineFunction, r: f64, spec: &QuadratureSpec) -> Result<f64> {
    spec.validate()?;
    let bps = psi.breakpoints();
    if bps.len() < 2 {
        return Ok(0.0);
    }
    let rule = gauss_legendre(spec.nodes_per_panel);
    let edges = autocorrelation_edges(&bps, r, spec.panels);
    if edges.is_empty() {
        return Ok(0.0);
    }
    Mesh::from_edges(&edges, &rule).integrate(|t| psi.value(t + r) * psi.value(t))
}

/// `int exp(-t x) phi(x) dx` over the support of `phi`.
pub fn laplace_transform(phi: &dyn LineFunction, t: f64, spec: &QuadratureSpec) -> Result<IntegralResult> {
    if !(t >= 1.0) {
        return Err(Error::Domain { routine: "laplace_transform", detail: format!("t must be >= 1, got {t}") });
    }
    let base = QuadratureSpec { substitution: Substitution::None, ..*spec };
    let coarse = sample(phi, &base)?;
    let fine = sample(phi, &base.refined())?;
    let v0 = coarse.integrate_against(|x| (-t * x).exp());
    let v1 = fine.integrate_against(|x| (-t * x).exp());
    Ok(IntegralResult {
        value: v0,
        error_estimate: (v1 - v0).abs(),
        evaluations: coarse.len() + fine.len(),
        truncation_radius: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::cosh_kernel;

    #[test]
    fn gauss_rule_moments() {
        for n in [2usize, 5, 16, 33] {
            let r = gauss_legendre(n);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-14);
            // exact for degree 2n - 1
            let deg = 2 * n - 2;
            let m: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((m - 2.0 / (deg as f64 + 1.0)).abs() < 1e-13, "n={n}");
            assert!(r.nodes.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn one_dimensional_examples() {
        let spec = QuadratureSpec::default();
        let r = integrate_1d(|x| x, 0.0, 1.0, &spec.with_panels(1)).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);
        let h = integrate_1d(cosh_kernel, -80.0, 80.0, &spec.with_panels(64)).unwrap();
        assert!((h.value - std::f64::consts::PI).abs() < 1e-12, "{}", h.value);
        let e = integrate_1d(|x| (-x).exp(), 0.0, 40.0, &spec.with_panels(8)).unwrap();
        assert!((e.value - (1.0 - (-40f64).exp())).abs() < 1e-13);
        assert!(integrate_1d(|x| 1.0 / x, -1.0, 1.0, &spec.with_panels(1)).is_ok());
        let bad = integrate_1d(|x| if x > 0.5 { f64::NAN } else { 1.0 }, 0.0, 1.0, &spec);
        assert!(matches!(bad, Err(Error::Evaluation { .. })));
    }

    #[test]
    fn indicator_autocorrelation_is_overlap_length() {
        let t = 3.0;
        let ind = Profile::new(|x: f64| if x.abs() <= t { 1.0 } else { 0.0 }, vec![-t, t]);
        let spec = QuadratureSpec::default();
        for &r in &[0.0, 0.7, -2.5, 5.9, 6.0, 8.0] {
            let w = autocorrelation(&ind, r, &spec).unwrap();
            let exact = (2.0 * t - f64::abs(r)).max(0.0);
            assert!((w - exact).abs() < 1e-13, "r={r}: {w} vs {exact}");
        }
    }

    #[test]
    fn segment_edges_cover_and_grade() {
        let e = segment_edges(0.0, 40.0, 4);
        assert_eq!(e[0], 0.0);
        assert_eq!(*e.last().unwrap(), 40.0);
        assert!(e[1] < 1e-14);
        assert!(e.windows(2).all(|p| p[0] < p[1]));
        let m = segment_edges(-2.0, -0.5, 3);
        assert_eq!(m[0], -2.0);
        assert_eq!(*m.last().unwrap(), -0.5);
        assert!(m.windows(2).all(|p| p[0] < p[1]));
    }
}

//! Galerkin compressions of the Carleman operator in nested piecewise-constant
//! orthonormal families.
//!
//! The family with parameters `(J, K)` lives on `[0, 2^K]`. It spans every
//! step function that is constant on the unit cells `[n, n+1)`, plus the
//! functions that are constant on the dyadic shells `[2^-j, 2^-j+1)` of
//! `[0, 1]` down to `[0, 2^-J)`. The spanning set is written as a Haar system:
//! the normalized indicator of `[0, 2^K]`, all Haar wavelets whose support is
//! at least one unit long, and `J` extra wavelets on `[0, 2^-j+1]`,
//! `j = 1..J`. The dimension is `N = 2^K + J`; increasing either parameter
//! enlarges the span.

use crate::error::{Error, Result};
use crate::quadrature::LineFunction;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Largest matrix dimension accepted for dense storage.
pub const MAX_DIMENSION: usize = 4096;

/// A piecewise-constant function: value `coefficients[i]` on
/// `[breakpoints[i], breakpoints[i+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepElement {
    pub breakpoints: Vec<f64>,
    pub coefficients: Vec<f64>,
}

impl StepElement {
    fn indicator(a: f64, b: f64) -> Self {
        Self { breakpoints: vec![a, b], coefficients: vec![1.0 / (b - a).sqrt()] }
    }

    fn wavelet(a: f64, b: f64) -> Self {
        let h = 1.0 / (b - a).sqrt();
        Self { breakpoints: vec![a, 0.5 * (a + b), b], coefficients: vec![h, -h] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let bp = &self.breakpoints;
        if x < bp[0] || x >= bp[bp.len() - 1] {
            return 0.0;
        }
        let i = bp.partition_point(|&b| b <= x) - 1;
        self.coefficients[i]
    }

    fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints.windows(2).zip(&self.coefficients).map(|(w, &c)| (w[0], w[1], c))
    }
}

impl LineFunction for StepElement {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

/// Nested Haar-type family with refinement depth `J` near the origin and
/// span `[0, 2^K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicBasis {
    pub levels: u32,
    pub span_exponent: u32,
    pub elements: Vec<StepElement>,
}

impl DyadicBasis {
    pub fn dimension_for(levels: u32, span_exponent: u32) -> Option<usize> {
        1usize.checked_shl(span_exponent)?.checked_add(levels as usize)
    }

    pub fn new(levels: u32, span_exponent: u32) -> Result<Self> {
        let n = Self::dimension_for(levels, span_exponent)
            .filter(|&n| n <= MAX_DIMENSION && span_exponent < 60)
            .ok_or_else(|| {
                Error::Resource(format!(
                    "basis (J={levels}, K={span_exponent}) exceeds the dense limit of {MAX_DIMENSION} elements"
                ))
            })?;
        let top = (1u64 << span_exponent) as f64;
        let mut elements = Vec::with_capacity(n);
        elements.push(StepElement::indicator(0.0, top));
        // Wavelets from the coarsest scale down to unit-length supports.
        for level in (1..=span_exponent).rev() {
            let width = (1u64 << level) as f64;
            let count = 1u64 << (span_exponent - level);
            for i in 0..count {
                let a = i as f64 * width;
                elements.push(StepElement::wavelet(a, a + width));
            }
        }
        for j in 1..=levels {
            elements.push(StepElement::wavelet(0.0, 0.5f64.powi(j as i32 - 1)));
        }
        debug_assert_eq!(elements.len(), n);
        Ok(Self { levels, span_exponent, elements })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn descriptor(&self) -> String {
        format!("graded-haar(J={}, K={}, N={})", self.levels, self.span_exponent, self.len())
    }

    /// The Gram matrix, row-major, from exact piecewise overlaps.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.len();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = step_inner(&self.elements[i], &self.elements[j]);
            }
        }
        g
    }
}

fn step_inner(u: &StepElement, v: &StepElement) -> f64 {
    let mut acc = 0.0;
    for (a, b, cu) in u.pieces() {
        for (c, d, cv) in v.pieces() {
            let overlap = b.min(d) - a.max(c);
            if overlap > 0.0 {
                acc += cu * cv * overlap;
            }
        }
    }
    acc
}

/// `F(s + w) - F(s)` for `F(s) = s ln s`, written without cancellation.
fn shell_increment(s: f64, w: f64) -> f64 {
    if s == 0.0 {
        if w == 0.0 {
            0.0
        } else {
            w * w.ln()
        }
    } else {
        w * (s + w).ln() + s * (w / s).ln_1p()
    }
}

/// `iint_{[a,b] x [c,d]} dx dy / (x + y)`.
///
/// Equal to `F(b+d) - F(a+d) - F(b+c) + F(a+c)` with `F(s) = s ln s`,
/// regrouped as a difference of two increments of `F` so that thin cells far
/// from the origin do not lose digits.
pub fn carleman_entry_piecewise_constant(i1: (f64, f64), i2: (f64, f64)) -> Result<f64> {
    let ((a, b), (c, d)) = (i1, i2);
    if !(a >= 0.0 && b >= a && c >= 0.0 && d >= c) || ![a, b, c, d].iter().all(|v| v.is_finite()) {
        return Err(Error::Precondition(format!(
            "intervals must satisfy 0 <= a <= b and 0 <= c <= d, got [{a}, {b}] x [{c}, {d}]"
        )));
    }
    if b == a || d == c {
        return Ok(0.0);
    }
    // Put the wider interval on the increment side.
    let (a, b, c, d) = if b - a >= d - c { (a, b, c, d) } else { (c, d, a, b) };
    Ok(shell_increment(a + d, b - a) - shell_increment(a + c, b - a))
}

fn element_entry(u: &StepElement, v: &StepElement) -> f64 {
    let mut acc = 0.0;
    for (a, b, cu) in u.pieces() {
        for (c, d, cv) in v.pieces() {
            // Arguments are valid by construction.
            acc += cu * cv * carleman_entry_piecewise_constant((a, b), (c, d)).unwrap_or(f64::NAN);
        }
    }
    acc
}

/// Matrix of the Carleman operator in `basis`, its spectrum and top eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionResult {
    pub n: usize,
    /// Row-major `n x n`.
    pub matrix: Vec<f64>,
    /// Ascending.
    pub spectrum: Vec<f64>,
    pub lambda_max: f64,
    pub basis_descriptor: String,
}

impl CompressionResult {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    pub fn pi_gap(&self) -> f64 {
        PI - self.lambda_max
    }
}

/// The row-major matrix `<e_i, C e_j>` of a basis.
pub fn carleman_matrix(basis: &DyadicBasis) -> Vec<f64> {
    let n = basis.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| element_entry(&basis.elements[i], &basis.elements[j])).collect())
        .collect();
    let mut m = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    m
}

pub fn build_compression(levels: u32, span_exponent: u32) -> Result<CompressionResult> {
    let basis = DyadicBasis::new(levels, span_exponent)?;
    let n = basis.len();
    let matrix = carleman_matrix(&basis);
    let spectrum = symmetric_eigensolve(&matrix, n)?;
    let lambda_max = spectrum.last().copied().unwrap_or(0.0);
    Ok(CompressionResult { n, matrix, spectrum, lambda_max, basis_descriptor: basis.descriptor() })
}

/// Eigenvalues (ascending) and the matching eigenvectors as columns of a
/// row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigendecomposition {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

/// Eigenvalues of a dense symmetric row-major `n x n` matrix, ascending.
pub fn symmetric_eigensolve(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    Ok(jacobi(matrix, n, false)?.values)
}

pub fn symmetric_eigensolve_with_vectors(matrix: &[f64], n: usize) -> Result<Eigendecomposition> {
    jacobi(matrix, n, true)
}

const MAX_SWEEPS: usize = 100;

fn jacobi(matrix: &[f64], n: usize, want_vectors: bool) -> Result<Eigendecomposition> {
    if matrix.len() != n * n {
        return Err(Error::Precondition(format!("expected {} entries for n = {n}, got {}", n * n, matrix.len())));
    }
    if n > MAX_DIMENSION {
        return Err(Error::Resource(format!("dimension {n} exceeds {MAX_DIMENSION}")));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("matrix has non-finite entries".into()));
    }
    let frob = matrix.iter().map(|v| v * v).sum::<f64>().sqrt();
    for i in 0..n {
        for j in i + 1..n {
            if (matrix[i * n + j] - matrix[j * n + i]).abs() > 1e-12 * frob.max(1.0) {
                return Err(Error::Precondition(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let mut a = matrix.to_vec();
    let mut v = if want_vectors {
        let mut id = vec![0.0; n * n];
        for i in 0..n {
            id[i * n + i] = 1.0;
        }
        id
    } else {
        Vec::new()
    };
    let target = 1e-12 * frob;
    let mut sweeps = 0;
    loop {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= target {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::Resource(format!("Jacobi did not converge in {MAX_SWEEPS} sweeps (off = {off:e})")));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k * n + p], a[k * n + q]);
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p * n + k], a[q * n + k]);
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if want_vectors {
                    for k in 0..n {
                        let (vkp, vkq) = (v[k * n + p], v[k * n + q]);
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = if want_vectors {
        let mut sorted = vec![0.0; n * n];
        for (col, &src) in order.iter().enumerate() {
            for k in 0..n {
                sorted[k * n + col] = v[k * n + src];
            }
        }
        sorted
    } else {
        Vec::new()
    };
    Ok(Eigendecomposition { values, vectors, sweeps })
}

/// One row of an edge-gap table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGapRow {
    pub levels: u32,
    pub span_exponent: u32,
    pub n: usize,
    pub lambda_max: f64,
    pub pi_gap: f64,
}

/// Builds every requested compression (concurrently) and reports the rows in
/// input order.
pub fn edge_gap_sweep(params: &[(u32, u32)]) -> Result<Vec<EdgeGapRow>> {
    params
        .par_iter()
        .map(|&(j, k)| {
            let r = build_compression(j, k)?;
            Ok(EdgeGapRow { levels: j, span_exponent: k, n: r.n, lambda_max: r.lambda_max, pi_gap: r.pi_gap() })
        })
        .collect::<Vec<Result<EdgeGapRow>>>()
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_2d_kernel, QuadratureSpec};

    #[test]
    fn base_entry_and_base_case() {
        let e = carleman_entry_piecewise_constant((0.0, 1.0), (0.0, 1.0)).unwrap();
        assert!((e - 2.0 * 2f64.ln()).abs() < 1e-15);
        let r = build_compression(0, 0).unwrap();
        assert_eq!(r.n, 1);
        assert!((r.lambda_max - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(carleman_entry_piecewise_constant((1.0, 1.0), (0.0, 3.0)).unwrap(), 0.0);
        assert!(carleman_entry_piecewise_constant((-1.0, 1.0), (0.0, 3.0)).is_err());
    }

    #[test]
    fn entry_matches_quadrature() {
        let spec = QuadratureSpec::default();
        for &(i1, i2) in &[((1.0, 2.0), (1.0, 2.0)), ((0.0, 0.25), (3.0, 7.0)), ((200.0, 200.5), (0.0, 0.01))] {
            let closed = carleman_entry_piecewise_constant(i1, i2).unwrap();
            let u = StepElement { breakpoints: vec![i1.0, i1.1], coefficients: vec![1.0] };
            let v = StepElement { breakpoints: vec![i2.0, i2.1], coefficients: vec![1.0] };
            let q = integrate_2d_kernel(&|x, y| 1.0 / (x + y), &u, &v, &spec).unwrap();
            assert!((closed - q.value).abs() < 1e-10 * closed.max(1.0), "{i1:?} {i2:?}: {closed} vs {}", q.value);
        }
    }

    #[test]
    fn basis_is_orthonormal_and_sized() {
        let b = DyadicBasis::new(5, 3).unwrap();
        assert_eq!(b.len(), 13);
        let g = b.gram();
        for i in 0..b.len() {
            for j in 0..b.len() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[i * b.len() + j] - want).abs() < 1e-14);
            }
        }
        assert!(matches!(DyadicBasis::new(0, 13), Err(Error::Resource(_))));
    }

    #[test]
    fn small_eigenproblems() {
        let id: Vec<f64> = (0..25).map(|k| if k % 6 == 0 { 1.0 } else { 0.0 }).collect();
        assert_eq!(symmetric_eigensolve(&id, 5).unwrap(), vec![1.0; 5]);
        let s = symmetric_eigensolve(&[0.0, 1.0, 1.0, 0.0], 2).unwrap();
        assert!((s[0] + 1.0).abs() < 1e-15 && (s[1] - 1.0).abs() < 1e-15);
        assert!(matches!(symmetric_eigensolve(&[0.0, 1.0, 0.0, 0.0], 2), Err(Error::Precondition(_))));
    }

    #[test]
    fn spectrum_within_operator_range() {
        let r = build_compression(3, 3).unwrap();
        assert!(r.spectrum.iter().all(|l| (-1e-10..=PI + 1e-10).contains(l)));
        assert_eq!(r.lambda_max, *r.spectrum.last().unwrap());
        for i in 0..r.n {
            for j in 0..r.n {
                assert_eq!(r.entry(i, j), r.entry(j, i));
            }
        }
    }
}

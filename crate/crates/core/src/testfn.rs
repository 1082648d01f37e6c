//! Test-function families on the half-line and the spinor quadruples built
//! from them.
//!
//! A [`TestFunction1D`] is a closed-form evaluator
//!
//! ```text
//! f(x) = s * sqrt(m) * B(m * sigma * x) * exp(-a * m * sigma * x)
//! ```
//!
//! where `B` is the base profile (the cutoff family or a user closure),
//! `s` a scale, `a` an exponential damping rate in base coordinates, `m` a
//! dilation and `sigma = -1` for mirrored (Alice-side) copies.

use crate::error::{domain, Error, Result};
use crate::quadrature::{sample, LineFunction, QuadratureSpec, Substitution};
use crate::specfun::smooth_step;
use std::fmt;
use std::sync::Arc;

/// The mixing constant `sqrt(2) - 1`, root of `c^2 + 2c - 1 = 0`.
pub const TSIRELSON_C: f64 = std::f64::consts::SQRT_2 - 1.0;

/// `c^2 + 2c - 1` at [`TSIRELSON_C`]; stays below `1e-15` in magnitude.
pub fn tsirelson_residual() -> f64 {
    TSIRELSON_C * TSIRELSON_C + 2.0 * TSIRELSON_C - 1.0
}

/// The undamped cutoff profile `phi~_eps` evaluated at `x`.
pub fn phi_tilde_value(eps: f64, x: f64) -> f64 {
    if x <= 0.5 * eps || x >= 2.0 / eps {
        0.0
    } else if x < eps {
        smooth_step(2.0 * x - eps, eps) / x.sqrt()
    } else if x <= 1.0 / eps {
        1.0 / x.sqrt()
    } else {
        smooth_step(2.0 * eps - eps * eps * x, eps) / x.sqrt()
    }
}

#[derive(Clone)]
enum Base {
    PhiTilde { eps: f64 },
    Custom { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, breakpoints: Vec<f64> },
}

/// Which closed-form family a function belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyTag {
    PhiEps { eps: f64 },
    PhiEpsDamped { eps: f64 },
    Dilated { eps: f64, mass: f64, damped: bool },
    Custom,
}

/// Parameters of a function built from the cutoff profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiParameters {
    pub eps: f64,
    pub scale: f64,
    pub damping: f64,
    pub dilation: f64,
    pub mirrored: bool,
}

/// A real function with compact support, evaluable pointwise.
#[derive(Clone)]
pub struct TestFunction1D {
    base: Base,
    scale: f64,
    damping: f64,
    dilation: f64,
    mirrored: bool,
    norm_cache: Option<f64>,
}

impl fmt::Debug for TestFunction1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction1D")
            .field("family", &self.family_tag())
            .field("scale", &self.scale)
            .field("damping", &self.damping)
            .field("dilation", &self.dilation)
            .field("mirrored", &self.mirrored)
            .field("support", &self.support())
            .finish()
    }
}

/// Builds the cutoff profile `phi~_eps`.
pub fn build_phi_tilde(eps: f64) -> Result<TestFunction1D> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(domain("build_phi_tilde", format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(TestFunction1D {
        base: Base::PhiTilde { eps },
        scale: 1.0,
        damping: 0.0,
        dilation: 1.0,
        mirrored: false,
        norm_cache: None,
    })
}

/// Rescales `phi` to unit L2 norm and caches the norm.
pub fn normalize(phi: &TestFunction1D, spec: &QuadratureSpec) -> Result<TestFunction1D> {
    if phi.norm_cache == Some(1.0) {
        return Ok(phi.clone());
    }
    let norm = phi.measure_l2_norm(spec)?;
    if !(norm > 0.0) {
        return Err(Error::Precondition("cannot normalize a function of zero norm".into()));
    }
    let mut out = phi.clone();
    out.scale /= norm;
    out.norm_cache = Some(1.0);
    Ok(out)
}

/// Multiplies by `exp(-|x|)` (Alice-side copies are damped away from the origin too).
pub fn damp_exponential(phi: &TestFunction1D) -> TestFunction1D {
    let mut out = phi.clone();
    out.damping += 1.0 / out.dilation;
    out.norm_cache = None;
    out
}

/// The unitary dilation `(U_m phi)(x) = sqrt(m) phi(m x)`.
pub fn dilate(phi: &TestFunction1D, m: f64) -> Result<TestFunction1D> {
    if !(m > 0.0) || !m.is_finite() {
        return Err(domain("dilate", format!("dilation must be positive, got {m}")));
    }
    let mut out = phi.clone();
    out.dilation *= m;
    Ok(out)
}

impl TestFunction1D {
    /// A user-supplied profile. `breakpoints` must contain the support
    /// endpoints and every point where `f` fails to be smooth.
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static, mut breakpoints: Vec<f64>) -> Result<Self> {
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        if breakpoints.len() < 2 || breakpoints.iter().any(|b| !b.is_finite()) {
            return Err(Error::Precondition("a custom function needs a finite support with two endpoints".into()));
        }
        Ok(Self {
            base: Base::Custom { f: Arc::new(f), breakpoints },
            scale: 1.0,
            damping: 0.0,
            dilation: 1.0,
            mirrored: false,
            norm_cache: None,
        })
    }

    /// `sqrt(2) e^{-x}` truncated to `[0, 40]`.
    pub fn normalized_exponential() -> Self {
        Self::custom(|x| std::f64::consts::SQRT_2 * (-x).exp(), vec![0.0, 40.0]).expect("valid support")
    }

    /// The indicator of `[a, b]`.
    pub fn indicator(a: f64, b: f64) -> Result<Self> {
        Self::custom(move |x| if x >= a && x <= b { 1.0 } else { 0.0 }, vec![a, b])
    }

    fn base_value(&self, z: f64) -> f64 {
        match &self.base {
            Base::PhiTilde { eps } => phi_tilde_value(*eps, z),
            Base::Custom { f, breakpoints } => {
                if z < breakpoints[0] || z > breakpoints[breakpoints.len() - 1] {
                    0.0
                } else {
                    f(z)
                }
            }
        }
    }

    fn base_breakpoints(&self) -> Vec<f64> {
        match &self.base {
            Base::PhiTilde { eps } => vec![0.5 * eps, *eps, 1.0 / eps, 2.0 / eps],
            Base::Custom { breakpoints, .. } => breakpoints.clone(),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let sigma = if self.mirrored { -1.0 } else { 1.0 };
        let z = self.dilation * sigma * x;
        let b = self.base_value(z);
        if b == 0.0 {
            return 0.0;
        }
        let damp = if self.damping == 0.0 { 1.0 } else { (-self.damping * z).exp() };
        self.scale * self.dilation.sqrt() * b * damp
    }

    /// Closed support `[lo, hi]` in the function's own coordinates.
    pub fn support(&self) -> (f64, f64) {
        let b = self.breakpoints();
        (b[0], b[b.len() - 1])
    }

    pub fn family_tag(&self) -> FamilyTag {
        match self.base {
            Base::Custom { .. } => FamilyTag::Custom,
            Base::PhiTilde { eps } => {
                let damped = self.damping != 0.0;
                if self.dilation != 1.0 {
                    FamilyTag::Dilated { eps, mass: self.dilation, damped }
                } else if damped {
                    FamilyTag::PhiEpsDamped { eps }
                } else {
                    FamilyTag::PhiEps { eps }
                }
            }
        }
    }

    /// Parameters of the closed form when the base is the cutoff profile.
    pub fn phi_parameters(&self) -> Option<PhiParameters> {
        match self.base {
            Base::PhiTilde { eps } => Some(PhiParameters {
                eps,
                scale: self.scale,
                damping: self.damping,
                dilation: self.dilation,
                mirrored: self.mirrored,
            }),
            Base::Custom { .. } => None,
        }
    }

    pub fn eps(&self) -> Option<f64> {
        match self.base {
            Base::PhiTilde { eps } => Some(eps),
            Base::Custom { .. } => None,
        }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_mirrored(&self) -> bool {
        self.mirrored
    }

    /// The same function multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scale *= factor;
        out.norm_cache = self.norm_cache.map(|n| n * factor.abs());
        out
    }

    /// The reflection `x -> f(-x)`.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        out.mirrored = !out.mirrored;
        out
    }

    /// The same function with unit scale; `(unit, scale)` reconstructs `self`.
    pub fn unit_scaled(&self) -> (Self, f64) {
        let mut out = self.clone();
        out.scale = 1.0;
        out.norm_cache = None;
        (out, self.scale)
    }

    /// Identity of the shape, ignoring the scale: equal keys mean the
    /// functions differ only by a constant factor.
    pub fn shape_key(&self) -> Option<[u64; 5]> {
        match self.base {
            Base::PhiTilde { eps } => Some([
                eps.to_bits(),
                self.damping.to_bits(),
                self.dilation.to_bits(),
                self.mirrored as u64,
                0,
            ]),
            Base::Custom { .. } => None,
        }
    }

    pub fn cached_norm(&self) -> Option<f64> {
        self.norm_cache
    }

    /// L2 norm, from the cache when available.
    pub fn l2_norm(&self, spec: &QuadratureSpec) -> Result<f64> {
        match self.norm_cache {
            Some(n) => Ok(n),
            None => self.measure_l2_norm(spec),
        }
    }

    /// L2 norm by quadrature, ignoring the cache.
    pub fn measure_l2_norm(&self, spec: &QuadratureSpec) -> Result<f64> {
        let s = sample(self, &QuadratureSpec { substitution: Substitution::None, ..*spec })?;
        Ok(s.f.iter().zip(&s.w).map(|(f, w)| w * f * f).sum::<f64>().sqrt())
    }
}

impl LineFunction for TestFunction1D {
    fn value(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let sigma = if self.mirrored { -1.0 } else { 1.0 };
        let mut b: Vec<f64> = self.base_breakpoints().into_iter().map(|z| sigma * z / self.dilation).collect();
        b.sort_by(f64::total_cmp);
        b
    }
}

/// Half-line on which a spinor function lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Alice,
    Bob,
}

/// A two-component spatial test function on one half-line.
#[derive(Debug, Clone)]
pub struct SpinorFunction {
    pub comp1: TestFunction1D,
    pub comp2: TestFunction1D,
    pub side: Side,
}

impl SpinorFunction {
    pub fn new(comp1: TestFunction1D, comp2: TestFunction1D, side: Side) -> Result<Self> {
        let s = Self { comp1, comp2, side };
        let (lo, hi) = s.support();
        let ok = match side {
            Side::Alice => hi <= 0.0,
            Side::Bob => lo >= 0.0,
        };
        if !ok {
            return Err(Error::Precondition(format!("support [{lo}, {hi}] is not on the {side:?} half-line")));
        }
        Ok(s)
    }

    /// Smallest interval containing both component supports.
    pub fn support(&self) -> (f64, f64) {
        let (a, b) = self.comp1.support();
        let (c, d) = self.comp2.support();
        (a.min(c), b.max(d))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { comp1: self.comp1.scaled(factor), comp2: self.comp2.scaled(factor), side: self.side }
    }

    /// Reflection `x -> -x`, which moves the function to the other half-line.
    pub fn reflected(&self) -> Self {
        let side = match self.side {
            Side::Alice => Side::Bob,
            Side::Bob => Side::Alice,
        };
        Self { comp1: self.comp1.mirrored(), comp2: self.comp2.mirrored(), side }
    }
}

/// The four spinor functions of a Bell experiment in the symmetry ansatz.
#[derive(Debug, Clone)]
pub struct BellQuadruple {
    pub f: SpinorFunction,
    pub f_prime: SpinorFunction,
    pub g: SpinorFunction,
    pub g_prime: SpinorFunction,
    pub c: f64,
    pub profile: TestFunction1D,
}

/// Assembles the quadruple
///
/// ```text
/// g  = k ( phi, -c phi)          g'  = k ( c phi,  phi)
/// f  = k (-phi_r, c phi_r)       f'  = k (-c phi_r, -phi_r)
/// ```
///
/// with `k = 1/sqrt(1 + c^2)` and `phi_r(x) = phi(-x)`.
pub fn assemble_quadruple(phi_normalized: &TestFunction1D, c: f64) -> Result<BellQuadruple> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(domain("assemble_quadruple", format!("mixing constant must be finite and >= 0, got {c}")));
    }
    let (lo, _) = phi_normalized.support();
    if !(lo > 0.0) || phi_normalized.is_mirrored() {
        return Err(Error::Precondition("the profile must live on (0, inf) with support bounded away from 0".into()));
    }
    debug_assert!(tsirelson_residual().abs() < 1e-15);
    let k = 1.0 / (1.0 + c * c).sqrt();
    let p = phi_normalized;
    let r = p.mirrored();
    let g = SpinorFunction::new(p.scaled(k), p.scaled(-c * k), Side::Bob)?;
    let g_prime = SpinorFunction::new(p.scaled(c * k), p.scaled(k), Side::Bob)?;
    let f = SpinorFunction::new(r.scaled(-k), r.scaled(c * k), Side::Alice)?;
    let f_prime = SpinorFunction::new(r.scaled(-c * k), r.scaled(-k), Side::Alice)?;
    Ok(BellQuadruple { f, f_prime, g, g_prime, c, profile: p.clone() })
}

impl BellQuadruple {
    /// Largest violation of the ansatz identities on `grid` (points on the
    /// positive half-line; Alice-side values are read at `-x`).
    pub fn ansatz_deviation(&self, grid: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &x in grid {
            let a = -x;
            let checks = [
                self.f_prime.comp2.eval(a) - self.f.comp1.eval(a),
                self.f_prime.comp1.eval(a) + self.f.comp2.eval(a),
                self.g_prime.comp2.eval(x) - self.g.comp1.eval(x),
                self.g_prime.comp1.eval(x) + self.g.comp2.eval(x),
                self.f.comp2.eval(a) + self.c * self.f.comp1.eval(a),
                self.g.comp2.eval(x) + self.c * self.g.comp1.eval(x),
                self.f.comp1.eval(a) + self.g.comp1.eval(x),
            ];
            for d in checks {
                worst = worst.max(d.abs());
            }
        }
        worst
    }

    /// The family parameter of the profile, if it has one.
    pub fn eps(&self) -> Option<f64> {
        self.profile.eps()
    }

    /// Swaps the roles of the two parties by reflecting every support.
    pub fn reflected(&self) -> Self {
        Self {
            f: self.g.reflected(),
            f_prime: self.g_prime.reflected(),
            g: self.f.reflected(),
            g_prime: self.f_prime.reflected(),
            c: self.c,
            profile: self.profile.clone(),
        }
    }
}

/// `int (s1^2 + s2^2) dx` for a spinor function.
pub fn local_norm(s: &SpinorFunction, spec: &QuadratureSpec) -> Result<f64> {
    let spec = QuadratureSpec { substitution: Substitution::None, ..*spec };
    let a = sample(&s.comp1, &spec)?;
    let b = sample(&s.comp2, &spec)?;
    let sq = |m: &crate::quadrature::SampledMesh| m.f.iter().zip(&m.w).map(|(f, w)| w * f * f).sum::<f64>();
    Ok(sq(&a) + sq(&b))
}

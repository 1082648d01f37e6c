//! Spatial Bell pairings between Alice- and Bob-side spinor functions and the
//! CHSH correlator built from them.
//!
//! A pairing is `(i/pi) iint K(y - x) (a1(x) b1(y) - a2(x) b2(y)) dx dy` with
//! `K(u) = 1/u` or `m K1(m u)`. Only the real coefficient of `i` is stored.

use crate::error::{domain, Error, Result};
use crate::forms::{carleman_form, hankel_form, KernelForm};
use crate::quadrature::{function_edges, gauss_legendre, LineFunction, Mesh, QuadratureSpec};
use crate::testfn::{
    assemble_quadruple, build_phi_tilde, damp_exponential, dilate, local_norm, normalize, BellQuadruple, Side,
    SpinorFunction, TSIRELSON_C,
};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// A pairing value `i * im`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingValue {
    /// Coefficient of `i`.
    pub im: f64,
    pub error_estimate: f64,
    pub kernel: KernelForm,
}

impl PairingValue {
    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(0.0, self.im)
    }

    pub fn magnitude(&self) -> f64 {
        self.im.abs()
    }
}

/// All four pairings of a quadruple plus derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorReport {
    /// `<f|g>`, `<f'|g>`, `<f|g'>`, `<f'|g'>`.
    pub pairings: [PairingValue; 4],
    /// `|p1 + p2 + p3 - p4|`.
    pub chsh_abs: f64,
    /// `4 |<f|g>|`, equal to `chsh_abs` when `c = sqrt(2) - 1`.
    pub collapse: f64,
    /// Local norms of `f`, `f'`, `g`, `g'`.
    pub norms: [f64; 4],
    pub c: f64,
    pub eps: Option<f64>,
    pub mass: f64,
}

impl CorrelatorReport {
    pub fn error_estimate(&self) -> f64 {
        self.pairings.iter().map(|p| p.error_estimate).sum()
    }
}

fn spinor_edges(list: &[&SpinorFunction], panels: usize) -> Vec<f64> {
    let mut bps: Vec<f64> = list
        .iter()
        .flat_map(|s| {
            let mut v = s.comp1.breakpoints();
            v.extend(s.comp2.breakpoints());
            v
        })
        .collect();
    bps.sort_by(f64::total_cmp);
    bps.dedup();
    function_edges(&bps, panels)
}

struct SpinorSamples {
    x: Vec<f64>,
    w: Vec<f64>,
    /// Per function: (comp1 values, comp2 values).
    values: Vec<(Vec<f64>, Vec<f64>)>,
}

fn sample_spinors(list: &[&SpinorFunction], spec: &QuadratureSpec) -> Result<SpinorSamples> {
    let mesh = Mesh::from_edges(&spinor_edges(list, spec.panels), &gauss_legendre(spec.nodes_per_panel));
    let mut values = Vec::with_capacity(list.len());
    for s in list {
        let mut c1 = Vec::with_capacity(mesh.len());
        let mut c2 = Vec::with_capacity(mesh.len());
        for &x in &mesh.x {
            let (a, b) = (s.comp1.eval(x), s.comp2.eval(x));
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::Evaluation { node: x, value: if a.is_finite() { b } else { a } });
            }
            c1.push(a);
            c2.push(b);
        }
        values.push((c1, c2));
    }
    Ok(SpinorSamples { x: mesh.x, w: mesh.w, values })
}

fn check_geometry(alice: &[&SpinorFunction], bob: &[&SpinorFunction]) -> Result<()> {
    if alice.iter().any(|s| s.side != Side::Alice) || bob.iter().any(|s| s.side != Side::Bob) {
        return Err(Error::Precondition("pairings take an Alice-side and a Bob-side function".into()));
    }
    let a_hi = alice.iter().map(|s| s.support().1).fold(f64::NEG_INFINITY, f64::max);
    let b_lo = bob.iter().map(|s| s.support().0).fold(f64::INFINITY, f64::min);
    if !(b_lo > a_hi) {
        return Err(Error::Precondition(format!(
            "supports must be separated: Alice ends at {a_hi}, Bob starts at {b_lo}"
        )));
    }
    Ok(())
}

/// The matrix of raw integrals `iint K(y-x)(a1 b1 - a2 b2)` for every
/// (Alice, Bob) combination, computed with one pass over the kernel.
fn raw_pairings(
    alice: &[&SpinorFunction],
    bob: &[&SpinorFunction],
    kernel: KernelForm,
    spec: &QuadratureSpec,
) -> Result<Vec<Vec<f64>>> {
    let a = sample_spinors(alice, spec)?;
    let b = sample_spinors(bob, spec)?;
    let nb = bob.len();
    // Weighted Bob samples, one pair of vectors per Bob function.
    let bw: Vec<(Vec<f64>, Vec<f64>)> = b
        .values
        .iter()
        .map(|(c1, c2)| {
            (
                c1.iter().zip(&b.w).map(|(v, w)| v * w).collect(),
                c2.iter().zip(&b.w).map(|(v, w)| v * w).collect(),
            )
        })
        .collect();
    let rows: Vec<Vec<(f64, f64)>> = (0..a.x.len())
        .into_par_iter()
        .map(|i| {
            let x = a.x[i];
            let mut acc = vec![(0.0, 0.0); nb];
            for j in 0..b.x.len() {
                let k = kernel.profile(b.x[j] - x);
                for (slot, (b1, b2)) in acc.iter_mut().zip(&bw) {
                    slot.0 += k * b1[j];
                    slot.1 += k * b2[j];
                }
            }
            acc
        })
        .collect();
    let mut out = vec![vec![0.0; nb]; alice.len()];
    for (ai, (a1, a2)) in a.values.iter().enumerate() {
        for (bi, slot) in out[ai].iter_mut().enumerate() {
            let mut total = 0.0;
            for (i, row) in rows.iter().enumerate() {
                total += a.w[i] * (a1[i] * row[bi].0 - a2[i] * row[bi].1);
            }
            *slot = total;
        }
    }
    if out.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation { node: f64::NAN, value: f64::NAN });
    }
    Ok(out)
}

fn pairing_matrix(
    alice: &[&SpinorFunction],
    bob: &[&SpinorFunction],
    kernel: KernelForm,
    spec: &QuadratureSpec,
) -> Result<Vec<Vec<PairingValue>>> {
    kernel.validate()?;
    check_geometry(alice, bob)?;
    let coarse = raw_pairings(alice, bob, kernel, spec)?;
    let fine = raw_pairings(alice, bob, kernel, &spec.refined())?;
    Ok(coarse
        .iter()
        .zip(&fine)
        .map(|(rc, rf)| {
            rc.iter()
                .zip(rf)
                .map(|(c, f)| PairingValue { im: c / PI, error_estimate: (f - c).abs() / PI, kernel })
                .collect()
        })
        .collect())
}

/// `<a|b>` as the coefficient of `i`.
pub fn spatial_pairing(
    a: &SpinorFunction,
    b: &SpinorFunction,
    kernel: KernelForm,
    spec: &QuadratureSpec,
) -> Result<PairingValue> {
    Ok(pairing_matrix(&[a], &[b], kernel, spec)?[0][0])
}

/// Evaluates the four pairings of `q` as separate double integrals and
/// combines them into the CHSH value.
pub fn bell_correlator(q: &BellQuadruple, kernel: KernelForm, spec: &QuadratureSpec) -> Result<CorrelatorReport> {
    let m = pairing_matrix(&[&q.f, &q.f_prime], &[&q.g, &q.g_prime], kernel, spec)?;
    let pairings = [m[0][0], m[1][0], m[0][1], m[1][1]];
    let chsh_abs = (pairings[0].im + pairings[1].im + pairings[2].im - pairings[3].im).abs();
    let norms = [
        local_norm(&q.f, spec)?,
        local_norm(&q.f_prime, spec)?,
        local_norm(&q.g, spec)?,
        local_norm(&q.g_prime, spec)?,
    ];
    Ok(CorrelatorReport {
        pairings,
        chsh_abs,
        collapse: 4.0 * pairings[0].im.abs(),
        norms,
        c: q.c,
        eps: q.eps(),
        mass: kernel.mass(),
    })
}

/// The normalized quadruple used for `kernel`: the cutoff profile itself in
/// the massless case, and its damped copy dilated by `m` in the massive case.
pub fn family_quadruple(eps: f64, kernel: KernelForm, c: f64, spec: &QuadratureSpec) -> Result<BellQuadruple> {
    kernel.validate()?;
    let base = build_phi_tilde(eps)?;
    let profile = match kernel {
        KernelForm::Massless => base,
        KernelForm::Massive(m) => dilate(&damp_exponential(&base), m)?,
    };
    assemble_quadruple(&normalize(&profile, spec)?, c)
}

/// `2(1 + 2c - c^2)/(1 + c^2)`, the CHSH value approached by the family with
/// mixing constant `c`.
pub fn limiting_value_general_c(c: f64) -> Result<f64> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(domain("limiting_value_general_c", format!("c must be finite and >= 0, got {c}")));
    }
    Ok(2.0 * (1.0 + 2.0 * c - c * c) / (1.0 + c * c))
}

/// Deviations from the identities satisfied by ansatz quadruples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityDeviation {
    /// `| <f'|g> - <f|g'> |`.
    pub cross_pair: f64,
    /// `| <f|g> + <f'|g'> |`.
    pub diagonal_pair: f64,
    /// `max | <f|g> - <f'|g> |, | <f|g> - <f|g'> |`; only meaningful at `c = sqrt(2) - 1`.
    pub collapse: f64,
    /// `| pi |<f|g>| - (1 - c^2) Q(g1) |`.
    pub reduction_diagonal: f64,
    /// `| pi |<f'|g>| - 2c Q(g1) |`.
    pub reduction_cross: f64,
    /// Half-line form of the first Bob component.
    pub q_g1: f64,
    /// Largest deviation among the identities that hold for this `c`.
    pub max_deviation: f64,
}

pub fn correlator_identity_check(
    q: &BellQuadruple,
    kernel: KernelForm,
    spec: &QuadratureSpec,
) -> Result<IdentityDeviation> {
    let r = bell_correlator(q, kernel, spec)?;
    let [fg, fpg, fgp, fpgp] = r.pairings.map(|p| p.im);
    let q_g1 = match kernel {
        KernelForm::Massless => carleman_form(&q.g.comp1, spec)?.value,
        KernelForm::Massive(m) => hankel_form(&q.g.comp1, m, spec)?.value,
    };
    let c = q.c;
    let cross_pair = (fpg - fgp).abs();
    let diagonal_pair = (fg + fpgp).abs();
    let collapse = (fg - fpg).abs().max((fg - fgp).abs());
    let reduction_diagonal = (PI * fg.abs() - (1.0 - c * c) * q_g1).abs();
    let reduction_cross = (PI * fpg.abs() - 2.0 * c * q_g1).abs();
    let mut max_deviation = cross_pair.max(diagonal_pair).max(reduction_diagonal).max(reduction_cross);
    if (c - TSIRELSON_C).abs() < 1e-15 {
        max_deviation = max_deviation.max(collapse);
    }
    Ok(IdentityDeviation { cross_pair, diagonal_pair, collapse, reduction_diagonal, reduction_cross, q_g1, max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfn::TestFunction1D;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn quad(eps: f64, c: f64) -> BellQuadruple {
        family_quadruple(eps, KernelForm::Massless, c, &spec()).unwrap()
    }

    #[test]
    fn limiting_values() {
        assert_eq!(limiting_value_general_c(0.0).unwrap(), 2.0);
        assert!((limiting_value_general_c(TSIRELSON_C).unwrap() - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((limiting_value_general_c(0.2).unwrap() - 2.0 * 1.36 / 1.04).abs() < 1e-15);
        assert!(limiting_value_general_c(-0.5).is_err());
    }

    #[test]
    fn reduction_to_half_line_form() {
        let q = quad(0.1, TSIRELSON_C);
        let d = correlator_identity_check(&q, KernelForm::Massless, &spec()).unwrap();
        assert!(d.max_deviation < 1e-8, "{d:?}");
        let r = bell_correlator(&q, KernelForm::Massless, &spec()).unwrap();
        assert!((r.chsh_abs - r.collapse).abs() < 1e-8);
        assert!(r.chsh_abs <= 2.0 * std::f64::consts::SQRT_2);
        for n in r.norms {
            assert!((n - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn general_c_pairs() {
        let q = quad(0.1, 0.3);
        let d = correlator_identity_check(&q, KernelForm::Massless, &spec()).unwrap();
        assert!(d.cross_pair < 1e-8 && d.diagonal_pair < 1e-8 && d.reduction_cross < 1e-8, "{d:?}");
    }

    #[test]
    fn zero_bob_function_pairs_to_zero() {
        let q = quad(0.5, TSIRELSON_C);
        let zero = q.g.scaled(0.0);
        let p = spatial_pairing(&q.f, &zero, KernelForm::Massless, &spec()).unwrap();
        assert_eq!(p.im, 0.0);
    }

    #[test]
    fn geometry_is_checked() {
        let q = quad(0.5, TSIRELSON_C);
        assert!(spatial_pairing(&q.g, &q.f, KernelForm::Massless, &spec()).is_err());
        let touching = SpinorFunction::new(
            TestFunction1D::indicator(-1.0, 0.0).unwrap(),
            TestFunction1D::indicator(-1.0, 0.0).unwrap(),
            Side::Alice,
        )
        .unwrap();
        let bob = SpinorFunction::new(
            TestFunction1D::indicator(0.0, 1.0).unwrap(),
            TestFunction1D::indicator(0.0, 1.0).unwrap(),
            Side::Bob,
        )
        .unwrap();
        assert!(matches!(
            spatial_pairing(&touching, &bob, KernelForm::Massless, &spec()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn small_mass_approaches_massless_pairing() {
        let q = quad(0.5, TSIRELSON_C);
        let a = spatial_pairing(&q.f, &q.g, KernelForm::Massless, &spec()).unwrap();
        let b = spatial_pairing(&q.f, &q.g, KernelForm::Massive(1e-4), &spec()).unwrap();
        assert!((a.im - b.im).abs() < 1e-3, "{} {}", a.im, b.im);
    }

    #[test]
    fn reflection_keeps_chsh() {
        let q = quad(0.1, TSIRELSON_C);
        let a = bell_correlator(&q, KernelForm::Massless, &spec()).unwrap();
        let b = bell_correlator(&q.reflected(), KernelForm::Massless, &spec()).unwrap();
        assert!((a.chsh_abs - b.chsh_abs).abs() < 1e-10);
    }
}

//! Numerical reconstruction of near-Tsirelson Bell–CHSH violations for free
//! spinor fields in 1+1 dimensions, via Carleman and Bessel–Hankel quadratic
//! forms on the half-line.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bell;
pub mod compress;
pub mod error;
pub mod forms;
pub mod momentum;
pub mod quadrature;
pub mod specfun;
pub mod testfn;

pub use bell::{CorrelatorReport, IdentityDeviation, PairingValue};
pub use compress::{CompressionResult, DyadicBasis};
pub use error::{Error, Result};
pub use forms::{FormValue, KernelForm, Route};
pub use momentum::{Mollifier, MomentumPairing, OnShellTransform};
pub use quadrature::{IntegralResult, QuadratureSpec, Substitution};
pub use testfn::{BellQuadruple, FamilyTag, Side, SpinorFunction, TestFunction1D, TSIRELSON_C};

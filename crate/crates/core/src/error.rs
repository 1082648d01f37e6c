use thiserror::Error;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the routine.
    #[error("domain error in {routine}: {detail}")]
    Domain { routine: &'static str, detail: String },

    /// The inputs are in-domain but violate a structural requirement
    /// (overlapping supports, unsymmetric matrix, wrong family, ...).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An integrand or kernel produced a non-finite value.
    #[error("non-finite value {value} at node {node}")]
    Evaluation { node: f64, value: f64 },

    /// A computation would exceed its memory or work budget.
    #[error("resource limit exceeded: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(routine: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain { routine, detail: detail.into() }
}

use thiserror::Error;

/// Errors raised by state validation, channel construction and critical-value
/// evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |a_ij - conj(a_ji)| = {deviation:.3e} exceeds {tol:.1e}")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("trace is {trace} (|trace - 1| = {deviation:.3e} exceeds {tol:.1e})")]
    TraceNotOne { trace: f64, deviation: f64, tol: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e} below -{tol:.1e}")]
    NotPositive { min_eigenvalue: f64, tol: f64 },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("both qubits must share a channel kind (got {a} and {b})")]
    MixedChannelKinds { a: String, b: String },

    #[error("unphysical slice: Q = {q} exceeds the maximum {q_max} allowed by positivity")]
    UnphysicalSlice { q: f64, q_max: f64 },

    #[error("singular channel parameters: {0}")]
    SingularChannel(String),

    #[error("threshold region is empty: {0}")]
    EmptyRegion(String),

    #[error("no boundary: Q(tau) stays below the target for every coordinate")]
    NoSolution,

    #[error("no sign change on [{lo}, {hi}] (values {f_lo:.3e}, {f_hi:.3e})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("onset bracketing failed near t = {near}: non-monotone concurrence may hide a crossing")]
    BracketFailure { near: f64 },

    #[error("state is separable (Q_phi = {q_phi}, Q_psi = {q_psi})")]
    SeparableInput { q_phi: f64, q_psi: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

//! Crate-wide error type.
//!
//! Every fallible operation reports through [`Error`]; the variants are
//! grouped so a caller can tell input validation problems apart from
//! numerical failures and from "target never reached" outcomes.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A matrix entry was NaN or infinite.
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch in {context}: {left} vs {right}")]
    DimensionMismatch {
        context: &'static str,
        left: usize,
        right: usize,
    },

    /// A Kronecker product (or superoperator built from one) would exceed
    /// the configured dimension cap.
    #[error("dimension {requested} exceeds the configured cap of {cap}")]
    DimensionCapExceeded { requested: usize, cap: usize },

    #[error("matrix is not Hermitian: max |A - A^dag| entry is {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },

    #[error("not a valid density matrix: {reason}")]
    InvalidDensityMatrix { reason: String },

    #[error("Bloch vector has norm {norm:.12} > 1")]
    BlochNormExceeded { norm: f64 },

    #[error("qubit index {site} out of range for {n_qubits} qubits")]
    SiteOutOfRange { site: usize, n_qubits: usize },

    #[error("parameter out of range: {what}")]
    ParameterOutOfRange { what: String },

    /// A quantity that must be real up to numerical residue came out with
    /// too large an imaginary part.
    #[error("imaginary residue {imag:.3e} exceeds tolerance {tol:.1e} in {context}")]
    ComplexResidue {
        context: &'static str,
        imag: f64,
        tol: f64,
    },

    /// Speed (or averaged speed) is zero, so no finite bound exists.
    #[error("stationary state: {context}")]
    StationaryState { context: &'static str },

    /// The relative purity never reached the target inside the scan window
    /// and no plateau was detected either.
    #[error("target f = {target:.6} not reached by t_max = {t_max}: {detail}")]
    TargetNotReached {
        target: f64,
        t_max: f64,
        detail: String,
    },

    #[error("channel failed trace-preservation/positivity certification at t = {t}: {detail}")]
    CptCertificationFailed { t: f64, detail: String },

    #[error("Kraus derivative unavailable: {reason}")]
    DerivativeUnavailable { reason: String },

    #[error("Kraus family size changed near t = {t}: {before} vs {after} operators")]
    KrausFamilyChanged {
        t: f64,
        before: usize,
        after: usize,
    },

    /// A fixed-step integration produced a state violating density-matrix
    /// invariants; the caller should retry with a smaller dt.
    #[error("integration step rejected at t = {t}: {reason}; retry with a smaller dt")]
    StepRejected { t: f64, reason: String },

    #[error("state invariant violated after evolution: {reason}")]
    EvolutionInvariantViolated { reason: String },

    #[error("fit needs at least {needed} points, got {got}")]
    FitDegenerate { needed: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("model error: {0}")]
    Model(String),
}

impl Error {
    /// True for errors caused by malformed or out-of-range input, as
    /// opposed to numerical failures discovered while computing.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteEntry { .. }
                | Error::NotSquare { .. }
                | Error::DimensionMismatch { .. }
                | Error::DimensionCapExceeded { .. }
                | Error::NotHermitian { .. }
                | Error::InvalidDensityMatrix { .. }
                | Error::BlochNormExceeded { .. }
                | Error::SiteOutOfRange { .. }
                | Error::ParameterOutOfRange { .. }
                | Error::Model(_)
        )
    }

    /// True when the failure means "the dynamics never got there", which
    /// callers may want to treat as an outcome rather than a fault.
    pub fn is_not_reached(&self) -> bool {
        matches!(self, Error::TargetNotReached { .. })
    }
}

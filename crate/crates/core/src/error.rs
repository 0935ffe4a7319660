use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Conditions under which the Riccati-based synthesis refuses to produce a gain.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthesisError {
    #[error("input weight R is not positive definite")]
    InputWeightNotPositiveDefinite,
    #[error(
        "state weight is not positive semidefinite (Schur complement Q - N R^-1 N^T has eigenvalue {min_eigenvalue:e})"
    )]
    IndefiniteSchurComplement { min_eigenvalue: f64 },
    #[error("(A, Q) is not detectable: {detail}")]
    NotDetectable { detail: String },
    #[error("(A, B) is not stabilizable: mode {re:e}{im:+e}i cannot be reached by the input")]
    NotStabilizable { re: f64, im: f64 },
    #[error("Hamiltonian has eigenvalues on or near the imaginary axis; no stabilizing solution")]
    NoStabilizingSolution,
    #[error("closed loop is not Hurwitz (spectral abscissa {abscissa:e})")]
    ClosedLoopUnstable { abscissa: f64 },
    #[error("augmented input weight R_hat is not positive definite; raise R or lower the filter weights")]
    AugmentedInputWeight,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entry in {0}")]
    NonFinite(String),
    #[error("transfer function is improper (numerator degree {num_degree} > denominator degree {den_degree}); a state-space realization is impossible")]
    Improper { num_degree: usize, den_degree: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("numerical overflow: {0}")]
    Overflow(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("system is not strictly stable (spectral abscissa {abscissa:e}); its L1 norm is infinite")]
    Unstable { abscissa: f64 },
    #[error("unsupported vehicle speed {0} m/s; supported regimes are 2 m/s and 5 m/s")]
    UnsupportedSpeed(f64),
    #[error("filter design: {0}")]
    FilterDesign(String),
    #[error("synthesis failed: {0}")]
    Synthesis(#[from] SynthesisError),
    #[error("desired model: {0}")]
    DesiredModel(String),
    #[error("properness condition violated: C(s)/M(s) must be proper, but C has relative degree {c_relative_degree} and M has relative degree {m_relative_degree}")]
    Properness { c_relative_degree: usize, m_relative_degree: usize },
    #[error("low-pass filter C(s): {0}")]
    Filter(String),
}

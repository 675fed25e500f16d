use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported potential: {0}")]
    UnsupportedPotential(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("radial cutoff too small: {0}")]
    RadialCutoff(String),

    #[error("moment matrix is not numerically positive definite at pivot {pivot} (pivot ratio {ratio:e})")]
    IllConditioned { pivot: usize, ratio: f64 },

    #[error("Berezin kernel rooted at {0} is degenerate: K(w,w) = 0")]
    DegenerateRoot(Complex64),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("n too small: {0}")]
    NTooSmall(String),

    #[error("antipodal boundary points: phi(z0)*conj(phi(w0)) = -1 has no principal logarithm")]
    AntipodalPoints,

    #[error("Szego kernel pole: phi(z)*conj(phi(w)) = 1")]
    SzegoPole,

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("quadrature inconsistency: {0}")]
    QuadratureInconsistency(String),

    #[error("conformal map inconsistency: {0}")]
    ConformalMap(String),

    #[error("rejection envelope failure: {0}")]
    Envelope(String),

    #[error("numerical rank deficiency: {0}")]
    NumericalRank(String),

    #[error("eigensolver did not converge (seed {seed}, repetition {repetition})")]
    Eigensolver { seed: u64, repetition: u64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Validation errors are caused by bad input rather than by numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::UnsupportedPotential(_)
                | Error::Unsupported(_)
                | Error::Config(_)
                | Error::Schema(_)
                | Error::Hypothesis(_)
                | Error::NTooSmall(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

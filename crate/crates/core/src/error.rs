use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid rate matrix: {0}")]
    InvalidRates(String),

    #[error("invalid input `{field}`: {reason}")]
    InvalidInput { field: &'static str, reason: String },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("eigenvalues nearly coincide (min gap {gap:.3e} <= tolerance {tol:.3e})")]
    NearDegenerateSpectrum { gap: f64, tol: f64 },

    #[error("eigenvector matrix is ill-conditioned (reconstruction residual {residual:.3e})")]
    IllConditionedSpectrum { residual: f64 },

    #[error("eigenvalue iteration did not converge")]
    EigenNonConvergence,

    #[error("imaginary residue {residue:.3e} left after spectral summation")]
    ImaginaryResidueTooLarge { residue: f64 },

    #[error("chain is reducible: zero eigenvalue has multiplicity {multiplicity}")]
    ReducibleChain { multiplicity: usize },

    #[error("endpoint {to} is unreachable from {from} over {tau} (p = {prob:.3e})")]
    UnreachableEndpoint {
        from: usize,
        to: usize,
        tau: f64,
        prob: f64,
    },

    #[error("sojourn component {state} is negative ({value:.3e})")]
    NegativeSojourn { state: usize, value: f64 },

    #[error("normal matrix is rank deficient (condition number {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("insufficient data: {n} observations for {params} parameters (need n >= params + 2)")]
    InsufficientData { n: usize, params: usize },

    #[error("adaptive quadrature did not converge (error estimate {estimate:.3e} after {subdivisions} subdivisions)")]
    QuadratureNonConvergence { estimate: f64, subdivisions: usize },

    #[error("monte carlo acceptance rate {rate:.3e} below 1e-4")]
    AcceptanceTooLow { rate: f64 },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn input(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field,
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The squeezing parameter is undefined when the mean spin vanishes.
    #[error("undefined mean-spin direction: |<Sz>| = {mean_sz:.3e} below threshold {eps:.3e}")]
    UndefinedMeanSpin { mean_sz: f64, eps: f64 },

    /// tan(theta) >= 1: the steady state stops being normalizable and the
    /// preparation time diverges.
    #[error("non-normalizable regime: tan(theta) = {0} >= 1")]
    NonNormalizable(f64),

    #[error("non-unique steady state: {count} null-space members below threshold")]
    NonUniqueSteadyState { count: usize },

    #[error("no steady state found: smallest singular value {smallest:.3e} above threshold {threshold:.3e}")]
    NoSteadyState { smallest: f64, threshold: f64 },

    #[error("dimension {dim} exceeds cap {cap} for {context}")]
    DimensionCap {
        dim: usize,
        cap: usize,
        context: &'static str,
    },

    /// Stiff failure: the adaptive integrator could not take a step of
    /// representable size.
    #[error("step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("integration budget exhausted at t = {t:.6e}: residual {residual:.3e} above {threshold:.3e}")]
    NotConverged {
        t: f64,
        residual: f64,
        threshold: f64,
    },

    /// The truncated phonon space leaked population into its top level.
    #[error("Fock truncation leak: top-state population {population:.3e} exceeds {limit:.3e}")]
    TruncationLeak { population: f64, limit: f64 },
}

impl Error {
    /// Coarse classification used by callers that map failures to process
    /// exit categories: true for bad inputs, false for runtime failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::DimensionMismatch(_)
                | Error::NonNormalizable(_)
                | Error::DimensionCap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Quantum numbers that do not describe a valid angular-momentum state.
    #[error("invalid quantum numbers: {0}")]
    Domain(String),

    /// A drive configuration or request the model does not cover.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The Liouvillian has more than one stationary state.
    #[error("multiple steady states (relative singular gap {gap:.3e})")]
    MultipleSteadyStates { gap: f64 },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("at probe detuning {delta_probe:.6} (2pi MHz): {source}")]
    AtGridPoint {
        delta_probe: f64,
        #[source]
        source: Box<Error>,
    },

    /// rho(D+w) and rho(D-w) coincide, so the cooling limit is undefined.
    #[error("degenerate spectral asymmetry ({asymmetry:.3e})")]
    DegenerateAsymmetry { asymmetry: f64 },

    #[error("unphysical sideband ratio {ratio}")]
    UnphysicalRatio { ratio: f64 },

    #[error("resonant denominator in perturbative shift ({denominator:.3e})")]
    Singularity { denominator: f64 },

    #[error("inconsistent measurement: {0}")]
    InconsistentMeasurement(String),

    #[error("fit failed: {0}")]
    Fit(String),
}

impl Error {
    pub(crate) fn at_grid_point(delta_probe: f64, source: Error) -> Self {
        Error::AtGridPoint {
            delta_probe,
            source: Box::new(source),
        }
    }

    /// Strips grid-point tagging to expose the underlying failure.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtGridPoint { source, .. } => source.root(),
            e => e,
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    #[error("singular complexity term: 1 - 2*gamma*h = 0 at entry ({row}, {col})")]
    SingularParameter { row: usize, col: usize },

    #[error("degenerate profile: no terms contribute to the complexity parameter")]
    DegenerateProfile,

    #[error("degenerate state: coefficient matrix is identically zero")]
    DegenerateState,

    #[error("numerical failure{}: {reason}", sample.map(|s| format!(" in sample {s}")).unwrap_or_default())]
    Numerical { sample: Option<u64>, reason: String },

    #[error("step floor reached at Y = {y}: eigenvalues {} and {} collided", pair.0, pair.1)]
    StiffRegion { y: f64, pair: (usize, usize) },

    #[error("fit did not converge from any start (best residual {best_residual})")]
    FitFailure { best_residual: f64 },

    #[error("binning failed: {0}")]
    Binning(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("grid point {index}: {source}")]
    GridPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::ParameterDomain(msg.into())
    }

    pub(crate) fn numerical(reason: impl Into<String>) -> Self {
        Error::Numerical { sample: None, reason: reason.into() }
    }

    /// Attach a sample index to a numerical error; other variants pass through.
    pub fn with_sample(self, id: u64) -> Self {
        match self {
            Error::Numerical { sample: None, reason } => Error::Numerical { sample: Some(id), reason },
            other => other,
        }
    }

    pub(crate) fn at_grid(self, index: usize) -> Self {
        Error::GridPoint { index, source: Box::new(self) }
    }

    /// True for errors caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Numerical { .. } | Error::StiffRegion { .. } | Error::FitFailure { .. } => true,
            Error::GridPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::Csv(e) => e.is_io_error(),
            Error::GridPoint { source, .. } => source.is_io(),
            _ => false,
        }
    }
}

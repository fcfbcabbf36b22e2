use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric at ({row}, {col})")]
    NotSymmetric { row: usize, col: usize },

    #[error("eigensolver did not converge after {iterations} iterations (off-diagonal residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("zero variance for asset {0}")]
    ZeroVariance(String),

    #[error("no data rows")]
    NoData,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("all {0} realizations diverged")]
    AllDiverged(usize),

    #[error("temperature {temperature} is super-critical at p = {p} (denominator {denominator:e})")]
    SuperCritical { temperature: f64, p: f64, denominator: f64 },

    #[error("step size too large: {0}")]
    StepSize(String),

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("at beta = {beta}{}: {source}", ratio.map_or(String::new(), |r| format!(", T/Tc = {r}")))]
    Cell {
        beta: f64,
        /// Unset for failures before the temperature loop.
        ratio: Option<f64>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// `true` for errors caused by bad input or configuration, as opposed to
    /// numerical failures during a computation.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::InvalidArgument(_)
            | Error::NotSymmetric { .. }
            | Error::ZeroVariance(_)
            | Error::NoData
            | Error::Parse(_)
            | Error::Csv(_)
            | Error::Io(_)
            | Error::Json(_) => true,
            Error::Cell { source, .. } => source.is_input_error(),
            _ => false,
        }
    }

    pub(crate) fn in_cell(self, beta: f64, ratio: Option<f64>) -> Error {
        match self {
            e @ Error::Cell { .. } => e,
            e => Error::Cell { beta, ratio, source: Box::new(e) },
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

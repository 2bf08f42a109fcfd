use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quadrature order {0}: need at least 1")]
    InvalidOrder(usize),

    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("target {coord} lies outside element interval [{lo}, {hi}] in dimension {dim}")]
    OutOfElement {
        dim: usize,
        coord: f64,
        lo: f64,
        hi: f64,
    },

    #[error("shift {0} resonates with a grid mode")]
    SingularShift(num_complex::Complex64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precision loss: {0}")]
    Precision(String),

    #[error("infeasible gap: {0}")]
    InfeasibleGap(String),

    #[error("filter construction failed: {0}")]
    FilterConstruction(String),

    #[error("filter application failed at pole {pole}: {source}")]
    FilterApplication {
        pole: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("GMRES stalled after {} iterations (relative residual {:.3e})", report.iterations, report.final_relative_residual)]
    GmresStalled {
        report: crate::krylov::SolveReport,
        best: Vec<num_complex::Complex64>,
    },

    #[error("rank error: {0}")]
    Rank(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("penalty estimation failed on element {element}: {reason}")]
    PenaltyEstimation { element: usize, reason: String },

    #[error("element {element}: {source}")]
    Element {
        element: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("experiment {experiment}: {source}")]
    Experiment {
        experiment: String,
        #[source]
        source: Box<Error>,
    },

    #[error("metric undefined: {0}")]
    MetricUndefined(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that come from an iterative method failing to converge,
    /// possibly wrapped in context.
    pub fn is_non_convergence(&self) -> bool {
        match self {
            Error::NonConvergence { .. } | Error::GmresStalled { .. } => true,
            Error::FilterApplication { source, .. }
            | Error::Element { source, .. }
            | Error::Experiment { source, .. } => source.is_non_convergence(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or config rejected its input. `field` is a dotted path
    /// such as `system.observable[1]`.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("profile kind `{0}` has no analytic Fourier transform; use numeric_fourier_transform")]
    NoAnalyticTransform(&'static str),

    #[error("operation requires a boxcar (constant) coupling, got `{0}`")]
    UnsupportedProfile(&'static str),

    #[error(
        "numerical accuracy not reached: estimated error {estimate:e} exceeds tolerance {tolerance:e} ({context})"
    )]
    Accuracy {
        estimate: f64,
        tolerance: f64,
        context: String,
    },

    /// Step-doubling disagreement in the exact propagator. Both results are
    /// kept so that callers can inspect them.
    #[error("propagation did not converge at {steps} steps: |coarse - fine| = {difference:e} > {tolerance:e}")]
    NotConverged {
        steps: usize,
        difference: f64,
        tolerance: f64,
        coarse: Vec<num_complex::Complex64>,
        fine: Vec<num_complex::Complex64>,
    },

    #[error("{0}")]
    Domain(String),

    /// A failure while evolving one pointer grid point.
    #[error("at pointer grid point {index} (a = {momentum}): {source}")]
    GridPoint {
        index: usize,
        momentum: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("perturbation order {requested} exceeds the cap of {cap}")]
    OrderCap { requested: usize, cap: usize },

    #[error("insufficient data: {found} usable samples, need at least {needed}")]
    InsufficientData { found: usize, needed: usize },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input (as opposed to numerical or
    /// I/O failures). The CLI maps these to exit status 2.
    pub fn is_usage(&self) -> bool {
        if let Error::GridPoint { source, .. } = self {
            return source.is_usage();
        }
        matches!(
            self,
            Error::Validation { .. }
                | Error::Parse { .. }
                | Error::NoAnalyticTransform(_)
                | Error::UnsupportedProfile(_)
                | Error::OrderCap { .. }
                | Error::Domain(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

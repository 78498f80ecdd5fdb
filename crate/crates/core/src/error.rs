use thiserror::Error;

/// Errors raised by the numerical modules and the certifier.
#[derive(Debug, Error)]
pub enum Error {
    #[error("zero derivative at x = {x:.6e} (not a local diffeomorphism)")]
    ZeroDerivative { x: f64 },
    #[error("model `{0}` does not provide a derivative formula")]
    MissingDerivative(String),
    #[error("operation unsupported for model `{model}`: {what}")]
    Unsupported { model: String, what: String },
    #[error("singular matrix in {0}")]
    Singular(&'static str),
    #[error("newton iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("splitting undefined: {0}")]
    SplittingUndefined(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("inverse-branch composition is not contracting: {0}")]
    NonContraction(String),
    #[error("cone invariance violated at sample {index} ({detail})")]
    ConeInvariance { index: usize, detail: String },
    #[error("target {index} is isolated: nearest sample at distance {distance:.3e} > radius {radius:.3e}")]
    Isolated { index: usize, distance: f64, radius: f64 },
    #[error("sample set is not orbit-closed: image of sample {0} is not a sample")]
    NotOrbitClosed(usize),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate sampling: {0}")]
    Degenerate(String),
    #[error("adapted metric: one-step factor {sigma:.6} <= 1 at horizon {horizon}; increase N")]
    HorizonInsufficient { horizon: usize, sigma: f64 },
    #[error("conjugacy defect {defect:.3e} exceeds bound {bound:.3e}")]
    ConjugacyDefect { defect: f64, bound: f64 },
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(u32, u32),
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("csv error at line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("point {x} lies outside the domain [-{halfwidth}, {halfwidth}]")]
    Domain { x: f64, halfwidth: f64 },

    #[error("composition leaves the domain: sampled value {value} exceeds half-width {halfwidth}")]
    Range { value: f64, halfwidth: f64 },

    #[error("singular scaling factor {0}")]
    SingularScaling(f64),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("no convergence after {iters} iterations (residual {residual:e})")]
    NoConvergence {
        iters: usize,
        residual: f64,
        last_iterate: Vec<f64>,
    },

    #[error("linearization failed: {0}")]
    Linearization(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("degenerate disk: |det| = {det:e}")]
    Disk { det: f64 },

    #[error("polynomial refit residual {residual:e} above threshold {threshold:e}")]
    Refit { residual: f64, threshold: f64 },

    #[error("renormalization failed: {0}")]
    Renormalization(String),

    #[error("orbit escaped at step {step}")]
    Escape { step: usize },

    #[error("requested period {requested} but orbit has period {actual}")]
    WrongPeriod { requested: usize, actual: usize },

    #[error("invalid bracket [{lo}, {hi}]: {reason}")]
    Bracket { lo: f64, hi: f64, reason: String },

    #[error("orbit lost during continuation at t = {t}: {reason}")]
    Continuation { t: f64, reason: String },

    #[error("leading multiplier is complex at t = {t} ({re} ± {im}i)")]
    ComplexMultiplier { t: f64, re: f64, im: f64 },

    #[error("cascade stopped at N = {failed_at}: {source}")]
    Cascade {
        failed_at: usize,
        completed: Vec<(usize, f64)>,
        #[source]
        source: Box<Error>,
    },

    #[error("insufficient data: need {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("atoms overlap at generation {generation}; use more points or a parameter closer to accumulation")]
    Resolution { generation: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Range { .. } => "range",
            Error::SingularScaling(_) => "singular_scaling",
            Error::Fit(_) => "fit",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Linearization(_) => "linearization",
            Error::Dimension(_) => "dimension",
            Error::Disk { .. } => "disk",
            Error::Refit { .. } => "refit",
            Error::Renormalization(_) => "renormalization",
            Error::Escape { .. } => "escape",
            Error::WrongPeriod { .. } => "wrong_period",
            Error::Bracket { .. } => "bracket",
            Error::Continuation { .. } => "continuation",
            Error::ComplexMultiplier { .. } => "complex_multiplier",
            Error::Cascade { .. } => "cascade",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::Resolution { .. } => "resolution",
            Error::Config(_) => "config",
            Error::Parse(_) => "parse",
        }
    }
}

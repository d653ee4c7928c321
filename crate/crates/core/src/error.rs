use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The magnon self-energy bracket (or the RWA psi denominator) vanished.
    #[error("polariton-resonance singularity at omega = {omega:e} rad/s")]
    PolaritonSingularity { omega: f64 },

    /// (i omega I - M) is numerically singular.
    #[error("resonant singularity of the drift model at omega = {omega:e} rad/s")]
    ResonantSingularity { omega: f64 },

    /// |A|^2 + |B|^2 = 0, so noise cannot be referred to the magnon input.
    #[error("no transduction at omega = {omega:e} rad/s (magnonic response is zero)")]
    NoTransduction { omega: f64 },

    #[error("drift matrix is unstable (max eigenvalue real part {max_real_part:e})")]
    Unstable { max_real_part: f64 },

    #[error("unknown figure id '{0}'")]
    UnknownFigure(String),

    #[error("empty frequency grid")]
    EmptyGrid,

    #[error("every point of series '{label}' is singular")]
    AllPointsSingular { label: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("oracle deviation {deviation:e} exceeds tolerance {tolerance:e}")]
    ValidationFailed { deviation: f64, tolerance: f64 },
}

impl Error {
    /// Stable identifier used in machine-parseable CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::PolaritonSingularity { .. } => "polariton_singularity",
            Error::ResonantSingularity { .. } => "resonant_singularity",
            Error::NoTransduction { .. } => "no_transduction",
            Error::Unstable { .. } => "unstable",
            Error::UnknownFigure(_) => "unknown_figure",
            Error::EmptyGrid => "empty_grid",
            Error::AllPointsSingular { .. } => "all_points_singular",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::ValidationFailed { .. } => "validation_failed",
        }
    }

    /// True for per-point failures that a sweep records as a gap.
    pub fn is_point_singularity(&self) -> bool {
        matches!(
            self,
            Error::PolaritonSingularity { .. }
                | Error::ResonantSingularity { .. }
                | Error::NoTransduction { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("invalid sequence: {0}")]
    InvalidSequence(String),

    #[error("state is not normalized (norm² = {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("state dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("tolerance {0} outside the supported range [1e-12, 1e-6]")]
    InvalidTolerance(f64),

    #[error("step size underflow at t = {time:e} s (|H| ≈ {omega:e} rad/s)")]
    StepUnderflow { time: f64, omega: f64 },

    #[error("step limit of {0} exceeded")]
    StepLimit(usize),

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("degenerate eigenframe at t = {t:e} s: both couplings vanish")]
    DegenerateFrame { t: f64 },

    #[error("parameters outside the real-amplitude regime: {0}")]
    OutsideRealRegime(String),

    #[error("phase grid unusable for fitting: {0}")]
    InsufficientGrid(String),

    #[error("degenerate fit: mean ancilla population {0:e} is zero")]
    DegenerateFit(f64),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("unknown integrator `{0}`")]
    UnknownIntegrator(String),

    #[error("invalid parameter path `{0}`")]
    InvalidParameterPath(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

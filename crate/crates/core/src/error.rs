use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error)]
pub enum NvError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected} samples, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("evolution diverged at step {step} (t = {time})")]
    Divergence { step: usize, time: f64 },

    #[error("characteristic cubic has complex roots at k = {k}, gamma = {gamma}")]
    ComplexRoots { k: f64, gamma: f64 },

    #[error("resonance at k = {k}, gamma = {gamma}: |p^2 - k^2| = {gap:e} for root p = {root}")]
    Resonance {
        k: f64,
        gamma: f64,
        root: f64,
        gap: f64,
    },

    #[error("degenerate planar direction alpha = {alpha}: kappa = cos(3 alpha) vanishes")]
    DegenerateDirection { alpha: f64 },

    #[error("integrator failure at x = {x}: {reason}")]
    Integrator { x: f64, reason: String },

    #[error("trace lost after {points} points; last good point (k, gamma) = ({k}, {gamma})")]
    TraceLost { points: usize, k: f64, gamma: f64 },

    #[error("(k, gamma) = ({k}, {gamma}) is off the zero curve: normalized residual {residual:e}")]
    OffCurve { k: f64, gamma: f64, residual: f64 },

    #[error(
        "kernel is degenerate: two smallest singular values {smallest:e} and {next:e} are within 1e3 of each other"
    )]
    DegenerateKernel { smallest: f64, next: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("config parse error: {0}")]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, NvError>;

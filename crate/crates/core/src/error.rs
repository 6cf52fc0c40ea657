use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 8")]
    InvalidGridSize(usize),

    #[error("domain length must be positive and finite, got {0}")]
    InvalidLength(f64),

    #[error("field has {found} samples but the grid has {expected}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("fields are bound to different grids")]
    GridMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot normalize an identically zero field")]
    ZeroNorm,

    #[error("plane-wave mode {mode} aliases on a grid of {n} points (need |mode| < n/2)")]
    AliasedMode { mode: i64, n: usize },

    #[error(
        "boundary clearance violated: edge density {edge:.3e} exceeds {limit:.3e} (1e-10 of peak)"
    )]
    BoundaryClearance { edge: f64, limit: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("blow-up: max amplitude {amplitude:.3e} exceeds {limit:.3e} (1e6 x initial max)")]
    BlowUp { amplitude: f64, limit: f64 },

    #[error("step {step} (t = {t}): {source}")]
    AtStep {
        step: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("split-step integration supports only Linear and DensityFunctional models")]
    SplitStepUnsupported,

    #[error(
        "time step {dt} exceeds the RK4 stability limit {limit:.6e}: \
         require dt * (k_max^2 / (2 m) + max|U|) <= 2.8 with k_max = pi / dx"
    )]
    StabilityGuard { dt: f64, limit: f64 },

    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("samples are not uniformly spaced in time")]
    NonUniformSampling,

    #[error("Galilean boosts require a zero external potential")]
    BoostWithPotential,

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),

    #[error("unknown preset `{name}`; available presets: {}", available.join(", "))]
    UnknownPreset {
        name: String,
        available: Vec<&'static str>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_step(self, step: usize, t: f64) -> Self {
        Error::AtStep {
            step,
            t,
            source: Box::new(self),
        }
    }
}

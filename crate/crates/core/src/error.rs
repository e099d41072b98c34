use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("aspect ratio {0} outside (0, 1]")]
    AspectOutOfDomain(f64),

    #[error(
        "timestep {dt:e} s does not resolve the {mode} mode at {frequency_hz:e} Hz \
         (need dt < {limit:e} s)"
    )]
    TimestepTooLarge {
        dt: f64,
        mode: &'static str,
        frequency_hz: f64,
        limit: f64,
    },

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("series of length {len} too short (need at least {needed})")]
    SeriesTooShort { len: usize, needed: usize },

    #[error("fit band contains {bins} bins (need at least {needed})")]
    BandTooNarrow { bins: usize, needed: usize },

    #[error("fit did not converge after {iterations} iterations (rms log residual {rms_residual:.3e})")]
    FitDidNotConverge { iterations: usize, rms_residual: f64 },

    #[error("degenerate fit input: {0}")]
    DegenerateFit(&'static str),

    #[error("no torsional mode: particle is optically isotropic (chi_x = chi_y)")]
    NoTorsionalMode,

    #[error("config error: {0}")]
    Config(String),
}

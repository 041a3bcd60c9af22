use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("gapless point at k = {k:.6} (|q| = {abs_q:.3e}); eigenstates undefined on a phase boundary")]
    GaplessPoint { k: f64, abs_q: f64 },

    #[error("time {t} outside schedule range [0, {total}]")]
    OutOfRange { t: f64, total: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("generator not Hermitian at t = {t} (deviation {deviation:.3e})")]
    NonHermitianGenerator { t: f64, deviation: f64 },

    #[error("phase jump of {increment:.4} rad at sample {index} exceeds the unwrap guard; increase time resolution")]
    UnwrapJump { index: usize, increment: f64 },

    #[error("readout component vanishes at sample {index} (|z| = {magnitude:.3e}); diabatic breakdown")]
    DegenerateComponent { index: usize, magnitude: f64 },

    #[error("rotating-wave guard violated: coupling {coupling:.3} rad/s exceeds limit {limit:.3} rad/s")]
    RwaViolated { coupling: f64, limit: f64 },

    #[error("invalid cavity configuration: {0}")]
    InvalidCavityConfig(String),

    #[error("traces are not comparable: {0}")]
    TraceMismatch(String),
}

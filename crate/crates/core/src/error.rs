use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("did not converge: {0}")]
    ConvergenceFailure(String),

    #[error("no sign change on [{lo}, {hi}]: g(lo) = {g_lo}, g(hi) = {g_hi}")]
    Bracket { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("functions live on incompatible grids or measures")]
    IncompatibleGrids,

    #[error("quadrature accuracy check failed: {0}")]
    AccuracyFailure(String),

    #[error("sphere angle undefined on the zero shell (m_ref = {m_ref}, m = {m})")]
    UndefinedAngle { m_ref: i32, m: i32 },

    #[error("distance {distance} inconsistent with shells |m_ref| = {m_ref}, |m| = {m} (cos = {cosine})")]
    InconsistentDistance {
        m_ref: i32,
        m: i32,
        distance: f64,
        cosine: f64,
    },

    #[error("ground-state energy minimum sits at the window edge m = {edge}")]
    WindowTooSmall { edge: i32 },

    #[error("undefined: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;

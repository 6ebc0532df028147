use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point {im} lies outside the analyticity strip |Im z| < {rho0}")]
    OutsideStrip { im: f64, rho0: f64 },

    #[error("empty integer interval [{lo}, {hi}]")]
    EmptyInterval { lo: i64, hi: i64 },

    #[error("b vanishes on the orbit at site {site}")]
    VanishingCoupling { site: i64 },

    #[error("eigensolver did not converge in block starting at {block_start} (length {block_len})")]
    NoConvergence { block_start: usize, block_len: usize },

    #[error("energy {energy} is within {floor:e} of the window spectrum")]
    SingularResolvent { energy: f64, floor: f64 },

    #[error("energy {energy} is not an eigenvalue of the window (distance {distance:e})")]
    NotAnEigenvalue { energy: f64, distance: f64 },

    #[error("winding number did not stabilise: {0}")]
    WindingUnstable(String),

    #[error("zero matrix in sequence at index {0}")]
    ZeroMatrix(usize),

    #[error("model file: {0}")]
    Model(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

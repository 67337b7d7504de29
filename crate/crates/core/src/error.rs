use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("binary collision: squared side s{side} = {value:e} is below the collision threshold")]
    Collision { side: usize, value: f64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("shape point too close to a pole (cos phi = {0:e}); longitude is undefined")]
    Pole(f64),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    Stiffness { t: f64, h: f64 },

    #[error("ambiguous eclipse: bodies {0} and {1} project to the same point")]
    Ambiguous(usize, usize),

    #[error("angular momentum J = {j:e} exceeds the zero-momentum tolerance {tol:e}")]
    Nonreduced { j: f64, tol: f64 },

    #[error("loop approached collision: min pairwise distance {0:e}")]
    CollisionApproach(f64),

    #[error("return map mismatch {mismatch:e} exceeds threshold {threshold:e}")]
    Nonperiodic { mismatch: f64, threshold: f64 },

    #[error("integration stopped early at t = {t}: {reason}")]
    Terminated { reason: &'static str, t: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::minimize::MinimizeResult;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Domain(String),

    #[error("field and kernel live on different grids")]
    GridMismatch,

    #[error(
        "minimization did not converge: residual {residual:.3e} after {iterations} iterations"
    )]
    NonConvergence {
        residual: f64,
        iterations: usize,
        best: Box<MinimizeResult>,
    },

    #[error("every start of the multi-start minimization failed")]
    AllStartsFailed,

    #[error("no ground state for mu = {mu} (admissible window is (0, {mu_star}))")]
    NoSolutionInWindow { mu: f64, mu_star: f64 },

    #[error("shooting bracket collapsed at Q(0) = {q0} without isolating a decaying solution")]
    BisectionCollapse { q0: f64 },

    #[error("mass {lambda} exceeds the largest computable mass {max_mass}")]
    MassOutOfReach { lambda: f64, max_mass: f64 },

    #[error("invalid bracket: {0}")]
    InvalidBracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;

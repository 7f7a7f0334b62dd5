//! Error type shared by all modules.

use num_complex::Complex64 as C64;

#[derive(Debug, Clone, thiserror::Error)]
pub enum CoreError {
    #[error("theta series did not converge within {max_terms} terms (|q| = {abs_q:.6e})")]
    SeriesDivergence { abs_q: f64, max_terms: usize },

    #[error("{point} lies within {dist:.3e} of lattice point {nearest}")]
    LatticePole { point: C64, nearest: C64, dist: f64 },

    #[error("step size underflow at path parameter {param} (h = {h:.3e})")]
    StepUnderflow { param: C64, h: f64 },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("pole collision: |x_{a} - x_{b}| = {gap:.3e} at path parameter {param}")]
    Collision { a: usize, b: usize, gap: f64, param: C64 },

    #[error("loop passes within {dist:.3e} of pole {index} (guard {guard:.1e})")]
    LoopNearPole { index: usize, dist: f64, guard: f64 },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;

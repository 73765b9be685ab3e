//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gamma = {gamma} outside the admissible open interval (0, {bound})")]
    GammaOutOfRange { gamma: f64, bound: f64 },

    #[error("N = {n} outside supported range [{lo}, {hi}]")]
    LevelOutOfRange { n: u64, lo: u64, hi: u64 },

    #[error("epsilon = {epsilon} too large for {what} (requires epsilon < {bound})")]
    ScaleTooLarge { epsilon: f64, bound: f64, what: &'static str },

    #[error("point at distance {dist} outside chart of radius {radius}")]
    OutsideChart { dist: f64, radius: f64 },

    #[error("cutoff support of radius {support} wraps the torus")]
    SupportWraps { support: f64 },

    #[error("matrix is not symplectic: det = {det}, expected 1")]
    NotSymplectic { det: i64 },

    #[error("matrix is not hyperbolic: |trace| = {trace_abs} <= 2")]
    NotHyperbolic { trace_abs: i64 },

    #[error("matrix is not quantizable: A mod 2 = [[{m00},{m01}],[{m10},{m11}]] is neither the identity nor the antidiagonal involution, so no even-shear word exists")]
    InadmissibleParity { m00: i64, m01: i64, m10: i64, m11: i64 },

    #[error("no even-shear factorization found within depth {depth}")]
    FactorizationDepth { depth: usize },

    #[error("ball radius {radius} needs at least 4 grid cells but spacing is {spacing}; use a finer grid")]
    BallBelowResolution { radius: f64, spacing: f64 },

    #[error("aliasing guard: |A^T| entries reach {max_entry}, above the 10^6 quadrature limit")]
    AliasingGuard { max_entry: f64 },

    #[error("eigen residual {residual} at index {index} exceeds tolerance {tol}")]
    EigenResidual { index: usize, residual: f64, tol: f64 },

    #[error("LAPACK {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },

    #[error("winding-number budget exhausted in cell at ({x}, {y}) after {refinements} refinements")]
    WindingBudget { x: f64, y: f64, refinements: usize },

    #[error("zero count mismatch: winding numbers total {found}, expected {expected}")]
    ZeroCountMismatch { found: i64, expected: i64 },

    #[error("config: {0}")]
    Config(String),

    #[error("experiment unit failed: {0}")]
    Unit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

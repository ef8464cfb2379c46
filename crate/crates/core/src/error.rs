use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid plant: {0}")]
    InvalidPlant(String),

    #[error("invalid problem field `{field}`: {reason}")]
    InvalidProblem { field: &'static str, reason: String },

    #[error("s = {re}{im:+}j lies within {distance:e} of a pole")]
    PoleProximity { re: f64, im: f64, distance: f64 },

    #[error("({sigma}, {omega}) coincides with a pole or zero of G")]
    Domain { sigma: f64, omega: f64 },

    #[error("polynomial is identically zero")]
    DegeneratePolynomial,

    #[error("plant degree n + m = {0} exceeds the supported maximum of 60")]
    DegreeTooHigh(usize),

    #[error("eigenvalue iteration failed for a companion matrix of size {0}")]
    Eigen(usize),

    #[error("invalid bracket [{lo}, {hi}] with f values {f_lo}, {f_hi}")]
    InvalidBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("grazing boundary crossing at omega = {0}: crossing direction is ill-posed")]
    IllPosedCrossing(f64),

    #[error("branch point on the region boundary at {re}{im:+}j")]
    BranchOnBoundary { re: f64, im: f64 },

    #[error("tangent is undefined: both partial derivatives vanish")]
    SingularTangent,

    #[error("secant direction is degenerate (consecutive points coincide)")]
    DegenerateSecant,

    #[error("Newton corrector did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("corrector Jacobian is singular")]
    SingularJacobian,

    #[error("invalid continuation config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

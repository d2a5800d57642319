use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// f'(0) does not exceed the good-site mortality, so no dispersal rate permits invasion.
    #[error("non-invadable regime: f'(0) = {fprime0} <= gamma = {gamma}")]
    NonInvadable { fprime0: f64, gamma: f64 },

    /// f'(0) <= Gamma: zero is the only equilibrium and the KPP speed formula does not apply.
    #[error("no positive equilibrium: f'(0) = {fprime0} <= Gamma = {big_gamma}")]
    NoPositiveEquilibrium { fprime0: f64, big_gamma: f64 },

    #[error("dispersal rate beta = {beta} outside (0, beta0) with beta0 = {beta0}")]
    BetaOutOfRange { beta: f64, beta0: f64 },

    #[error("non-KPP regime: F(0, mu, beta) = {value} <= 0")]
    NonKpp { value: f64 },

    #[error("no sign change of {what} on [{lo}, {hi}]")]
    NoSignChange { what: &'static str, lo: f64, hi: f64 },

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence { what: &'static str, iterations: usize },

    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("window [{lo}, {hi}] is invalid: {reason}")]
    InvalidWindow { lo: i64, hi: i64, reason: &'static str },

    #[error("support [{lo}, {hi}] is not contained in window [{window_lo}, {window_hi}]")]
    SupportOutsideWindow {
        lo: i64,
        hi: i64,
        window_lo: i64,
        window_hi: i64,
    },

    #[error("step size {dt} does not divide delay {tau}")]
    StepDoesNotDivideDelay { dt: f64, tau: f64 },

    #[error("instability at t = {time}: u[{site}] = {value} exceeds {limit}")]
    Instability {
        time: f64,
        site: i64,
        value: f64,
        limit: f64,
    },

    #[error("invariant region violated at t = {time}: u[{site}] = {value}, allowed [{lower}, {upper}]")]
    InvariantViolation {
        time: f64,
        site: i64,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("front at {position} reached the boundary margin at t = {time} (window edge {edge}, margin {margin})")]
    BoundaryContamination {
        time: f64,
        position: f64,
        edge: i64,
        margin: i64,
    },

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("insufficient xi overlap between parity classes: {0}")]
    InsufficientOverlap(String),

    #[error("empty parameter grid")]
    EmptyGrid,
}

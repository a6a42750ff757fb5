use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pole of {function} at x = {x}")]
    Pole { function: &'static str, x: f64 },

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("Gamma_beta pole in structure constant at sign combination {signs:?} (argument {x})")]
    StructurePole { signs: [i8; 3], x: f64 },

    #[error("conformal block series did not converge: {0}")]
    NonConvergence(String),

    #[error("degenerate-limit regularization unstable: {0}")]
    Regularization(String),

    #[error("Gram matrix singular at level {level}")]
    SingularGram { level: usize },

    #[error("least-squares system ill-conditioned (condition number {cond:.3e} > {bound:.3e})")]
    IllConditioned { cond: f64, bound: f64 },

    #[error("crossing equation has no solution (residual {0:.3e})")]
    NoSolution(f64),

    #[error("inconsistent sigma -> 0 limit: analytic {analytic}, numeric {numeric}")]
    InconsistentLimit { analytic: f64, numeric: f64 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("state vector does not match state space: {0}")]
    IndexMismatch(String),

    #[error("series not stabilized: {0}")]
    NotStabilized(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("underflow: {0}")]
    Underflow(String),

    #[error("cache file: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Two levels closer than the degeneracy tolerance; the coupling
    /// denominators are singular there.
    #[error("degenerate levels {i} and {j} at {lambda:?}: gap {gap:.3e} below tolerance {tol:.3e}")]
    Degenerate {
        i: usize,
        j: usize,
        gap: f64,
        tol: f64,
        lambda: Vec<f64>,
    },

    #[error("eigensolver failed: {0}")]
    Solver(String),

    /// Bound-state root count changed under grid refinement.
    #[error("bound-state search unresolved: {coarse} roots on the base grid, {fine} on the refined grid")]
    Resolution { coarse: usize, fine: usize },

    #[error("step size underflow: no accepted step after {halvings} halvings (last difference {difference:.3e})")]
    StepUnderflow { halvings: u32, difference: f64 },

    #[error("not converged: {0}")]
    NotConverged(String),

    /// The closed-form rotation angle only exists when `i f` is real along the path.
    /// `marginal` marks residuals small enough that the path-ordered propagator is
    /// the recommended fallback.
    #[error("effective field is not real along the path (residual {residual:.3e}); use the path-ordered propagator")]
    NotReal { residual: f64, marginal: bool },

    #[error("model error: {0}")]
    Model(String),
}

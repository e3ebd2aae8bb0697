use crate::decomposition::Decomposition;
use crate::error::Result;

/// A black-box function to maximize, with a known optimum for regret.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    fn evaluate(&self, x: &[f64]) -> Result<f64>;

    /// `max_x f(x)` (or the best available estimate of it).
    fn known_max(&self) -> f64;

    /// The true additive structure, when the objective has one.
    fn true_decomposition(&self) -> Option<&Decomposition> {
        None
    }
}

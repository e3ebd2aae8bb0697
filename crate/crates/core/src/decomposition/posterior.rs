use libm::lgamma;

use super::Decomposition;
use crate::error::{input, Result};
use crate::gp::{GpState, ObservationSet};
use crate::kernel::KernelSpec;

/// `log ∫ p(z | θ) p(θ; α) dθ`, the Dirichlet-multinomial prior of `z` with θ
/// integrated out.
pub fn log_prior(decomp: &Decomposition, alpha: &[f64]) -> Result<f64> {
    if alpha.len() != decomp.slots() {
        return input(format!("alpha has {} entries, expected {}", alpha.len(), decomp.slots()));
    }
    if alpha.iter().any(|&a| !(a > 0.0)) {
        return input("Dirichlet concentrations must be positive");
    }
    let total: f64 = alpha.iter().sum();
    let d = decomp.dim() as f64;
    let groups: f64 = decomp
        .group_sizes()
        .iter()
        .zip(alpha)
        .map(|(&size, &a)| lgamma(size as f64 + a) - lgamma(a))
        .sum();
    Ok(lgamma(total) - lgamma(d + total) + groups)
}

/// Unnormalized `log p(z | D_n; α) = log p(D_n | z) + log prior(z)`.
pub fn decomposition_log_posterior(
    data: &ObservationSet,
    decomp: &Decomposition,
    spec: &KernelSpec,
    alpha: &[f64],
) -> Result<f64> {
    let prior = log_prior(decomp, alpha)?;
    let state = GpState::fit(data, decomp, spec)?;
    Ok(state.log_marginal_likelihood() + prior)
}

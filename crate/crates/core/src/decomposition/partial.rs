//! Baselines that pick the most likely of a few random decompositions.

use rand::Rng as _;

use super::Decomposition;
use crate::error::{input, Result};
use crate::gp::{GpState, ObservationSet};
use crate::kernel::KernelSpec;
use crate::par;
use crate::rng::Rng;

/// A decomposition with every label drawn uniformly from `0..d`.
pub fn random_decomposition(d: usize, rng: &mut Rng) -> Decomposition {
    Decomposition::new((0..d).map(|_| rng.random_range(0..d)).collect()).expect("labels are in range")
}

/// Draw `num_candidates` uniform decompositions and keep the one with the
/// highest data likelihood (the first one on ties).
pub fn partial_learning(
    data: &ObservationSet,
    spec: &KernelSpec,
    num_candidates: usize,
    rng: &mut Rng,
) -> Result<Decomposition> {
    if num_candidates == 0 {
        return input("partial learning needs at least one candidate");
    }
    let candidates: Vec<Decomposition> =
        (0..num_candidates).map(|_| random_decomposition(data.dim(), rng)).collect();
    let scores = par::map(&candidates, |z| {
        GpState::fit(data, z, spec).map(|s| s.log_marginal_likelihood())
    });
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, s) in scores.into_iter().enumerate() {
        let s = s?;
        if s > best_score {
            best = i;
            best_score = s;
        }
    }
    Ok(candidates.into_iter().nth(best).expect("nonempty"))
}

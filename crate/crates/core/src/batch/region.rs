use crate::acquisition::{BetaSchedule, BoxDomain};
use crate::error::{input, Result};
use crate::gp::GpState;
use crate::rng::Rng;

/// Candidate pool of one group and the subset that may still hold the
/// group's maximizer:
///
/// ```text
/// R = { x : μ(x) + 2√β_{t+1} σ(x) ≥ max_x' (μ(x') − √β_t σ(x')) }
/// ```
#[derive(Clone, Debug)]
pub struct RelevanceRegion {
    pub group: usize,
    /// Points in the group's own coordinates.
    pub candidates: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
    /// `ucb(β_t)` of every candidate.
    pub ucb: Vec<f64>,
    /// Index of the candidate with the largest UCB (first on ties).
    pub ucb_argmax: usize,
}

impl RelevanceRegion {
    pub fn members(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&i| self.mask[i]).collect()
    }

    /// `k` or more candidate indices: the region, topped up by the
    /// highest-UCB candidates outside it when it is too small.
    pub fn selection_set(&self, k: usize) -> Result<Vec<usize>> {
        if k > self.candidates.len() {
            return input(format!("need {k} candidates but the pool has {}", self.candidates.len()));
        }
        let mut members = self.members();
        if members.len() < k {
            let mut outside: Vec<usize> = (0..self.mask.len()).filter(|&i| !self.mask[i]).collect();
            outside.sort_by(|&a, &b| self.ucb[b].total_cmp(&self.ucb[a]).then(a.cmp(&b)));
            members.extend(outside.into_iter().take(k - members.len()));
            members.sort_unstable();
        }
        Ok(members)
    }
}

/// Sample `pool_size` candidates for group `m` (the whole grid when the
/// domain is a small enough grid) and mark the relevance region.
pub fn build_relevance_region(
    state: &GpState,
    m: usize,
    domain: &BoxDomain,
    schedule: &BetaSchedule,
    t: usize,
    pool_size: usize,
    rng: &mut Rng,
) -> Result<RelevanceRegion> {
    if pool_size == 0 {
        return input("candidate pool must be nonempty");
    }
    let dims = state.group_dims(m);
    if dims.is_empty() {
        return input(format!("group {m} is empty"));
    }
    let sub = domain.sub(dims);
    let candidates = sub.grid(pool_size).unwrap_or_else(|| (0..pool_size).map(|_| sub.sample(rng)).collect());
    let refs: Vec<&[f64]> = candidates.iter().map(Vec::as_slice).collect();
    let (mu, var) = state.posterior_group_batch(m, &refs)?;
    let sd: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
    let rb_now = schedule.beta(dims.len(), t).sqrt();
    let rb_next = schedule.beta(dims.len(), t + 1).sqrt();
    let ucb: Vec<f64> = mu.iter().zip(&sd).map(|(m, s)| m + rb_now * s).collect();
    let best_lcb = mu.iter().zip(&sd).map(|(m, s)| m - rb_now * s).fold(f64::NEG_INFINITY, f64::max);
    let mut mask: Vec<bool> = mu.iter().zip(&sd).map(|(m, s)| m + 2.0 * rb_next * s >= best_lcb).collect();
    let mut ucb_argmax = 0;
    for i in 1..ucb.len() {
        if ucb[i] > ucb[ucb_argmax] {
            ucb_argmax = i;
        }
    }
    mask[ucb_argmax] = true;
    Ok(RelevanceRegion { group: m, candidates, mask, ucb, ucb_argmax })
}

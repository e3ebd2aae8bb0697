//! Collapsed Gibbs sampler over decomposition assignments.
//!
//! Each coordinate update draws `z_j` from
//!
//! ```text
//! p(z_j = m | z_¬j, D_n; α) ∝ p(D_n | z_j = m, z_¬j) · (|A_m \ {j}| + α_m) = e^{φ_m}
//! ```
//!
//! with `φ_m = log p(D_n | z_j = m, z_¬j) + log(|A_m \ {j}| + α_m)`, sampled via
//! the Gumbel-max trick. Every empty slot yields the same Gram matrix (j on
//! its own), so only `#nonempty + 1` factorizations are needed per update.

use faer::Mat;
use rand::SeedableRng;
use rand_distr::{Distribution, Gumbel};
use serde::{Deserialize, Serialize};

use super::Decomposition;
use crate::error::{input, Error, Result};
use crate::gp::ObservationSet;
use crate::kernel::{DistanceCache, GroupGrams, KernelSpec};
use crate::linalg::{log_likelihood, Factor};
use crate::par;
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GibbsConfig {
    /// Dirichlet concentrations: one entry (shared by all slots) or one per slot.
    pub alpha: Vec<f64>,
    pub burn_in: usize,
    /// Total sweeps including burn-in.
    pub total_iters: usize,
    /// Largest allowed group (Gibbs-L); `None` for no limit.
    pub max_group_size: Option<usize>,
    pub seed: u64,
}

impl Default for GibbsConfig {
    /// α = 1, 50 burn-in sweeps out of 100.
    fn default() -> Self {
        Self { alpha: vec![1.0], burn_in: 50, total_iters: 100, max_group_size: None, seed: 0 }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.total_iters <= self.burn_in {
            return Err(Error::Config(format!(
                "total_iters ({}) must exceed burn_in ({})",
                self.total_iters, self.burn_in
            )));
        }
        if self.alpha.is_empty() || self.alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::Config("alpha entries must be positive".into()));
        }
        if self.max_group_size == Some(0) {
            return Err(Error::Config("max_group_size must be at least 1".into()));
        }
        Ok(())
    }

    /// Concentrations expanded to `slots` entries.
    pub fn alpha_for(&self, slots: usize) -> Result<Vec<f64>> {
        match self.alpha.len() {
            1 => Ok(vec![self.alpha[0]; slots]),
            len if len == slots => Ok(self.alpha.clone()),
            len => Err(Error::Config(format!("alpha has {len} entries, expected 1 or {slots}"))),
        }
    }

    pub fn recorded_samples(&self) -> usize {
        self.total_iters.saturating_sub(self.burn_in)
    }
}

/// `argmax_i (φ_i + ω_i)` with `ω_i` i.i.d. standard Gumbel; distributed as
/// `softmax(φ)`. Entries equal to `−∞` are never chosen.
pub fn gumbel_argmax(phi: &[f64], rng: &mut Rng) -> Result<usize> {
    let gumbel = Gumbel::new(0.0, 1.0).expect("standard Gumbel");
    let mut best: Option<(usize, f64)> = None;
    for (i, &p) in phi.iter().enumerate() {
        let w: f64 = gumbel.sample(rng);
        if p.is_nan() {
            return input("log-weight is NaN");
        }
        if p == f64::NEG_INFINITY {
            continue;
        }
        let v = p + w;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i).ok_or_else(|| Error::Input("all log-weights are -inf".into()))
}

enum Candidate {
    Join(usize),
    Alone,
}

/// Sampler state: the current assignment with its cached group Grams, total
/// Gram matrix, and log marginal likelihood.
pub struct GibbsSampler {
    spec: KernelSpec,
    values: Vec<f64>,
    alpha: Vec<f64>,
    max_group_size: Option<usize>,
    cache: DistanceCache,
    grams: GroupGrams,
    total: Mat<f64>,
    decomp: Decomposition,
    log_lik: f64,
    jitter_events: usize,
}

impl GibbsSampler {
    pub fn new(
        data: &ObservationSet,
        spec: &KernelSpec,
        alpha: &[f64],
        max_group_size: Option<usize>,
        init: Decomposition,
    ) -> Result<Self> {
        spec.validate()?;
        if data.is_empty() {
            return input("Gibbs sampling needs data");
        }
        if init.dim() != data.dim() {
            return input("initial decomposition does not match the data dimension");
        }
        if alpha.len() != init.slots() || alpha.iter().any(|&a| !(a > 0.0)) {
            return input("alpha must hold one positive entry per slot");
        }
        if max_group_size == Some(0) {
            return Err(Error::Config("max_group_size must be at least 1".into()));
        }
        let cache = DistanceCache::new(data, spec);
        let grams = GroupGrams::build(&cache, &init, spec);
        let total = grams.total(data.len());
        let factor = Factor::new(total.as_ref(), spec.noise_var())?;
        let jitter_events = usize::from(factor.jitter() > 0.0);
        let log_lik = log_likelihood(&factor, data.values());
        Ok(Self {
            spec: *spec,
            values: data.values().to_vec(),
            alpha: alpha.to_vec(),
            max_group_size,
            cache,
            grams,
            total,
            decomp: init,
            log_lik,
            jitter_events,
        })
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomp
    }

    /// `log p(D_n | z)` of the current assignment.
    pub fn log_likelihood(&self) -> f64 {
        self.log_lik
    }

    /// Number of factorizations that needed diagonal jitter so far.
    pub fn jitter_events(&self) -> usize {
        self.jitter_events
    }

    fn lower_exp(&self, sums: &Mat<f64>, scale: f64) -> Mat<f64> {
        let n = sums.nrows();
        let mut out = Mat::<f64>::zeros(n, n);
        for c in 0..n {
            let src = &sums.col_as_slice(c)[c..];
            for (o, s) in out.col_as_slice_mut(c)[c..].iter_mut().zip(src) {
                *o = scale * (-s).exp();
            }
        }
        out
    }

    /// Log-likelihood of every distinct reassignment of `j`, indexed by slot.
    fn candidate_log_liks(&self, j: usize) -> Result<(Vec<f64>, usize)> {
        let n = self.values.len();
        let slots = self.decomp.slots();
        let from = self.decomp.label(j);
        let rest: Vec<usize> = self.grams.members(from).iter().copied().filter(|&i| i != j).collect();
        let sizes = self.decomp.group_sizes();
        let allowed = |m: usize| {
            let without_j = sizes[m] - usize::from(m == from);
            self.max_group_size.is_none_or(|s| without_j < s)
        };

        let mut tasks = Vec::new();
        for (m, &size) in sizes.iter().enumerate() {
            if m != from && size > 0 && allowed(m) {
                tasks.push(Candidate::Join(m));
            }
        }
        let has_empty = sizes.contains(&0);
        if !rest.is_empty() && has_empty {
            tasks.push(Candidate::Alone);
        }

        // Shared pieces, lower triangles only: e^{-C_j}, and K with group
        // `from` replaced by `from` minus j.
        let e_j = self.lower_exp(&self.cache.summed(&[j]), 1.0);
        let mut base = self.total.clone();
        let g_from = self.grams.gram(from).expect("j's group is nonempty");
        let g_rest = (!rest.is_empty()).then(|| self.lower_exp(&self.cache.summed(&rest), self.spec.scale));
        for c in 0..n {
            for r in c..n {
                base[(r, c)] -= g_from[(r, c)];
                if let Some(g) = &g_rest {
                    base[(r, c)] += g[(r, c)];
                }
            }
        }

        let scale = self.spec.scale;
        let results = par::map(&tasks, |task| -> Result<(f64, bool)> {
            let mut k = base.clone();
            match task {
                Candidate::Join(m) => {
                    let g = self.grams.gram(*m).expect("nonempty");
                    for c in 0..n {
                        for r in c..n {
                            k[(r, c)] += g[(r, c)] * (e_j[(r, c)] - 1.0);
                        }
                    }
                }
                Candidate::Alone => {
                    for c in 0..n {
                        for r in c..n {
                            k[(r, c)] += scale * e_j[(r, c)];
                        }
                    }
                }
            }
            let factor = Factor::new(k.as_ref(), self.spec.noise_var())?;
            Ok((log_likelihood(&factor, &self.values), factor.jitter() > 0.0))
        });

        let mut log_liks = vec![f64::NEG_INFINITY; slots];
        let mut jitter = 0;
        let mut alone = None;
        for (task, res) in tasks.iter().zip(results) {
            let (ll, jittered) = res?;
            jitter += usize::from(jittered);
            match task {
                Candidate::Join(m) => log_liks[*m] = ll,
                Candidate::Alone => alone = Some(ll),
            }
        }
        for m in 0..slots {
            if m == from {
                if allowed(m) {
                    log_liks[m] = self.log_lik;
                }
            } else if sizes[m] == 0 {
                // j alone; identical to staying when j is already alone.
                log_liks[m] = if rest.is_empty() { self.log_lik } else { alone.unwrap_or(f64::NEG_INFINITY) };
            }
        }
        Ok((log_liks, jitter))
    }

    /// The unnormalized log conditional `φ` over all slots for dimension `j`.
    pub fn conditional(&self, j: usize) -> Result<Vec<f64>> {
        Ok(self.phi(j)?.0)
    }

    fn phi(&self, j: usize) -> Result<(Vec<f64>, Vec<f64>, usize)> {
        if j >= self.decomp.dim() {
            return input(format!("dimension {j} out of range"));
        }
        let (log_liks, jitter) = self.candidate_log_liks(j)?;
        let from = self.decomp.label(j);
        let sizes = self.decomp.group_sizes();
        let phi: Vec<f64> = log_liks
            .iter()
            .enumerate()
            .map(|(m, &ll)| {
                let others = (sizes[m] - usize::from(m == from)) as f64;
                ll + (others + self.alpha[m]).ln()
            })
            .collect();
        if phi.iter().all(|&p| p == f64::NEG_INFINITY) {
            return Err(Error::Config(format!("no admissible group for dimension {j}")));
        }
        Ok((phi, log_liks, jitter))
    }

    /// Resample the assignment of dimension `j`.
    pub fn update(&mut self, j: usize, rng: &mut Rng) -> Result<()> {
        let (phi, log_liks, jitter) = self.phi(j)?;
        self.jitter_events += jitter;
        let to = gumbel_argmax(&phi, rng)?;
        let from = self.decomp.label(j);
        if to != from {
            self.grams.move_dimension(&self.cache, j, from, to)?;
            self.decomp.set(j, to);
            self.total = self.grams.total(self.values.len());
            self.log_lik = log_liks[to];
        }
        Ok(())
    }

    /// One pass over all dimensions in ascending order.
    pub fn sweep(&mut self, rng: &mut Rng) -> Result<()> {
        for j in 0..self.decomp.dim() {
            self.update(j, rng)?;
        }
        Ok(())
    }
}

/// `φ` for dimension `j` under `decomp` (see [`GibbsSampler::conditional`]).
pub fn gibbs_conditional(
    data: &ObservationSet,
    decomp: &Decomposition,
    spec: &KernelSpec,
    alpha: &[f64],
    max_group_size: Option<usize>,
    j: usize,
) -> Result<Vec<f64>> {
    GibbsSampler::new(data, spec, alpha, max_group_size, decomp.clone())?.conditional(j)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GibbsOutput {
    /// One assignment per post-burn-in sweep.
    pub samples: Vec<Decomposition>,
    /// `log p(D_n | z)` of each recorded sample.
    pub log_likelihoods: Vec<f64>,
    /// The recorded sample with the highest data likelihood.
    pub best: Decomposition,
    pub best_log_likelihood: f64,
    pub jitter_events: usize,
}

/// Run `total_iters` sweeps from `init`, record every post-burn-in state, and
/// return the recorded state with the highest data likelihood.
pub fn gibbs_sample(
    data: &ObservationSet,
    spec: &KernelSpec,
    config: &GibbsConfig,
    init: Decomposition,
) -> Result<GibbsOutput> {
    config.validate()?;
    let alpha = config.alpha_for(init.slots())?;
    let mut sampler = GibbsSampler::new(data, spec, &alpha, config.max_group_size, init)?;
    let mut rng = Rng::seed_from_u64(config.seed);
    let mut samples = Vec::with_capacity(config.recorded_samples());
    let mut log_likelihoods = Vec::with_capacity(config.recorded_samples());
    for it in 0..config.total_iters {
        sampler.sweep(&mut rng)?;
        if it >= config.burn_in {
            samples.push(sampler.decomposition().clone());
            log_likelihoods.push(sampler.log_likelihood());
        }
    }
    // First maximum wins ties.
    let (best_idx, &best_log_likelihood) = log_likelihoods
        .iter()
        .enumerate()
        .fold(None, |acc: Option<(usize, &f64)>, (i, v)| match acc {
            Some((_, b)) if *b >= *v => acc,
            _ => Some((i, v)),
        })
        .expect("at least one recorded sample");
    log::debug!(
        "gibbs: {} sweeps, best log-likelihood {best_log_likelihood:.4}, {} groups",
        config.total_iters,
        samples[best_idx].num_nonempty()
    );
    Ok(GibbsOutput {
        best: samples[best_idx].clone(),
        samples,
        log_likelihoods,
        best_log_likelihood,
        jitter_events: sampler.jitter_events(),
    })
}

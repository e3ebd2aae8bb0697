use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{build_relevance_region, combine_quality, combine_random, kdpp_sample, pe_greedy_select, GroupSelection};
use crate::acquisition::{select_sequential_point, BetaSchedule, BoxDomain};
use crate::decomposition::GibbsConfig;
use crate::error::{input, Error, Result};
use crate::experiment::{Objective, Recorder, RunConfig, RunKind, RunRecord};
use crate::gp::GpState;
use crate::kernel::KernelSpec;
use crate::rng::{substream, tag};

/// How the `B − 1` points after the UCB point are chosen within each group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Explorer {
    /// Exact k-DPP sample over the relevance region.
    Dpp,
    /// Greedy pure exploration over the relevance region.
    Pe,
    /// Every batch point uniformly at random; no model is used.
    Rand,
}

/// How per-group picks are assembled into full points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Combiner {
    Random,
    /// Greedy by per-group UCB.
    Quality,
}

impl FromStr for Explorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dpp" => Ok(Explorer::Dpp),
            "pe" => Ok(Explorer::Pe),
            "rand" => Ok(Explorer::Rand),
            _ => Err(Error::Config(format!("unknown explorer '{s}'"))),
        }
    }
}

impl FromStr for Combiner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Combiner::Random),
            "quality" => Ok(Combiner::Quality),
            _ => Err(Error::Config(format!("unknown combiner '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatchConfig {
    pub batch_size: usize,
    pub explorer: Explorer,
    pub combiner: Combiner,
    /// Candidates per group for the relevance region on continuous domains.
    pub pool_size: usize,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self { batch_size: 10, explorer: Explorer::Dpp, combiner: Combiner::Random, pool_size: 512 }
    }
}

impl BatchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::Config("batch size must be at least 2".into()));
        }
        if self.explorer != Explorer::Rand && self.pool_size < self.batch_size - 1 {
            return Err(Error::Config(format!(
                "pool size {} is smaller than the {} points needed per group",
                self.pool_size,
                self.batch_size - 1
            )));
        }
        Ok(())
    }

    /// Method label such as `batch-ucb-dpp-fnc` or `rand`.
    pub fn method_name(&self) -> String {
        match (self.explorer, self.combiner) {
            (Explorer::Rand, _) => "rand".into(),
            (e, c) => {
                let e = if e == Explorer::Dpp { "dpp" } else { "pe" };
                let suffix = if c == Combiner::Quality { "-fnc" } else { "" };
                format!("batch-ucb-{e}{suffix}")
            }
        }
    }
}

impl fmt::Display for BatchConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.method_name())
    }
}

/// Diagonal jitter added to a k-DPP kernel whose numerical rank is too low.
const DPP_JITTER: f64 = 1e-8;

#[allow(clippy::too_many_arguments)]
fn diverse_points(
    state: &GpState,
    explore_state: &GpState,
    m: usize,
    domain: &BoxDomain,
    schedule: &BetaSchedule,
    config: &BatchConfig,
    t: usize,
    seed: u64,
) -> Result<(GroupSelection, Vec<f64>)> {
    let k = config.batch_size - 1;
    let mut rng = substream(seed, &[tag::REGION, t as u64, m as u64]);
    let region = build_relevance_region(state, m, domain, schedule, t, config.pool_size, &mut rng)?;
    let members = region.selection_set(k)?;
    let points: Vec<&[f64]> = members.iter().map(|&i| region.candidates[i].as_slice()).collect();
    let cov = explore_state.posterior_group_covariance(m, &points)?;
    let picks = match config.explorer {
        Explorer::Pe => pe_greedy_select(cov.as_ref(), k)?,
        Explorer::Dpp => {
            let mut rng = substream(seed, &[tag::EXPLORE, t as u64, m as u64]);
            match kdpp_sample(cov.as_ref(), k, &mut rng) {
                Err(Error::Numerical { msg, .. }) => {
                    log::debug!("round {t}, group {m}: {msg}; retrying with jitter {DPP_JITTER:e}");
                    let mut jittered = cov.clone();
                    for i in 0..jittered.nrows() {
                        jittered[(i, i)] += DPP_JITTER * (1.0 + cov[(i, i)]);
                    }
                    kdpp_sample(jittered.as_ref(), k, &mut rng)?
                }
                other => other?,
            }
        }
        Explorer::Rand => unreachable!("random batches skip exploration"),
    };
    let chosen: Vec<Vec<f64>> = picks.iter().map(|&p| points[p].to_vec()).collect();
    let scores = picks.iter().map(|&p| region.ucb[members[p]]).collect();
    Ok((GroupSelection { dims: state.group_dims(m).to_vec(), points: chosen }, scores))
}

/// Batch BO: each round queries the sequential UCB point plus `B − 1` diverse
/// points, and scores the round by its best true value. The decomposition is
/// learned before the first round and relearned whenever `t mod N_cyc = 0`.
pub fn run_batch_bo(
    objective: &dyn Objective,
    domain: &BoxDomain,
    config: &BatchConfig,
    run: &RunConfig,
    gibbs: &GibbsConfig,
    spec: &KernelSpec,
    schedule: &BetaSchedule,
) -> Result<RunRecord> {
    config.validate()?;
    run.validate()?;
    spec.validate()?;
    schedule.validate()?;
    domain.validate()?;
    let uses_model = config.explorer != Explorer::Rand;
    let learns = uses_model && run.variant.learns();
    if learns {
        gibbs.validate()?;
    }
    if domain.dim() != objective.dim() {
        return input("domain and objective dimensions differ");
    }
    let d = domain.dim();
    let echo = json!({ "batch": config, "run": run, "gibbs": gibbs, "kernel": spec, "beta": schedule, "domain": domain });
    let method = if uses_model && run.variant != crate::experiment::Variant::Gibbs {
        format!("{}-{}", config.method_name(), run.variant)
    } else {
        config.method_name()
    };
    let mut rec = Recorder::new(objective, RunKind::Batch, method, echo, spec.noise_sigma, run.seed)?;
    let mut decomp = crate::experiment::sequential::initial_decomposition(run.variant, objective)?;
    let outcome = (|| -> Result<()> {
        rec.initialize(domain, run.n_init, run.seed)?;
        for t in 1..=run.rounds {
            let batch = if uses_model {
                if learns && (t == 1 || t % run.n_cyc == 0) && !rec.data().is_empty() {
                    decomp = crate::experiment::sequential::learn(run.variant, rec.data(), &decomp, gibbs, spec, run.seed, t)?;
                    rec.record.learn_calls += 1;
                }
                rec.set_decomposition(t, &decomp);
                let state = if rec.data().is_empty() {
                    GpState::prior(d, &decomp, spec)?
                } else {
                    GpState::fit(rec.data(), &decomp, spec)?
                };
                let x0 = select_sequential_point(&state, domain, schedule, t, &run.optimizer, run.seed)?;
                let explore_state = state.with_fantasies(std::slice::from_ref(&x0))?;
                let groups = state.nonempty_groups();
                let per_group = crate::par::map(&groups, |&m| {
                    diverse_points(&state, &explore_state, m, domain, schedule, config, t, run.seed)
                });
                let mut selections = Vec::with_capacity(groups.len());
                let mut scores = Vec::with_capacity(groups.len());
                for r in per_group {
                    let (s, q) = r?;
                    selections.push(s);
                    scores.push(q);
                }
                let rest = match config.combiner {
                    Combiner::Random => {
                        combine_random(&selections, d, &mut substream(run.seed, &[tag::COMBINE, t as u64]))?
                    }
                    Combiner::Quality => combine_quality(&selections, &scores, d)?,
                };
                std::iter::once(x0).chain(rest).collect()
            } else {
                let mut rng = substream(run.seed, &[tag::FILL, t as u64]);
                (0..config.batch_size).map(|_| domain.sample(&mut rng)).collect()
            };
            let values = rec.observe(batch, t)?;
            rec.push_regret(values.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        }
        Ok(())
    })();
    rec.finish(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::OptimizerConfig;
    use crate::experiment::{generate_synthetic, Variant};

    fn run(variant: Variant) -> RunConfig {
        RunConfig {
            rounds: 4,
            n_init: 3,
            n_cyc: 2,
            seed: 1,
            variant,
            optimizer: OptimizerConfig { budget: 100, ..Default::default() },
        }
    }

    #[test]
    fn every_strategy_observes_b_per_round() {
        let spec = KernelSpec::default();
        let f = generate_synthetic(4, 2, &spec, 64).unwrap();
        let gibbs = GibbsConfig { burn_in: 1, total_iters: 3, ..Default::default() };
        for explorer in [Explorer::Dpp, Explorer::Pe, Explorer::Rand] {
            for combiner in [Combiner::Random, Combiner::Quality] {
                let cfg = BatchConfig { batch_size: 4, explorer, combiner, pool_size: 32 };
                let r = run_batch_bo(&f, f.domain(), &cfg, &run(Variant::Gibbs), &gibbs, &spec, &BetaSchedule::standard()).unwrap();
                assert_eq!(r.observations.len(), 3 + 4 * 4);
                assert_eq!(r.trace.len(), 4);
                assert!(r.observations.points().iter().all(|x| f.domain().contains(x)));
                let expected_learns = if explorer == Explorer::Rand { 0 } else { 3 };
                assert_eq!(r.learn_calls, expected_learns, "{cfg}");
            }
        }
    }

    #[test]
    fn batches_are_reproducible_and_distinct() {
        let spec = KernelSpec::default();
        let f = generate_synthetic(3, 4, &spec, 64).unwrap();
        let gibbs = GibbsConfig::default();
        let cfg = BatchConfig { batch_size: 5, explorer: Explorer::Dpp, combiner: Combiner::Quality, pool_size: 64 };
        let a = run_batch_bo(&f, f.domain(), &cfg, &run(Variant::Known), &gibbs, &spec, &BetaSchedule::standard()).unwrap();
        let b = run_batch_bo(&f, f.domain(), &cfg, &run(Variant::Known), &gibbs, &spec, &BetaSchedule::standard()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.learn_calls, 0);
        let pts = a.observations.points();
        for i in 0..pts.len() {
            for j in 0..i {
                assert_ne!(pts[i], pts[j]);
            }
        }
    }

    #[test]
    fn config_validation_and_names() {
        assert!(BatchConfig { batch_size: 1, ..Default::default() }.validate().is_err());
        assert!(BatchConfig { pool_size: 3, ..Default::default() }.validate().is_err());
        let c = BatchConfig { explorer: Explorer::Pe, combiner: Combiner::Quality, ..Default::default() };
        assert_eq!(c.method_name(), "batch-ucb-pe-fnc");
        assert_eq!(BatchConfig { explorer: Explorer::Rand, ..Default::default() }.method_name(), "rand");
    }
}

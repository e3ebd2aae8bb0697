use serde_json::json;

use super::{Objective, Recorder, RunConfig, RunKind, RunRecord, Variant};
use crate::acquisition::{select_sequential_point, BetaSchedule, BoxDomain};
use crate::decomposition::{gibbs_sample, partial_learning, Decomposition, GibbsConfig};
use crate::error::{input, Result};
use crate::gp::{GpState, ObservationSet};
use crate::kernel::KernelSpec;
use crate::rng::{derive_seed, substream, tag};

/// Group-size cap for [`Variant::GibbsL`] when none is configured.
pub(crate) const DEFAULT_GROUP_LIMIT: usize = 2;

/// The decomposition a variant starts from, before any learning.
pub(crate) fn initial_decomposition(variant: Variant, objective: &dyn Objective) -> Result<Decomposition> {
    let d = objective.dim();
    match variant {
        Variant::Known => match objective.true_decomposition() {
            Some(z) => Ok(z.clone()),
            None => input("the known-structure variant needs an objective with a known decomposition"),
        },
        Variant::Np => Ok(Decomposition::single_group(d)),
        _ => Ok(Decomposition::fully_partitioned(d)),
    }
}

/// Learn a decomposition from `data` as `variant` prescribes. Gibbs chains
/// start from `current`.
pub(crate) fn learn(
    variant: Variant,
    data: &ObservationSet,
    current: &Decomposition,
    gibbs: &GibbsConfig,
    spec: &KernelSpec,
    seed: u64,
    t: usize,
) -> Result<Decomposition> {
    let stream = [tag::LEARN, t as u64];
    match variant {
        Variant::Gibbs | Variant::GibbsL => {
            let mut cfg = gibbs.clone();
            cfg.seed = derive_seed(seed, &stream);
            if variant == Variant::GibbsL {
                cfg.max_group_size = cfg.max_group_size.or(Some(DEFAULT_GROUP_LIMIT));
            }
            let mut init = current.clone();
            if cfg.max_group_size.is_some_and(|s| init.max_group_size() > s) {
                init = Decomposition::fully_partitioned(init.dim());
            }
            Ok(gibbs_sample(data, spec, &cfg, init)?.best)
        }
        Variant::Pl1 | Variant::Pl2 => {
            let candidates = if variant == Variant::Pl1 { gibbs.recorded_samples() } else { 5 };
            partial_learning(data, spec, candidates, &mut substream(seed, &stream))
        }
        Variant::Known | Variant::Np | Variant::Fp => Ok(current.clone()),
    }
}

/// Sequential additive GP-UCB: one query per round, relearning the
/// decomposition at rounds `1, N_cyc + 1, 2 N_cyc + 1, …`.
pub fn run_sequential_bo(
    objective: &dyn Objective,
    domain: &BoxDomain,
    run: &RunConfig,
    gibbs: &GibbsConfig,
    spec: &KernelSpec,
    schedule: &BetaSchedule,
) -> Result<RunRecord> {
    run.validate()?;
    spec.validate()?;
    schedule.validate()?;
    domain.validate()?;
    if run.variant.learns() {
        gibbs.validate()?;
    }
    if domain.dim() != objective.dim() {
        return input("domain and objective dimensions differ");
    }
    let config = json!({
        "run": run,
        "gibbs": gibbs,
        "kernel": spec,
        "beta": schedule,
        "domain": domain,
    });
    let mut rec = Recorder::new(objective, RunKind::Sequential, run.variant.name().into(), config, spec.noise_sigma, run.seed)?;
    let mut decomp = initial_decomposition(run.variant, objective)?;
    let outcome = (|| -> Result<()> {
        rec.initialize(domain, run.n_init, run.seed)?;
        for t in 1..=run.rounds {
            if run.variant.learns() && (t - 1) % run.n_cyc == 0 && !rec.data().is_empty() {
                decomp = learn(run.variant, rec.data(), &decomp, gibbs, spec, run.seed, t)?;
                rec.record.learn_calls += 1;
            }
            rec.set_decomposition(t, &decomp);
            let state = if rec.data().is_empty() {
                GpState::prior(domain.dim(), &decomp, spec)?
            } else {
                GpState::fit(rec.data(), &decomp, spec)?
            };
            let x = select_sequential_point(&state, domain, schedule, t, &run.optimizer, run.seed)?;
            let f = rec.observe(vec![x], t)?;
            rec.push_regret(f[0]);
        }
        Ok(())
    })();
    rec.finish(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::OptimizerConfig;
    use crate::error::Error;
    use crate::experiment::generate_synthetic;

    fn quick(variant: Variant, seed: u64) -> RunConfig {
        RunConfig {
            rounds: 6,
            n_init: 3,
            n_cyc: 2,
            seed,
            variant,
            optimizer: OptimizerConfig { budget: 200, ..Default::default() },
        }
    }

    fn gibbs() -> GibbsConfig {
        GibbsConfig { burn_in: 2, total_iters: 4, ..Default::default() }
    }

    #[test]
    fn bookkeeping_and_learning_schedule() {
        let spec = KernelSpec::default();
        let f = generate_synthetic(4, 1, &spec, 64).unwrap();
        for v in Variant::ALL {
            let r = run_sequential_bo(&f, f.domain(), &quick(v, 2), &gibbs(), &spec, &BetaSchedule::standard()).unwrap();
            assert_eq!(r.observations.len(), 3 + 6);
            assert_eq!(r.trace.len(), 6);
            assert_eq!(r.learn_calls, if v.learns() { 3 } else { 0 }, "{v}");
            assert!(r.trace.simple.windows(2).all(|w| w[1] <= w[0]));
            assert!(!r.truncated);
            if v == Variant::Known {
                assert_eq!(&r.decompositions[0].decomposition, f.truth());
            }
            if v == Variant::GibbsL {
                assert!(r.decompositions.iter().all(|e| e.decomposition.max_group_size() <= 2));
            }
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let spec = KernelSpec::default();
        let f = generate_synthetic(3, 4, &spec, 64).unwrap();
        let a = run_sequential_bo(&f, f.domain(), &quick(Variant::Gibbs, 5), &gibbs(), &spec, &BetaSchedule::standard()).unwrap();
        let b = run_sequential_bo(&f, f.domain(), &quick(Variant::Gibbs, 5), &gibbs(), &spec, &BetaSchedule::standard()).unwrap();
        assert_eq!(a, b);
    }

    struct Failing;

    impl Objective for Failing {
        fn dim(&self) -> usize {
            2
        }
        fn evaluate(&self, x: &[f64]) -> Result<f64> {
            if x[0] > 0.0 && self.known_max() > 0.0 {
                Err(Error::Objective("simulator crashed".into()))
            } else {
                Ok(0.0)
            }
        }
        fn known_max(&self) -> f64 {
            1.0
        }
    }

    #[test]
    fn objective_failure_truncates() {
        let spec = KernelSpec::default();
        let r = run_sequential_bo(&Failing, &BoxDomain::unit(2), &quick(Variant::Fp, 1), &gibbs(), &spec, &BetaSchedule::standard())
            .unwrap();
        assert!(r.truncated);
        assert_eq!(r.error.as_deref(), Some("simulator crashed"));
        assert!(r.trace.is_empty());
    }

    #[test]
    fn known_needs_a_structure() {
        let spec = KernelSpec::default();
        let res = run_sequential_bo(&Failing, &BoxDomain::unit(2), &quick(Variant::Known, 1), &gibbs(), &spec, &BetaSchedule::standard());
        assert!(res.is_err());
    }
}

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Objective, RegretTrace};
use crate::acquisition::{BoxDomain, OptimizerConfig};
use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::gp::ObservationSet;
use crate::rng::{substream, tag, Rng};

/// How the decomposition used by the GP is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// The objective's true decomposition, fixed.
    Known,
    /// No partition: one group with every dimension.
    Np,
    /// Fully partitioned: one group per dimension.
    Fp,
    /// Best of as many random decompositions as Gibbs records.
    Pl1,
    /// Best of 5 random decompositions.
    Pl2,
    Gibbs,
    /// Gibbs with a cap on group size (2 unless configured).
    GibbsL,
}

impl Variant {
    pub const ALL: [Variant; 7] =
        [Variant::Known, Variant::Np, Variant::Fp, Variant::Pl1, Variant::Pl2, Variant::Gibbs, Variant::GibbsL];

    pub fn learns(self) -> bool {
        matches!(self, Variant::Pl1 | Variant::Pl2 | Variant::Gibbs | Variant::GibbsL)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Known => "known",
            Variant::Np => "np",
            Variant::Fp => "fp",
            Variant::Pl1 => "pl1",
            Variant::Pl2 => "pl2",
            Variant::Gibbs => "gibbs",
            Variant::GibbsL => "gibbs-l",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant '{s}'")))
    }
}

/// Settings shared by the sequential and batch drivers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Rounds `T`.
    pub rounds: usize,
    /// Uniform random observations before the first round.
    pub n_init: usize,
    /// Relearn period, in rounds.
    pub n_cyc: usize,
    pub seed: u64,
    pub variant: Variant,
    pub optimizer: OptimizerConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rounds: 100,
            n_init: 10,
            n_cyc: 50,
            seed: 0,
            variant: Variant::Gibbs,
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be at least 1".into()));
        }
        if self.n_cyc == 0 {
            return Err(Error::Config("n_cyc must be at least 1".into()));
        }
        self.optimizer.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Sequential,
    Batch,
}

/// The decomposition in use from round `t` on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionEvent {
    pub t: usize,
    pub decomposition: Decomposition,
}

/// Everything a run produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub kind: RunKind,
    /// Method label, e.g. `gibbs` or `batch-ucb-dpp-fnc`.
    pub method: String,
    /// Echo of the settings that produced the run.
    pub config: serde_json::Value,
    pub known_max: f64,
    pub decompositions: Vec<DecompositionEvent>,
    /// Inputs and noisy observed values, initial points first.
    pub observations: ObservationSet,
    /// Noise-free objective values of the observations.
    pub objective_values: Vec<f64>,
    /// Round of each observation (0 for initial points).
    pub rounds: Vec<usize>,
    pub trace: RegretTrace,
    /// Number of decomposition-learning calls made.
    pub learn_calls: usize,
    /// Set when the run stopped early; `error` says why.
    pub truncated: bool,
    pub error: Option<String>,
}

/// Shared bookkeeping for drivers: observing with noise, regret, history.
pub(crate) struct Recorder<'a> {
    objective: &'a dyn Objective,
    noise: Normal<f64>,
    noise_rng: Rng,
    pub record: RunRecord,
}

impl<'a> Recorder<'a> {
    pub fn new(
        objective: &'a dyn Objective,
        kind: RunKind,
        method: String,
        config: serde_json::Value,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self> {
        let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::Config(format!("noise: {e}")))?;
        Ok(Self {
            objective,
            noise,
            noise_rng: substream(seed, &[tag::NOISE]),
            record: RunRecord {
                schema_version: super::SCHEMA_VERSION,
                kind,
                method,
                config,
                known_max: objective.known_max(),
                decompositions: Vec::new(),
                observations: ObservationSet::empty(objective.dim()),
                objective_values: Vec::new(),
                rounds: Vec::new(),
                trace: RegretTrace::new(),
                learn_calls: 0,
                truncated: false,
                error: None,
            },
        })
    }

    pub fn data(&self) -> &ObservationSet {
        &self.record.observations
    }

    /// Evaluate and store `points`; returns their noise-free values.
    pub fn observe(&mut self, points: Vec<Vec<f64>>, round: usize) -> Result<Vec<f64>> {
        let mut values = Vec::with_capacity(points.len());
        for x in points {
            let f = self.objective.evaluate(&x)?;
            if !f.is_finite() {
                return Err(Error::Objective(format!("objective returned {f}")));
            }
            let y = f + self.noise.sample(&mut self.noise_rng);
            self.record.observations.push(x, y)?;
            self.record.objective_values.push(f);
            self.record.rounds.push(round);
            values.push(f);
        }
        Ok(values)
    }

    /// Evaluate `n_init` uniform points.
    pub fn initialize(&mut self, domain: &BoxDomain, n_init: usize, seed: u64) -> Result<()> {
        let mut rng = substream(seed, &[tag::INIT]);
        let points = (0..n_init).map(|_| domain.sample(&mut rng)).collect();
        self.observe(points, 0).map(|_| ())
    }

    /// Regret of a round whose best noise-free value was `best`.
    pub fn push_regret(&mut self, best: f64) {
        self.record.trace.push(self.record.known_max - best);
    }

    pub fn set_decomposition(&mut self, t: usize, decomposition: &Decomposition) {
        if self.record.decompositions.last().is_none_or(|e| &e.decomposition != decomposition) {
            self.record.decompositions.push(DecompositionEvent { t, decomposition: decomposition.clone() });
        }
    }

    /// Close the record; objective failures become a truncated record, any
    /// other error is returned.
    pub fn finish(mut self, outcome: Result<()>) -> Result<RunRecord> {
        match outcome {
            Ok(()) => Ok(self.record),
            Err(Error::Objective(msg)) => {
                log::warn!("run stopped after {} rounds: {msg}", self.record.trace.len());
                self.record.truncated = true;
                self.record.error = Some(msg);
                Ok(self.record)
            }
            Err(e) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
            let json = serde_json::to_string(&v).unwrap();
            assert_eq!(json, format!("\"{}\"", v.name()));
        }
        assert!("pl3".parse::<Variant>().is_err());
    }

    #[test]
    fn config_rejects_zero_periods() {
        assert!(RunConfig { rounds: 0, ..Default::default() }.validate().is_err());
        assert!(RunConfig { n_cyc: 0, ..Default::default() }.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }
}

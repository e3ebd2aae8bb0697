use std::collections::BTreeSet;
use std::path::Path;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{generate_synthetic, DEFAULT_FEATURES};
use crate::acquisition::BoxDomain;
use crate::decomposition::{gibbs_sample, grouped_together_rate, rand_index, separated_rate, Decomposition, GibbsConfig};
use crate::error::{input, Error, Result};
use crate::gp::ObservationSet;
use crate::kernel::KernelSpec;
use crate::rng::{derive_seed, substream, tag};

/// Mean and sample standard deviation over the trials where a metric is defined.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub count: usize,
}

impl MetricSummary {
    pub fn from_values(values: &[f64]) -> Self {
        let count = values.len();
        if count == 0 {
            return Self::default();
        }
        let mean = values.iter().sum::<f64>() / count as f64;
        let sd = if count > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean: Some(mean), sd: Some(sd), count }
    }

    /// `"mean ± sd"` with two decimals, or `n/a`.
    pub fn cell(&self) -> String {
        match (self.mean, self.sd) {
            (Some(m), Some(s)) => format!("{m:.2} ± {s:.2}"),
            _ => "n/a".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverySummary {
    pub d: usize,
    pub n: usize,
    pub trials: usize,
    pub together: MetricSummary,
    pub separated: MetricSummary,
    pub rand_index: MetricSummary,
}

struct TrialMetrics {
    together: Option<f64>,
    separated: Option<f64>,
    rand_index: f64,
}

fn mean_over(samples: &[Decomposition], truth: &Decomposition, metric: fn(&Decomposition, &Decomposition) -> Result<Option<f64>>) -> Result<Option<f64>> {
    let mut values = Vec::with_capacity(samples.len());
    for z in samples {
        match metric(z, truth)? {
            Some(v) => values.push(v),
            None => return Ok(None),
        }
    }
    Ok(Some(values.iter().sum::<f64>() / values.len() as f64))
}

fn trial(d: usize, n: usize, gibbs: &GibbsConfig, spec: &KernelSpec, seed: u64, i: usize) -> Result<TrialMetrics> {
    let trial_seed = derive_seed(seed, &[tag::TRIAL, i as u64]);
    let f = generate_synthetic(d, trial_seed, spec, DEFAULT_FEATURES)?;
    let domain = BoxDomain::unit(d);
    let mut rng = substream(trial_seed, &[tag::INIT]);
    let mut noise_rng = substream(trial_seed, &[tag::NOISE]);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let points: Vec<Vec<f64>> = (0..n).map(|_| domain.sample(&mut rng)).collect();
    let values = points.iter().map(|x| f.value(x) + noise.sample(&mut noise_rng)).collect();
    let data = ObservationSet::new(d, points, values)?;
    let cfg = GibbsConfig { seed: derive_seed(trial_seed, &[tag::LEARN]), ..gibbs.clone() };
    let out = gibbs_sample(&data, spec, &cfg, Decomposition::fully_partitioned(d))?;
    let truth = f.truth();
    let ri = out.samples.iter().map(|z| rand_index(z, truth)).sum::<Result<f64>>()? / out.samples.len() as f64;
    Ok(TrialMetrics {
        together: mean_over(&out.samples, truth, grouped_together_rate)?,
        separated: mean_over(&out.samples, truth, separated_rate)?,
        rand_index: ri,
    })
}

/// Structure recovery on `trials` fresh synthetic functions, each observed at
/// `n` uniform points. Each trial's score is averaged over the recorded Gibbs
/// samples; the summary is over trials.
pub fn recovery_experiment(
    d: usize,
    n: usize,
    trials: usize,
    gibbs: &GibbsConfig,
    spec: &KernelSpec,
    seed: u64,
) -> Result<RecoverySummary> {
    if trials == 0 || n == 0 {
        return input("recovery needs at least one trial and one observation");
    }
    gibbs.validate()?;
    let results = crate::par::map_range(trials, |i| trial(d, n, gibbs, spec, seed, i));
    let mut together = Vec::new();
    let mut separated = Vec::new();
    let mut ri = Vec::new();
    for r in results {
        let r = r?;
        together.extend(r.together);
        separated.extend(r.separated);
        ri.push(r.rand_index);
    }
    Ok(RecoverySummary {
        d,
        n,
        trials,
        together: MetricSummary::from_values(&together),
        separated: MetricSummary::from_values(&separated),
        rand_index: MetricSummary::from_values(&ri),
    })
}

/// Write `together.csv`, `separated.csv` and `rand_index.csv` into `dir`:
/// one row per `D`, one column per `N`, cells `mean ± sd`.
pub fn write_recovery_tables(summaries: &[RecoverySummary], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let ds: BTreeSet<usize> = summaries.iter().map(|s| s.d).collect();
    let ns: BTreeSet<usize> = summaries.iter().map(|s| s.n).collect();
    type Metric = fn(&RecoverySummary) -> MetricSummary;
    let tables: [(&str, Metric); 3] = [
        ("together.csv", |s| s.together),
        ("separated.csv", |s| s.separated),
        ("rand_index.csv", |s| s.rand_index),
    ];
    for (name, metric) in tables {
        let mut w = csv::Writer::from_path(dir.join(name)).map_err(csv_error)?;
        let mut header = vec!["D".to_string()];
        header.extend(ns.iter().map(|n| format!("N={n}")));
        w.write_record(&header).map_err(csv_error)?;
        for &d in &ds {
            let mut row = vec![d.to_string()];
            for &n in &ns {
                let cell = summaries.iter().find(|s| s.d == d && s.n == n).map_or(String::new(), |s| metric(s).cell());
                row.push(cell);
            }
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush()?;
    }
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_uses_sample_sd() {
        let s = MetricSummary::from_values(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, Some(2.0));
        assert_eq!(s.sd, Some(1.0));
        assert_eq!(s.cell(), "2.00 ± 1.00");
        assert_eq!(MetricSummary::from_values(&[]).cell(), "n/a");
    }

    #[test]
    fn small_experiment_runs_and_tables_are_written() {
        let gibbs = GibbsConfig { burn_in: 2, total_iters: 5, ..Default::default() };
        let s = recovery_experiment(3, 20, 2, &gibbs, &KernelSpec::default(), 1).unwrap();
        assert_eq!(s.rand_index.count, 2);
        let again = recovery_experiment(3, 20, 2, &gibbs, &KernelSpec::default(), 1).unwrap();
        assert_eq!(s, again);
        let dir = tempfile::tempdir().unwrap();
        write_recovery_tables(&[s], dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("rand_index.csv")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "D,N=20");
        assert!(lines[1].starts_with("3,"));
        assert!(lines[1].contains(" ± "));
    }
}

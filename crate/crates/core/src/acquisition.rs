//! Per-group GP-UCB: confidence bounds, β schedules, and the acquisition
//! optimizer over the box domain.
//!
//! ```text
//! ucb_m(x) = μ_m(x) + √β σ_m(x)
//! lcb_m(x) = μ_m(x) − √β σ_m(x)
//! β_t^{(m)} = |A_m| log(2t) / divisor
//! ```

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::gp::GpState;
use crate::par;
use crate::rng::{substream, tag, Rng};

/// `β_t^{(m)} = |A_m| log(2t) / divisor`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSchedule {
    pub divisor: f64,
}

impl Default for BetaSchedule {
    fn default() -> Self {
        Self::standard()
    }
}

impl BetaSchedule {
    pub const fn standard() -> Self {
        Self { divisor: 1.0 }
    }

    /// The damped schedule used for high-dimensional problems.
    pub const fn scaled() -> Self {
        Self { divisor: 5.0 }
    }

    /// [`scaled`](Self::scaled) for `d ≥ 20`, otherwise [`standard`](Self::standard).
    pub fn for_dimension(d: usize) -> Self {
        if d >= 20 {
            Self::scaled()
        } else {
            Self::standard()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.divisor > 0.0 && self.divisor.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("beta divisor must be positive, got {}", self.divisor)))
        }
    }

    /// β for a group of `group_size` dimensions at round `t ≥ 1`.
    pub fn beta(&self, group_size: usize, t: usize) -> f64 {
        group_size as f64 * (2.0 * t.max(1) as f64).ln() / self.divisor
    }
}

/// Axis-aligned box, optionally restricted to an evenly spaced grid per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default)]
    pub grid_points_per_dim: Option<usize>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, grid_points_per_dim: Option<usize>) -> Result<Self> {
        let domain = Self { lower, upper, grid_points_per_dim };
        domain.validate()?;
        Ok(domain)
    }

    /// `[0, 1]^d`.
    pub fn unit(d: usize) -> Self {
        Self { lower: vec![0.0; d], upper: vec![1.0; d], grid_points_per_dim: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() || self.lower.is_empty() {
            return Err(Error::Config("domain bounds must be nonempty and of equal length".into()));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l < u && l.is_finite() && u.is_finite())) {
            return Err(Error::Config("domain needs finite lower < upper on every axis".into()));
        }
        if matches!(self.grid_points_per_dim, Some(g) if g < 2) {
            return Err(Error::Config("grid needs at least 2 points per axis".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// The box over the coordinates `dims`.
    pub fn sub(&self, dims: &[usize]) -> Self {
        Self {
            lower: dims.iter().map(|&j| self.lower[j]).collect(),
            upper: dims.iter().map(|&j| self.upper[j]).collect(),
            grid_points_per_dim: self.grid_points_per_dim,
        }
    }

    /// A uniform point (snapped to the grid when there is one).
    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        let x = self.lower.iter().zip(&self.upper).map(|(&l, &u)| rng.random_range(l..u)).collect();
        self.snap(x)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| l <= v && v <= u)
    }

    pub fn project(&self, mut x: Vec<f64>) -> Vec<f64> {
        for (v, (l, u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
        x
    }

    /// Round each coordinate to the nearest grid value; identity without a grid.
    pub fn snap(&self, x: Vec<f64>) -> Vec<f64> {
        let Some(g) = self.grid_points_per_dim else {
            return self.project(x);
        };
        let steps = (g - 1) as f64;
        x.into_iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (&l, &u))| {
                let k = ((v - l) / (u - l) * steps).round().clamp(0.0, steps);
                l + (u - l) * k / steps
            })
            .collect()
    }

    /// Every grid point, or `None` without a grid or when there are more than `limit`.
    pub fn grid(&self, limit: usize) -> Option<Vec<Vec<f64>>> {
        let g = self.grid_points_per_dim?;
        let total = (0..self.dim()).try_fold(1usize, |acc, _| acc.checked_mul(g).filter(|&v| v <= limit))?;
        let steps = (g - 1) as f64;
        Some(
            (0..total)
                .map(|mut idx| {
                    (0..self.dim())
                        .map(|j| {
                            let k = (idx % g) as f64;
                            idx /= g;
                            self.lower[j] + (self.upper[j] - self.lower[j]) * k / steps
                        })
                        .collect()
                })
                .collect(),
        )
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if beta >= 0.0 && beta.is_finite() {
        Ok(())
    } else {
        input(format!("beta must be nonnegative, got {beta}"))
    }
}

pub fn ucb(state: &GpState, m: usize, x: &[f64], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let (mu, var) = state.posterior_group(m, x)?;
    Ok(mu + beta.sqrt() * var.sqrt())
}

pub fn lcb(state: &GpState, m: usize, x: &[f64], beta: f64) -> Result<f64> {
    check_beta(beta)?;
    let (mu, var) = state.posterior_group(m, x)?;
    Ok(mu - beta.sqrt() * var.sqrt())
}

/// A function to maximize, evaluated on batches of points.
pub trait AcquisitionSurface: Sync {
    fn values(&self, points: &[&[f64]]) -> Result<Vec<f64>>;
}

impl<F: Fn(&[f64]) -> f64 + Sync> AcquisitionSurface for F {
    fn values(&self, points: &[&[f64]]) -> Result<Vec<f64>> {
        Ok(points.iter().map(|x| self(x)).collect())
    }
}

/// The UCB of one group of a fitted GP.
pub struct GroupUcb<'a> {
    pub state: &'a GpState,
    pub group: usize,
    pub beta: f64,
}

impl AcquisitionSurface for GroupUcb<'_> {
    fn values(&self, points: &[&[f64]]) -> Result<Vec<f64>> {
        check_beta(self.beta)?;
        let (mu, var) = self.state.posterior_group_batch(self.group, points)?;
        let rb = self.beta.sqrt();
        Ok(mu.iter().zip(&var).map(|(m, v)| m + rb * v.sqrt()).collect())
    }
}

/// Settings of the random-search plus gradient-ascent optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Uniform random points scored before local refinement.
    pub budget: usize,
    pub max_steps: usize,
    /// Central-difference step.
    pub fd_step: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { budget: 10_000, max_steps: 100, fd_step: 1e-5 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(Error::Config("acquisition budget must be at least 1".into()));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::Config("finite-difference step must be positive".into()));
        }
        Ok(())
    }
}

const SCORE_BLOCK: usize = 2048;

fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn eval_one(surface: &dyn AcquisitionSurface, x: &[f64]) -> Result<f64> {
    Ok(surface.values(&[x])?[0])
}

/// Maximize `surface` over `domain`: score `budget` uniform points, then run
/// projected gradient ascent with central differences and backtracking from
/// the best one. Grid domains skip the ascent.
pub fn maximize(
    surface: &dyn AcquisitionSurface,
    domain: &BoxDomain,
    config: &OptimizerConfig,
    rng: &mut Rng,
) -> Result<(Vec<f64>, f64)> {
    config.validate()?;
    domain.validate()?;
    let mut best_x = Vec::new();
    let mut best_v = f64::NEG_INFINITY;
    let mut remaining = config.budget;
    while remaining > 0 {
        let take = remaining.min(SCORE_BLOCK);
        remaining -= take;
        let pts: Vec<Vec<f64>> = (0..take).map(|_| domain.sample(rng)).collect();
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let vals = surface.values(&refs)?;
        let i = argmax_first(&vals);
        if vals[i] > best_v || best_x.is_empty() {
            best_v = vals[i];
            best_x = pts[i].clone();
        }
    }
    if domain.grid_points_per_dim.is_some() {
        return Ok((best_x, best_v));
    }

    let d = domain.dim();
    let width = domain
        .lower
        .iter()
        .zip(&domain.upper)
        .map(|(l, u)| u - l)
        .fold(f64::INFINITY, f64::min);
    let mut step = 0.1 * width;
    for _ in 0..config.max_steps {
        let h = config.fd_step;
        let probes: Vec<Vec<f64>> = (0..2 * d)
            .map(|k| {
                let mut p = best_x.clone();
                p[k / 2] += if k % 2 == 0 { h } else { -h };
                p
            })
            .collect();
        let refs: Vec<&[f64]> = probes.iter().map(Vec::as_slice).collect();
        let vals = surface.values(&refs)?;
        let grad: Vec<f64> = (0..d).map(|j| (vals[2 * j] - vals[2 * j + 1]) / (2.0 * h)).collect();
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let cand = domain.project(best_x.iter().zip(&grad).map(|(x, g)| x + step * g / norm).collect());
            let v = eval_one(surface, &cand)?;
            if v > best_v {
                let moved = cand.iter().zip(&best_x).any(|(a, b)| a != b);
                best_x = cand;
                best_v = v;
                improved = moved;
                step *= 2.0;
                break;
            }
            step *= 0.5;
            if step < 1e-12 * width {
                break;
            }
        }
        if !improved {
            break;
        }
    }
    Ok((best_x, best_v))
}

/// Maximize the UCB of group `m` over its coordinates of `domain`.
pub fn optimize_group_acquisition(
    state: &GpState,
    m: usize,
    domain: &BoxDomain,
    beta: f64,
    config: &OptimizerConfig,
    rng: &mut Rng,
) -> Result<(Vec<f64>, f64)> {
    check_beta(beta)?;
    let dims = state.group_dims(m);
    if dims.is_empty() {
        return input(format!("group {m} is empty"));
    }
    if domain.dim() != state.decomposition().dim() {
        return input("domain dimension does not match the GP");
    }
    maximize(&GroupUcb { state, group: m, beta }, &domain.sub(dims), config, rng)
}

/// The next query: every group's UCB maximizer written into its coordinates.
/// Group `m` at round `t` draws from its own stream of `seed`.
pub fn select_sequential_point(
    state: &GpState,
    domain: &BoxDomain,
    schedule: &BetaSchedule,
    t: usize,
    config: &OptimizerConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let groups = state.nonempty_groups();
    let results = par::map(&groups, |&m| {
        let mut rng = substream(seed, &[tag::ACQUISITION, t as u64, m as u64]);
        let beta = schedule.beta(state.group_dims(m).len(), t);
        optimize_group_acquisition(state, m, domain, beta, config, &mut rng)
    });
    let mut x = vec![f64::NAN; domain.dim()];
    for (&m, res) in groups.iter().zip(results) {
        let (sub, _) = res?;
        for (&j, v) in state.group_dims(m).iter().zip(sub) {
            x[j] = v;
        }
    }
    if x.iter().any(|v| v.is_nan()) {
        return input("decomposition does not cover every dimension");
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::Decomposition;
    use crate::gp::ObservationSet;
    use crate::kernel::KernelSpec;

    fn fitted(n: usize, d: usize, decomp: &Decomposition, seed: u64) -> GpState {
        let mut rng = substream(seed, &[]);
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
        let values = points.iter().map(|x| (5.0 * x[0]).sin() + x[d - 1]).collect();
        GpState::fit(&ObservationSet::new(d, points, values).unwrap(), decomp, &KernelSpec::default()).unwrap()
    }

    #[test]
    fn schedule_values() {
        assert!((BetaSchedule::standard().beta(3, 1) - 3.0 * 2f64.ln()).abs() < 1e-15);
        assert!((BetaSchedule::standard().beta(3, 1) - 2.0794).abs() < 1e-4);
        assert_eq!(BetaSchedule::for_dimension(20), BetaSchedule::scaled());
        assert_eq!(BetaSchedule::for_dimension(19), BetaSchedule::standard());
        assert!((BetaSchedule::scaled().beta(2, 4) - 2.0 * 8f64.ln() / 5.0).abs() < 1e-15);
    }

    #[test]
    fn prior_bounds() {
        let state = GpState::prior(2, &Decomposition::single_group(2), &KernelSpec::default()).unwrap();
        assert!((ucb(&state, 0, &[0.2, 0.4], 4.0).unwrap() - 2.0 * 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(ucb(&state, 0, &[0.2, 0.4], 0.0).unwrap(), 0.0);
        assert!(ucb(&state, 0, &[0.2, 0.4], -1.0).is_err());
    }

    #[test]
    fn bounds_bracket_the_mean() {
        let z = Decomposition::new(vec![0, 1, 1]).unwrap();
        let state = fitted(20, 3, &z, 1);
        let mut rng = substream(2, &[]);
        for _ in 0..100 {
            let x = [rng.random::<f64>(), rng.random::<f64>()];
            let (mu, var) = state.posterior_group(1, &x).unwrap();
            let u = ucb(&state, 1, &x, 2.5).unwrap();
            let l = lcb(&state, 1, &x, 2.5).unwrap();
            assert!((u - l - 2.0 * 2.5f64.sqrt() * var.sqrt()).abs() < 1e-12);
            assert!(u >= mu && mu >= l);
        }
    }

    #[test]
    fn finds_a_known_maximizer() {
        let surface = |x: &[f64]| -(x[0] - 0.3).powi(2);
        let mut rng = substream(3, &[]);
        let (x, v) = maximize(&surface, &BoxDomain::unit(1), &OptimizerConfig { budget: 10, ..Default::default() }, &mut rng).unwrap();
        assert!((x[0] - 0.3).abs() < 1e-3, "{x:?}");
        assert!(v <= 0.0);
    }

    #[test]
    fn optimum_at_the_boundary_is_projected() {
        let surface = |x: &[f64]| x[0] + x[1];
        let domain = BoxDomain::new(vec![-1.0, 0.0], vec![2.0, 0.5], None).unwrap();
        let (x, _) = maximize(&surface, &domain, &OptimizerConfig { budget: 5, ..Default::default() }, &mut substream(4, &[])).unwrap();
        assert!(domain.contains(&x));
        assert!((x[0] - 2.0).abs() < 1e-6 && (x[1] - 0.5).abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn ascent_never_loses_to_the_random_stage() {
        let z = Decomposition::new(vec![0, 0, 1]).unwrap();
        let state = fitted(15, 3, &z, 5);
        let cfg = OptimizerConfig { budget: 200, ..Default::default() };
        let mut a = substream(6, &[]);
        let (x, v) = optimize_group_acquisition(&state, 0, &BoxDomain::unit(3), 2.0, &cfg, &mut a).unwrap();
        let mut b = substream(6, &[]);
        let pts: Vec<Vec<f64>> = (0..200).map(|_| BoxDomain::unit(2).sample(&mut b)).collect();
        let refs: Vec<&[f64]> = pts.iter().map(Vec::as_slice).collect();
        let random_best = GroupUcb { state: &state, group: 0, beta: 2.0 }
            .values(&refs)
            .unwrap()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(v >= random_best - 1e-12);
        assert!(BoxDomain::unit(2).contains(&x));
    }

    #[test]
    fn grid_domains_return_grid_points() {
        let domain = BoxDomain::new(vec![0.0; 2], vec![1.0; 2], Some(5)).unwrap();
        let surface = |x: &[f64]| -(x[0] - 0.3).powi(2) - (x[1] - 0.8).powi(2);
        let (x, _) = maximize(&surface, &domain, &OptimizerConfig { budget: 500, ..Default::default() }, &mut substream(7, &[])).unwrap();
        assert_eq!(x, vec![0.25, 0.75]);
        assert_eq!(domain.grid(100).unwrap().len(), 25);
        assert!(domain.grid(24).is_none());
    }

    #[test]
    fn sequential_point_is_blockwise() {
        let z = Decomposition::new(vec![0, 1, 1]).unwrap();
        let state = fitted(12, 3, &z, 8);
        let domain = BoxDomain::unit(3);
        let cfg = OptimizerConfig { budget: 300, ..Default::default() };
        let x = select_sequential_point(&state, &domain, &BetaSchedule::standard(), 4, &cfg, 9).unwrap();
        for m in [0, 1] {
            let mut rng = substream(9, &[tag::ACQUISITION, 4, m as u64]);
            let beta = BetaSchedule::standard().beta(state.group_dims(m).len(), 4);
            let (sub, _) = optimize_group_acquisition(&state, m, &domain, beta, &cfg, &mut rng).unwrap();
            let got: Vec<f64> = state.group_dims(m).iter().map(|&j| x[j]).collect();
            assert_eq!(got, sub);
        }
    }
}

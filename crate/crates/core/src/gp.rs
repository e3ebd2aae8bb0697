//! Additive GP inference with one shared factorization of `K_n + σ²I`.
//!
//! For each nonempty group `m`:
//!
//! ```text
//! μ_m(x)     = k_m(x)ᵀ (K_n + σ²I)⁻¹ y
//! k_m(x, x') = k_m(x, x') − k_m(x)ᵀ (K_n + σ²I)⁻¹ k_m(x')
//! ```
//!
//! where `k_m(x) = [k_m(x_t, x)]_t`. Query points are given in the group's
//! own coordinates (length `|A_m|`).

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use serde::{Deserialize, Serialize};

use crate::decomposition::Decomposition;
use crate::error::{input, Error, Result};
use crate::kernel::{DistanceCache, GroupGrams, KernelSpec};
use crate::linalg::{log_likelihood, Factor};

/// Raw posterior variances below this are treated as a bug, not round-off.
pub const VARIANCE_FLOOR: f64 = -1e-8;

const QUERY_BLOCK: usize = 512;

/// Observed inputs `x_t` (each of length `D`) and noisy values `y_t`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationSet {
    dim: usize,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

impl ObservationSet {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return input(format!("{} points but {} values", points.len(), values.len()));
        }
        let mut set = Self { dim, points: Vec::new(), values: Vec::new() };
        for (x, y) in points.into_iter().zip(values) {
            set.push(x, y)?;
        }
        Ok(set)
    }

    pub fn empty(dim: usize) -> Self {
        Self { dim, points: Vec::new(), values: Vec::new() }
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        if x.len() != self.dim {
            return input(format!("point has {} coordinates, expected {}", x.len(), self.dim));
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return input("observations must be finite");
        }
        self.points.push(x);
        self.values.push(y);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, t: usize) -> &[f64] {
        &self.points[t]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Same rows reordered: row `i` of the result is row `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            dim: self.dim,
            points: perm.iter().map(|&i| self.points[i].clone()).collect(),
            values: perm.iter().map(|&i| self.values[i]).collect(),
        }
    }
}

/// Training inputs of one group, flattened row-major (`n × |A_m|`).
#[derive(Clone, Debug)]
struct GroupInputs {
    dims: Vec<usize>,
    coords: Vec<f64>,
}

/// Fitted additive GP: Gram matrix, factorization, and `(K_n + σ²I)⁻¹ y`.
#[derive(Clone, Debug)]
pub struct GpState {
    spec: KernelSpec,
    decomp: Decomposition,
    data: ObservationSet,
    gram: Mat<f64>,
    factor: Factor,
    alpha: Vec<f64>,
    groups: Vec<Option<GroupInputs>>,
}

impl GpState {
    /// Fit the GP to nonempty data.
    pub fn fit(data: &ObservationSet, decomp: &Decomposition, spec: &KernelSpec) -> Result<Self> {
        if data.is_empty() {
            return input("cannot fit a GP to an empty data set");
        }
        Self::fit_inner(data, decomp, spec)
    }

    /// The no-data state: posterior equals the prior.
    pub fn prior(dim: usize, decomp: &Decomposition, spec: &KernelSpec) -> Result<Self> {
        Self::fit_inner(&ObservationSet::empty(dim), decomp, spec)
    }

    fn fit_inner(data: &ObservationSet, decomp: &Decomposition, spec: &KernelSpec) -> Result<Self> {
        spec.validate()?;
        if decomp.dim() != data.dim() {
            return input(format!(
                "decomposition covers {} dimensions but data has {}",
                decomp.dim(),
                data.dim()
            ));
        }
        let n = data.len();
        let cache = DistanceCache::new(data, spec);
        let gram = GroupGrams::build(&cache, decomp, spec).total(n);
        let factor = Factor::new(gram.as_ref(), spec.noise_var())?;
        if factor.jitter() > 0.0 {
            log::debug!("GP fit needed diagonal jitter {:e} (n = {n})", factor.jitter());
        }
        let alpha = factor.solve(data.values());
        let groups = decomp
            .groups()
            .into_iter()
            .map(|dims| {
                (!dims.is_empty()).then(|| GroupInputs {
                    coords: data.points().iter().flat_map(|x| dims.iter().map(|&j| x[j])).collect(),
                    dims,
                })
            })
            .collect();
        Ok(Self { spec: *spec, decomp: decomp.clone(), data: data.clone(), gram, factor, alpha, groups })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomp
    }

    pub fn data(&self) -> &ObservationSet {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn gram(&self) -> &Mat<f64> {
        &self.gram
    }

    pub fn factor(&self) -> &Factor {
        &self.factor
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Dimensions of group `m` (empty slice for an empty group).
    pub fn group_dims(&self, m: usize) -> &[usize] {
        self.groups.get(m).and_then(|g| g.as_ref()).map_or(&[], |g| &g.dims)
    }

    /// Labels of the nonempty groups, ascending.
    pub fn nonempty_groups(&self) -> Vec<usize> {
        (0..self.groups.len()).filter(|&m| self.groups[m].is_some()).collect()
    }

    /// Log marginal likelihood `−½(yᵀ(K+σ²I)⁻¹y + log|K+σ²I| + n log 2π)`.
    pub fn log_marginal_likelihood(&self) -> f64 {
        log_likelihood(&self.factor, self.data.values())
    }

    fn group(&self, m: usize) -> Result<&GroupInputs> {
        match self.groups.get(m) {
            Some(Some(g)) => Ok(g),
            Some(None) => input(format!("group {m} is empty")),
            None => input(format!("group {m} out of range")),
        }
    }

    /// `n × q` cross-covariance between training inputs and `queries` for group `m`.
    fn cross(&self, g: &GroupInputs, queries: &[&[f64]]) -> Mat<f64> {
        let w = g.dims.len();
        let c = self.spec.inv_two_l2();
        let scale = self.spec.scale;
        let n = self.len();
        let mut k = Mat::<f64>::zeros(n, queries.len());
        for (q, x) in queries.iter().enumerate() {
            let col = k.col_as_slice_mut(q);
            for (t, out) in col.iter_mut().enumerate() {
                let row = &g.coords[t * w..(t + 1) * w];
                let s: f64 = row.iter().zip(x.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
                *out = scale * (-s * c).exp();
            }
        }
        k
    }

    fn check_queries(&self, g: &GroupInputs, queries: &[&[f64]]) -> Result<()> {
        match queries.iter().find(|x| x.len() != g.dims.len()) {
            Some(x) => input(format!("query has {} coordinates, group has {}", x.len(), g.dims.len())),
            None => Ok(()),
        }
    }

    /// Posterior mean and variance of group `m` at one point of its subspace.
    pub fn posterior_group(&self, m: usize, x: &[f64]) -> Result<(f64, f64)> {
        let (mu, var) = self.posterior_group_batch(m, &[x])?;
        Ok((mu[0], var[0]))
    }

    /// Same as [`posterior_group`](Self::posterior_group) for a full `D`-dimensional point.
    pub fn posterior_group_at(&self, m: usize, x_full: &[f64]) -> Result<(f64, f64)> {
        let g = self.group(m)?;
        if x_full.len() != self.data.dim() {
            return input("point dimension does not match the data");
        }
        let sub: Vec<f64> = g.dims.iter().map(|&j| x_full[j]).collect();
        self.posterior_group(m, &sub)
    }

    /// Posterior means and variances of group `m` at many subspace points.
    pub fn posterior_group_batch(&self, m: usize, queries: &[&[f64]]) -> Result<(Vec<f64>, Vec<f64>)> {
        let g = self.group(m)?;
        self.check_queries(g, queries)?;
        let mut means = Vec::with_capacity(queries.len());
        let mut vars = Vec::with_capacity(queries.len());
        for block in queries.chunks(QUERY_BLOCK) {
            if self.is_empty() {
                means.extend(std::iter::repeat_n(0.0, block.len()));
                vars.extend(std::iter::repeat_n(self.spec.scale, block.len()));
                continue;
            }
            let mut k = self.cross(g, block);
            for q in 0..block.len() {
                let col = k.col_as_slice(q);
                means.push(col.iter().zip(&self.alpha).map(|(a, b)| a * b).sum());
            }
            self.factor.forward_in_place(k.as_mut());
            for q in 0..block.len() {
                let reduction: f64 = k.col_as_slice(q).iter().map(|v| v * v).sum();
                vars.push(clamp_variance(self.spec.scale - reduction)?);
            }
        }
        Ok((means, vars))
    }

    /// Posterior covariance matrix of group `m` over subspace `points`.
    ///
    /// The result is exactly symmetric but only PSD up to round-off; see
    /// [`crate::linalg::clamped_eigen`] for the truncation used by samplers.
    pub fn posterior_group_covariance(&self, m: usize, points: &[&[f64]]) -> Result<Mat<f64>> {
        let g = self.group(m)?;
        self.check_queries(g, points)?;
        if points.is_empty() {
            return input("covariance needs at least one point");
        }
        let q = points.len();
        let mut cov = Mat::from_fn(q, q, |a, b| {
            crate::kernel::group_kernel_unchecked(points[a], points[b], &self.spec)
        });
        if !self.is_empty() {
            let mut v = self.cross(g, points);
            self.factor.forward_in_place(v.as_mut());
            matmul(cov.as_mut(), Accum::Add, v.transpose(), v.as_ref(), -1.0, Par::Seq);
        }
        for a in 0..q {
            for b in 0..a {
                let s = 0.5 * (cov[(a, b)] + cov[(b, a)]);
                cov[(a, b)] = s;
                cov[(b, a)] = s;
            }
        }
        Ok(cov)
    }

    /// The state obtained by also conditioning on `extra` inputs. Their
    /// observed values are set to the current posterior mean, which leaves the
    /// mean unchanged; only the covariance matters to callers.
    pub fn with_fantasies(&self, extra: &[Vec<f64>]) -> Result<Self> {
        let mut data = self.data.clone();
        for x in extra {
            let mean: f64 = self
                .nonempty_groups()
                .into_iter()
                .map(|m| self.posterior_group_at(m, x).map(|(mu, _)| mu))
                .sum::<Result<f64>>()?;
            data.push(x.clone(), mean)?;
        }
        Self::fit_inner(&data, &self.decomp, &self.spec)
    }
}

fn clamp_variance(raw: f64) -> Result<f64> {
    if raw >= 0.0 {
        Ok(raw)
    } else if raw >= VARIANCE_FLOOR {
        Ok(0.0)
    } else {
        Err(Error::Numerical { msg: format!("posterior variance {raw:e} is negative"), jitter: 0.0 })
    }
}

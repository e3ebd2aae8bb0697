//! Squared-exponential additive kernel.
//!
//! Each nonempty group `A_m` carries `k_m(x, x') = scale · exp(−‖x_A − x'_A‖² / 2ℓ²)`
//! and the full kernel is the sum over nonempty groups. Empty groups are the
//! zero function.

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::decomposition::Decomposition;
use crate::error::{input, Result};
use crate::gp::ObservationSet;

/// Shared hyperparameters: one bandwidth and one scale for every group, plus
/// the observation noise standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSpec {
    pub bandwidth: f64,
    pub scale: f64,
    pub noise_sigma: f64,
}

impl Default for KernelSpec {
    /// Bandwidth 0.1 and scale 5 as in the synthetic benchmarks; noise 0.1.
    fn default() -> Self {
        Self { bandwidth: 0.1, scale: 5.0, noise_sigma: 0.1 }
    }
}

impl KernelSpec {
    pub fn new(bandwidth: f64, scale: f64, noise_sigma: f64) -> Result<Self> {
        let spec = Self { bandwidth, scale, noise_sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return input(format!("bandwidth must be positive, got {}", self.bandwidth));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return input(format!("scale must be positive, got {}", self.scale));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return input(format!("noise_sigma must be nonnegative, got {}", self.noise_sigma));
        }
        Ok(())
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_sigma * self.noise_sigma
    }

    /// `1 / (2ℓ²)`, the factor applied to squared coordinate differences.
    pub fn inv_two_l2(&self) -> f64 {
        1.0 / (2.0 * self.bandwidth * self.bandwidth)
    }
}

/// Kernel of one group on points already restricted to the group's dimensions.
pub fn group_kernel(xa: &[f64], xb: &[f64], spec: &KernelSpec) -> Result<f64> {
    if xa.len() != xb.len() {
        return input(format!("dimension mismatch: {} vs {}", xa.len(), xb.len()));
    }
    if xa.is_empty() {
        return input("group kernel needs at least one dimension");
    }
    Ok(group_kernel_unchecked(xa, xb, spec))
}

pub(crate) fn group_kernel_unchecked(xa: &[f64], xb: &[f64], spec: &KernelSpec) -> f64 {
    let s: f64 = xa.iter().zip(xb).map(|(a, b)| (a - b) * (a - b)).sum();
    spec.scale * (-s * spec.inv_two_l2()).exp()
}

/// Per-dimension scaled squared distances `(x_ij − x_tj)² / 2ℓ²` between all
/// pairs of observed inputs.
#[derive(Clone, Debug)]
pub struct DistanceCache {
    per_dimension: Vec<Mat<f64>>,
}

impl DistanceCache {
    pub fn new(data: &ObservationSet, spec: &KernelSpec) -> Self {
        let n = data.len();
        let c = spec.inv_two_l2();
        let per_dimension = (0..data.dim())
            .map(|j| {
                Mat::from_fn(n, n, |a, b| {
                    let d = data.point(a)[j] - data.point(b)[j];
                    d * d * c
                })
            })
            .collect();
        Self { per_dimension }
    }

    pub fn dim(&self) -> usize {
        self.per_dimension.len()
    }

    pub fn len(&self) -> usize {
        self.per_dimension.first().map_or(0, |m| m.nrows())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dimension(&self, j: usize) -> MatRef<'_, f64> {
        self.per_dimension[j].as_ref()
    }

    /// Σ over `dims` of the cached matrices, summed in the given order.
    pub fn summed(&self, dims: &[usize]) -> Mat<f64> {
        let n = self.len();
        let mut out = Mat::<f64>::zeros(n, n);
        for &j in dims {
            let src = &self.per_dimension[j];
            for col in 0..n {
                let s = src.col_as_slice(col);
                for (o, v) in out.col_as_slice_mut(col).iter_mut().zip(s) {
                    *o += v;
                }
            }
        }
        out
    }
}

fn exp_gram(sums: &Mat<f64>, scale: f64) -> Mat<f64> {
    Mat::from_fn(sums.nrows(), sums.ncols(), |i, j| scale * (-sums[(i, j)]).exp())
}

/// Per-group Gram matrices for the current decomposition, kept in sync as
/// dimensions move between groups.
#[derive(Clone, Debug)]
pub struct GroupGrams {
    scale: f64,
    members: Vec<Vec<usize>>,
    grams: Vec<Option<Mat<f64>>>,
}

impl GroupGrams {
    pub fn build(cache: &DistanceCache, decomp: &Decomposition, spec: &KernelSpec) -> Self {
        let members = decomp.groups();
        let grams = members
            .iter()
            .map(|g| (!g.is_empty()).then(|| exp_gram(&cache.summed(g), spec.scale)))
            .collect();
        Self { scale: spec.scale, members, grams }
    }

    pub fn slots(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self, m: usize) -> &[usize] {
        &self.members[m]
    }

    /// Gram of group `m`, `None` for an empty group.
    pub fn gram(&self, m: usize) -> Option<MatRef<'_, f64>> {
        self.grams[m].as_ref().map(|g| g.as_ref())
    }

    /// Move dimension `j` from `from` to `to`, rebuilding only those two
    /// groups. Rebuilt groups are summed from the cache in ascending
    /// dimension order, so the result is identical to a fresh build.
    pub fn move_dimension(
        &mut self,
        cache: &DistanceCache,
        j: usize,
        from: usize,
        to: usize,
    ) -> Result<()> {
        if from >= self.slots() || to >= self.slots() {
            return input("group index out of range");
        }
        if !self.members[from].contains(&j) {
            return input(format!("dimension {j} is not in group {from}"));
        }
        if from == to {
            return Ok(());
        }
        self.members[from].retain(|&i| i != j);
        let pos = self.members[to].partition_point(|&i| i < j);
        self.members[to].insert(pos, j);
        for m in [from, to] {
            let g = &self.members[m];
            self.grams[m] = (!g.is_empty()).then(|| exp_gram(&cache.summed(g), self.scale));
        }
        Ok(())
    }

    /// `K_n = Σ_m G_m` over nonempty groups, summed in order of each group's
    /// smallest dimension so the result does not depend on the labels.
    pub fn total(&self, n: usize) -> Mat<f64> {
        let mut order: Vec<usize> = (0..self.slots()).filter(|&m| self.grams[m].is_some()).collect();
        order.sort_by_key(|&m| self.members[m][0]);
        let mut k = Mat::<f64>::zeros(n, n);
        for m in order {
            if let Some(g) = &self.grams[m] {
                k += g;
            }
        }
        k
    }
}

/// Full additive Gram matrix `K_n` for `data` under `decomp`.
pub fn gram_matrix(
    data: &ObservationSet,
    decomp: &Decomposition,
    spec: &KernelSpec,
    cache: &DistanceCache,
) -> Result<Mat<f64>> {
    if cache.len() != data.len() || cache.dim() != data.dim() {
        return input("distance cache was built from different data");
    }
    if decomp.dim() != data.dim() {
        return input("decomposition dimension does not match data");
    }
    Ok(GroupGrams::build(cache, decomp, spec).total(data.len()))
}

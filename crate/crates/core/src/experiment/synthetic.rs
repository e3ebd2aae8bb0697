//! Random additive test functions drawn (approximately) from the additive
//! GP prior with random Fourier features:
//!
//! ```text
//! f_m(x) = √(2s/F) Σ_i w_i cos(ω_iᵀ x + b_i),  ω_i ~ N(0, ℓ⁻² I), b_i ~ U(0, 2π), w_i ~ N(0, 1)
//! ```
//!
//! so that `Cov(f_m(x), f_m(x')) = s·exp(−‖x − x'‖² / 2ℓ²)`.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::Objective;
use crate::acquisition::BoxDomain;
use crate::decomposition::Decomposition;
use crate::error::{input, Result};
use crate::kernel::KernelSpec;
use crate::rng::{substream, tag, Rng};

pub const DEFAULT_FEATURES: usize = 1024;

/// Largest group in a generated ground truth.
const MAX_TRUE_GROUP: usize = 3;

#[derive(Clone, Debug)]
struct Component {
    dims: Vec<usize>,
    /// `F × |A_m|`, row-major.
    omega: Vec<f64>,
    phase: Vec<f64>,
    /// Weights premultiplied by `√(2s/F)`.
    weight: Vec<f64>,
}

impl Component {
    fn draw(dims: Vec<usize>, features: usize, spec: &KernelSpec, rng: &mut Rng) -> Self {
        let k = dims.len();
        let amp = (2.0 * spec.scale / features as f64).sqrt();
        let omega = (0..features * k)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z / spec.bandwidth
            })
            .collect();
        let phase = (0..features).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let weight = (0..features)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                amp * z
            })
            .collect();
        Self { dims, omega, phase, weight }
    }

    fn value(&self, x: &[f64]) -> f64 {
        let k = self.dims.len();
        self.omega
            .chunks_exact(k)
            .zip(self.phase.iter().zip(&self.weight))
            .map(|(w, (b, a))| a * (w.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() + b).cos())
            .sum()
    }

    fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let k = self.dims.len();
        let mut grad = vec![0.0; k];
        let mut value = 0.0;
        for (w, (b, a)) in self.omega.chunks_exact(k).zip(self.phase.iter().zip(&self.weight)) {
            let arg = w.iter().zip(x).map(|(p, q)| p * q).sum::<f64>() + b;
            value += a * arg.cos();
            let s = -a * arg.sin();
            for (g, p) in grad.iter_mut().zip(w) {
                *g += s * p;
            }
        }
        (value, grad)
    }

    /// Grid search over the unit box followed by projected gradient ascent
    /// from the best grid points.
    fn maximize(&self) -> (Vec<f64>, f64) {
        let k = self.dims.len();
        let per_axis = match k {
            1 => 2001,
            2 => 121,
            _ => 33,
        };
        let domain = BoxDomain { lower: vec![0.0; k], upper: vec![1.0; k], grid_points_per_dim: Some(per_axis) };
        let grid = domain.grid(usize::MAX).expect("grid fits");
        let mut scored: Vec<(f64, usize)> = grid.iter().enumerate().map(|(i, x)| (self.value(x), i)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let unit = BoxDomain::unit(k);
        let mut best = (grid[scored[0].1].clone(), scored[0].0);
        for &(_, i) in scored.iter().take(20) {
            let (x, v) = self.ascend(grid[i].clone(), &unit);
            if v > best.1 {
                best = (x, v);
            }
        }
        best
    }

    fn ascend(&self, mut x: Vec<f64>, unit: &BoxDomain) -> (Vec<f64>, f64) {
        let (mut v, mut g) = self.value_and_gradient(&x);
        let mut step = 0.01;
        for _ in 0..500 {
            let norm = g.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !(norm > 1e-12) {
                break;
            }
            let mut moved = false;
            while step > 1e-12 {
                let cand = unit.project(x.iter().zip(&g).map(|(a, b)| a + step * b / norm).collect());
                let (cv, cg) = self.value_and_gradient(&cand);
                if cv > v {
                    moved = cand != x;
                    x = cand;
                    v = cv;
                    g = cg;
                    step *= 1.5;
                    break;
                }
                step *= 0.5;
            }
            if !moved {
                break;
            }
        }
        (x, v)
    }
}

/// A sum of independent random-feature components on `[0, 1]^D`.
#[derive(Clone, Debug)]
pub struct SyntheticFunction {
    truth: Decomposition,
    components: Vec<Component>,
    domain: BoxDomain,
    known_max: f64,
    argmax: Vec<f64>,
}

impl SyntheticFunction {
    pub fn truth(&self) -> &Decomposition {
        &self.truth
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    /// Estimated maximizer (components are maximized independently).
    pub fn argmax(&self) -> &[f64] {
        &self.argmax
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    /// Value of component `i` at a point of its own subspace.
    pub fn component_value(&self, i: usize, x_sub: &[f64]) -> f64 {
        self.components[i].value(x_sub)
    }

    pub fn component_dims(&self, i: usize) -> &[usize] {
        &self.components[i].dims
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let sub: Vec<f64> = c.dims.iter().map(|&j| x[j]).collect();
                c.value(&sub)
            })
            .sum()
    }
}

impl Objective for SyntheticFunction {
    fn dim(&self) -> usize {
        self.truth.dim()
    }

    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return input(format!("point has {} coordinates, expected {}", x.len(), self.dim()));
        }
        Ok(self.value(x))
    }

    fn known_max(&self) -> f64 {
        self.known_max
    }

    fn true_decomposition(&self) -> Option<&Decomposition> {
        Some(&self.truth)
    }
}

/// A random partition of `0..d` into at least two groups of size at most 3.
fn random_truth(d: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    loop {
        let mut dims: Vec<usize> = (0..d).collect();
        dims.shuffle(rng);
        let mut groups = Vec::new();
        let mut rest = &dims[..];
        while !rest.is_empty() {
            let size = rng.random_range(1..=MAX_TRUE_GROUP).min(rest.len());
            let (g, r) = rest.split_at(size);
            let mut g = g.to_vec();
            g.sort_unstable();
            groups.push(g);
            rest = r;
        }
        if groups.len() >= 2 {
            return groups;
        }
    }
}

/// Draw a synthetic additive function over `[0, 1]^d` with `features` random
/// features per component.
pub fn generate_synthetic(d: usize, seed: u64, spec: &KernelSpec, features: usize) -> Result<SyntheticFunction> {
    if d < 2 {
        return input("synthetic functions need at least two dimensions");
    }
    if features == 0 {
        return input("need at least one random feature");
    }
    spec.validate()?;
    let mut rng = substream(seed, &[tag::SYNTHETIC]);
    let groups = random_truth(d, &mut rng);
    let truth = Decomposition::from_groups(d, &groups)?;
    let components: Vec<Component> =
        groups.into_iter().map(|dims| Component::draw(dims, features, spec, &mut rng)).collect();
    let maxima = crate::par::map(&components, Component::maximize);
    let mut argmax = vec![0.0; d];
    let mut known_max = 0.0;
    for (c, (x, v)) in components.iter().zip(maxima) {
        known_max += v;
        for (&j, xj) in c.dims.iter().zip(x) {
            argmax[j] = xj;
        }
    }
    Ok(SyntheticFunction { truth, components, domain: BoxDomain::unit(d), known_max, argmax })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truth_respects_size_constraints() {
        for seed in 0..50 {
            let f = generate_synthetic(2 + seed as usize % 9, seed, &KernelSpec::default(), 16).unwrap();
            let z = f.truth();
            assert!(z.num_nonempty() >= 2);
            assert!(z.max_group_size() <= 3);
            assert!(z.is_valid_partition());
            assert_eq!(f.num_components(), z.num_nonempty());
        }
    }

    #[test]
    fn value_is_sum_of_components() {
        let f = generate_synthetic(6, 3, &KernelSpec::default(), 64).unwrap();
        let mut rng = substream(4, &[]);
        for _ in 0..20 {
            let x: Vec<f64> = (0..6).map(|_| rng.random::<f64>()).collect();
            let parts: f64 = (0..f.num_components())
                .map(|i| {
                    let sub: Vec<f64> = f.component_dims(i).iter().map(|&j| x[j]).collect();
                    f.component_value(i, &sub)
                })
                .sum();
            assert_eq!(f.evaluate(&x).unwrap(), parts);
        }
    }

    #[test]
    fn known_max_dominates_random_points() {
        let f = generate_synthetic(5, 5, &KernelSpec::default(), 256).unwrap();
        assert!((f.value(f.argmax()) - f.known_max()).abs() < 1e-9);
        let mut rng = substream(6, &[]);
        for _ in 0..5000 {
            let x: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
            assert!(f.value(&x) <= f.known_max() + 1e-9);
        }
    }

    #[test]
    fn analytic_gradient_matches_differences() {
        let f = generate_synthetic(3, 7, &KernelSpec::default(), 128).unwrap();
        let c = &f.components[0];
        let x: Vec<f64> = vec![0.37; c.dims.len()];
        let (_, g) = c.value_and_gradient(&x);
        for j in 0..x.len() {
            let mut p = x.clone();
            let mut q = x.clone();
            p[j] += 1e-6;
            q[j] -= 1e-6;
            let fd = (c.value(&p) - c.value(&q)) / 2e-6;
            assert!((fd - g[j]).abs() < 1e-4 * (1.0 + g[j].abs()));
        }
    }

    #[test]
    fn seeded_and_rejects_small_d() {
        let a = generate_synthetic(4, 9, &KernelSpec::default(), 32).unwrap();
        let b = generate_synthetic(4, 9, &KernelSpec::default(), 32).unwrap();
        assert_eq!(a.value(&[0.1, 0.2, 0.3, 0.4]), b.value(&[0.1, 0.2, 0.3, 0.4]));
        assert!(generate_synthetic(1, 0, &KernelSpec::default(), 32).is_err());
    }
}

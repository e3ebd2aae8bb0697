//! Independent reference implementations used only by the integration tests.
//! They use nalgebra and direct formulas, never the crate's own numerics.
#![allow(dead_code)]

use addbo::{Decomposition, ObservationSet};
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SCALE: f64 = 5.0;
pub const BANDWIDTH: f64 = 0.1;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Squared-exponential kernel on the coordinates `dims`, by the textbook formula.
pub fn k_group(x: &[f64], y: &[f64], dims: &[usize], scale: f64, ell: f64) -> f64 {
    let s: f64 = dims.iter().map(|&j| (x[j] - y[j]).powi(2)).sum();
    scale * (-s / (2.0 * ell * ell)).exp()
}

pub fn groups_of(z: &Decomposition) -> Vec<Vec<usize>> {
    let d = z.dim();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); d];
    for (j, &m) in z.assignment().iter().enumerate() {
        out[m].push(j);
    }
    out.into_iter().filter(|g| !g.is_empty()).collect()
}

pub fn gram(points: &[Vec<f64>], z: &Decomposition, scale: f64, ell: f64) -> DMatrix<f64> {
    let groups = groups_of(z);
    let n = points.len();
    DMatrix::from_fn(n, n, |a, b| groups.iter().map(|g| k_group(&points[a], &points[b], g, scale, ell)).sum())
}

/// `log N(y; 0, K + σ²I)` with an explicit inverse and determinant.
pub fn dense_log_likelihood(data: &ObservationSet, z: &Decomposition, scale: f64, ell: f64, sigma: f64) -> f64 {
    let n = data.len();
    let c = gram(data.points(), z, scale, ell) + DMatrix::identity(n, n) * sigma * sigma;
    let y = DVector::from_column_slice(data.values());
    let inv: DMatrix<f64> = c.clone().try_inverse().expect("invertible");
    let quad = y.dot(&(inv * &y));
    let det = c.determinant();
    -0.5 * (quad + det.ln() + n as f64 * (2.0 * std::f64::consts::PI).ln())
}

/// Full-kernel posterior mean at `x`.
pub fn dense_posterior_mean(data: &ObservationSet, z: &Decomposition, x: &[f64], scale: f64, ell: f64, sigma: f64) -> f64 {
    let n = data.len();
    let groups = groups_of(z);
    let c = gram(data.points(), z, scale, ell) + DMatrix::identity(n, n) * sigma * sigma;
    let k = DVector::from_fn(n, |t, _| groups.iter().map(|g| k_group(&data.points()[t], x, g, scale, ell)).sum());
    let y = DVector::from_column_slice(data.values());
    let inv: DMatrix<f64> = c.try_inverse().unwrap();
    k.dot(&(inv * y))
}

pub fn ln_gamma(x: f64) -> f64 {
    // Lanczos approximation (g = 7, n = 9).
    const G: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = G[0];
    let t = x + 7.5;
    for (i, g) in G.iter().enumerate().skip(1) {
        a += g / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Dirichlet-multinomial prior of a labeling.
pub fn log_prior(z: &Decomposition, alpha: f64) -> f64 {
    let d = z.dim();
    let m = z.slots();
    let mut counts = vec![0usize; m];
    for &l in z.assignment() {
        counts[l] += 1;
    }
    let total = alpha * m as f64;
    ln_gamma(total) - ln_gamma(d as f64 + total) + counts.iter().map(|&c| ln_gamma(c as f64 + alpha) - ln_gamma(alpha)).sum::<f64>()
}

/// Every labeling of `d` dimensions into `d` slots, in base-`d` counting order.
pub fn all_labelings(d: usize) -> Vec<Decomposition> {
    let total = d.pow(d as u32);
    (0..total)
        .map(|mut i| {
            let a = (0..d)
                .map(|_| {
                    let l = i % d;
                    i /= d;
                    l
                })
                .collect();
            Decomposition::new(a).unwrap()
        })
        .collect()
}

/// Exact posterior over all labelings by enumeration.
pub fn enumerated_posterior(data: &ObservationSet, alpha: f64, scale: f64, ell: f64, sigma: f64) -> Vec<(Decomposition, f64)> {
    let labelings = all_labelings(data.dim());
    let logs: Vec<f64> = labelings
        .iter()
        .map(|z| dense_log_likelihood(data, z, scale, ell, sigma) + log_prior(z, alpha))
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let norm: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    labelings.into_iter().zip(logs).map(|(z, l)| (z, (l - max).exp() / norm)).collect()
}

pub fn uniform_points(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..n).map(|_| (0..d).map(|_| r.random::<f64>()).collect()).collect()
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(m: &[Vec<f64>]) -> f64 {
    DMatrix::from_fn(m.len(), m.len(), |i, j| m[i][j]).determinant()
}

/// A random PSD matrix `A Aᵀ` of size `n`.
pub fn random_psd(n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    let a: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| r.random::<f64>() - 0.5).collect()).collect();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * a[j][k]).sum()).collect()).collect()
}

pub fn to_faer(m: &[Vec<f64>]) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.len(), m.len(), |i, j| m[i][j])
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

pub fn principal(m: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| idx.iter().map(|&j| m[i][j]).collect()).collect()
}

//! Exact sampling from a k-DPP, `P(S) ∝ det(L_S)` over subsets with `|S| = k`.

use faer::MatRef;
use rand::Rng as _;

use crate::error::{input, Error, Result};
use crate::linalg::clamped_eigen;
use crate::rng::Rng;

/// Eigenvalues below this fraction of the largest are treated as zero.
const RANK_TOLERANCE: f64 = 1e-12;

fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `table[l][n] = log e_l(λ_1, …, λ_n)` for `l ≤ k`, `n ≤ N`.
pub fn elementary_symmetric_log(lambda: &[f64], k: usize) -> Vec<Vec<f64>> {
    let n = lambda.len();
    let mut table = vec![vec![f64::NEG_INFINITY; n + 1]; k + 1];
    table[0].fill(0.0);
    for l in 1..=k {
        for i in 1..=n {
            let take = lambda[i - 1].ln() + table[l - 1][i - 1];
            table[l][i] = log_add_exp(table[l][i - 1], take);
        }
    }
    table
}

fn gram_schmidt(cols: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for mut c in cols.drain(..) {
        for _ in 0..2 {
            for q in &out {
                let dot: f64 = c.iter().zip(q).map(|(a, b)| a * b).sum();
                for (ci, qi) in c.iter_mut().zip(q) {
                    *ci -= dot * qi;
                }
            }
        }
        let norm = c.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            c.iter_mut().for_each(|a| *a /= norm);
            out.push(c);
        }
    }
    *cols = out;
}

/// Draw `k` distinct indices with probability proportional to the determinant
/// of the corresponding principal submatrix of the PSD matrix `kernel`.
/// Returns the indices in ascending order.
pub fn kdpp_sample(kernel: MatRef<'_, f64>, k: usize, rng: &mut Rng) -> Result<Vec<usize>> {
    let n = kernel.nrows();
    if kernel.ncols() != n {
        return input("k-DPP kernel must be square");
    }
    if k > n {
        return input(format!("cannot pick {k} items from {n}"));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let (mut lambda, u) = clamped_eigen(kernel)?;
    let top = lambda.iter().cloned().fold(0.0, f64::max);
    for v in lambda.iter_mut() {
        if *v <= RANK_TOLERANCE * top {
            *v = 0.0;
        }
    }
    let e = elementary_symmetric_log(&lambda, k);
    if e[k][n] == f64::NEG_INFINITY {
        return Err(Error::Numerical { msg: format!("k-DPP kernel has rank below {k}"), jitter: 0.0 });
    }

    // Choose k eigenvectors, walking the spectrum from the top.
    let mut chosen = Vec::with_capacity(k);
    let mut l = k;
    for i in (1..=n).rev() {
        if l == 0 {
            break;
        }
        let p = (lambda[i - 1].ln() + e[l - 1][i - 1] - e[l][i]).exp();
        if rng.random::<f64>() < p {
            chosen.push(i - 1);
            l -= 1;
        }
    }
    if l > 0 {
        return Err(Error::Numerical { msg: "k-DPP eigenvector selection underflowed".into(), jitter: 0.0 });
    }

    let mut cols: Vec<Vec<f64>> = chosen.iter().map(|&c| (0..n).map(|r| u[(r, c)]).collect()).collect();
    let mut picked = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    while !cols.is_empty() {
        let weights: Vec<f64> = (0..n)
            .map(|i| if taken[i] { 0.0 } else { cols.iter().map(|c| c[i] * c[i]).sum() })
            .collect();
        let total: f64 = weights.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut item = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
        for (i, &w) in weights.iter().enumerate() {
            if target < w {
                item = i;
                break;
            }
            target -= w;
        }
        picked.push(item);
        taken[item] = true;

        // Restrict the span to vectors vanishing at `item`.
        let pivot = (0..cols.len())
            .max_by(|&a, &b| cols[a][item].abs().total_cmp(&cols[b][item].abs()))
            .expect("nonempty");
        let v = cols.swap_remove(pivot);
        for c in cols.iter_mut() {
            let ratio = c[item] / v[item];
            for (ci, vi) in c.iter_mut().zip(&v) {
                *ci -= ratio * vi;
            }
        }
        gram_schmidt(&mut cols);
        if cols.len() + picked.len() < k {
            return Err(Error::Numerical { msg: "k-DPP projection lost rank".into(), jitter: 0.0 });
        }
    }
    picked.sort_unstable();
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use faer::Mat;

    #[test]
    fn esp_matches_direct_sums() {
        let lam = [1.0, 2.0, 3.0];
        let e = elementary_symmetric_log(&lam, 3);
        assert!((e[1][3].exp() - 6.0).abs() < 1e-12);
        assert!((e[2][3].exp() - 11.0).abs() < 1e-12);
        assert!((e[3][3].exp() - 6.0).abs() < 1e-12);
        assert_eq!(e[2][1], f64::NEG_INFINITY);
    }

    #[test]
    fn diagonal_kernel_single_pick() {
        let k = Mat::from_fn(2, 2, |i, j| if i == j { [1.0, 3.0][i] } else { 0.0 });
        let mut rng = substream(1, &[]);
        let draws = 100_000;
        let ones = (0..draws).filter(|_| kdpp_sample(k.as_ref(), 1, &mut rng).unwrap() == vec![0]).count();
        assert!((ones as f64 / draws as f64 - 0.25).abs() < 0.01);
    }

    #[test]
    fn full_set_and_errors() {
        let k = Mat::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.2 });
        let mut rng = substream(2, &[]);
        assert_eq!(kdpp_sample(k.as_ref(), 3, &mut rng).unwrap(), vec![0, 1, 2]);
        assert!(kdpp_sample(k.as_ref(), 4, &mut rng).is_err());
        let rank_one = Mat::from_fn(3, 3, |_, _| 1.0);
        assert!(matches!(kdpp_sample(rank_one.as_ref(), 2, &mut rng), Err(Error::Numerical { .. })));
    }
}

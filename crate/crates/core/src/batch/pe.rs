//! Greedy pure exploration: repeatedly take the candidate with the largest
//! variance conditioned (noise-free) on the ones already taken. This is a
//! pivoted Cholesky factorization of the candidate covariance, and maximizes
//! the log-determinant greedily.

use faer::MatRef;

use crate::error::{input, Result};

/// Pick `k` indices from the covariance `cov`; ties go to the lowest index.
pub fn pe_greedy_select(cov: MatRef<'_, f64>, k: usize) -> Result<Vec<usize>> {
    let n = cov.nrows();
    if cov.ncols() != n {
        return input("covariance must be square");
    }
    if k > n {
        return input(format!("cannot pick {k} items from {n}"));
    }
    let mut var: Vec<f64> = (0..n).map(|i| cov[(i, i)]).collect();
    let mut taken = vec![false; n];
    // Rows of the partial Cholesky factor, one column per pick.
    let mut factor: Vec<Vec<f64>> = vec![Vec::with_capacity(k); n];
    let mut picks = Vec::with_capacity(k);
    for _ in 0..k {
        let mut p = usize::MAX;
        for i in 0..n {
            if !taken[i] && (p == usize::MAX || var[i] > var[p]) {
                p = i;
            }
        }
        taken[p] = true;
        picks.push(p);
        let pivot = var[p].max(0.0).sqrt();
        let row_p = factor[p].clone();
        for i in 0..n {
            let l = if taken[i] && i != p {
                0.0
            } else if pivot > 0.0 {
                let dot: f64 = factor[i].iter().zip(&row_p).map(|(a, b)| a * b).sum();
                (cov[(i, p)] - dot) / pivot
            } else {
                0.0
            };
            factor[i].push(l);
            if !taken[i] {
                var[i] -= l * l;
            }
        }
    }
    Ok(picks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    #[test]
    fn first_pick_is_max_variance_and_ties_go_low() {
        let c = Mat::from_fn(3, 3, |i, j| if i == j { [1.0, 4.0, 4.0][i] } else { 0.0 });
        assert_eq!(pe_greedy_select(c.as_ref(), 1).unwrap(), vec![1]);
        assert_eq!(pe_greedy_select(c.as_ref(), 3).unwrap(), vec![1, 2, 0]);
        assert!(pe_greedy_select(c.as_ref(), 4).is_err());
    }

    #[test]
    fn duplicates_are_not_picked_twice() {
        // Points 0 and 1 are identical; point 2 is weakly correlated.
        let c = Mat::from_fn(3, 3, |i, j| match (i.min(j), i.max(j)) {
            (0, 0) | (1, 1) | (0, 1) => 2.0,
            (2, 2) => 1.0,
            _ => 0.1,
        });
        let picks = pe_greedy_select(c.as_ref(), 2).unwrap();
        assert_eq!(picks, vec![0, 2]);
    }
}

//! Agreement between a learned decomposition and the true one, counted over
//! unordered dimension pairs. All scores ignore group labels.

use super::Decomposition;
use crate::error::{input, Result};

struct PairCounts {
    /// Together in the truth and in the estimate.
    together_both: usize,
    together_truth: usize,
    apart_both: usize,
    apart_truth: usize,
}

fn pair_counts(z: &Decomposition, truth: &Decomposition) -> Result<PairCounts> {
    if z.dim() != truth.dim() {
        return input(format!("decompositions differ in dimension ({} vs {})", z.dim(), truth.dim()));
    }
    let mut c = PairCounts { together_both: 0, together_truth: 0, apart_both: 0, apart_truth: 0 };
    let (a, b) = (z.assignment(), truth.assignment());
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let est = a[i] == a[j];
            if b[i] == b[j] {
                c.together_truth += 1;
                c.together_both += usize::from(est);
            } else {
                c.apart_truth += 1;
                c.apart_both += usize::from(!est);
            }
        }
    }
    Ok(c)
}

/// Fraction of pairs on which both decompositions agree (together or apart).
pub fn rand_index(z: &Decomposition, truth: &Decomposition) -> Result<f64> {
    if truth.dim() < 2 {
        return input("rand index needs at least two dimensions");
    }
    let c = pair_counts(z, truth)?;
    let pairs = c.together_truth + c.apart_truth;
    Ok((c.together_both + c.apart_both) as f64 / pairs as f64)
}

/// Fraction of truly grouped pairs that `z` also groups; `None` when the truth
/// has no grouped pair.
pub fn grouped_together_rate(z: &Decomposition, truth: &Decomposition) -> Result<Option<f64>> {
    let c = pair_counts(z, truth)?;
    Ok((c.together_truth > 0).then(|| c.together_both as f64 / c.together_truth as f64))
}

/// Fraction of truly separated pairs that `z` also separates; `None` when the
/// truth is a single group.
pub fn separated_rate(z: &Decomposition, truth: &Decomposition) -> Result<Option<f64>> {
    let c = pair_counts(z, truth)?;
    Ok((c.apart_truth > 0).then(|| c.apart_both as f64 / c.apart_truth as f64))
}

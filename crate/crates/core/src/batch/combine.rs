use rand::seq::SliceRandom;

use crate::error::{input, Result};
use crate::rng::Rng;

/// The points chosen for one group, in the group's own coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupSelection {
    pub dims: Vec<usize>,
    pub points: Vec<Vec<f64>>,
}

fn check(selections: &[GroupSelection], d: usize) -> Result<usize> {
    let Some(first) = selections.first() else {
        return input("no group selections to combine");
    };
    let count = first.points.len();
    let mut covered = vec![false; d];
    for s in selections {
        if s.points.len() != count {
            return input("every group must contribute the same number of points");
        }
        if s.points.iter().any(|p| p.len() != s.dims.len()) {
            return input("selected point does not match its group's dimensions");
        }
        for &j in &s.dims {
            if j >= d || covered[j] {
                return input("groups must partition the dimensions");
            }
            covered[j] = true;
        }
    }
    if covered.iter().any(|c| !c) {
        return input("groups must cover every dimension");
    }
    Ok(count)
}

fn assemble(selections: &[GroupSelection], d: usize, orders: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let count = orders.first().map_or(0, Vec::len);
    (0..count)
        .map(|i| {
            let mut x = vec![0.0; d];
            for (s, order) in selections.iter().zip(orders) {
                for (&j, &v) in s.dims.iter().zip(&s.points[order[i]]) {
                    x[j] = v;
                }
            }
            x
        })
        .collect()
}

/// Full points whose group-`m` block is a uniformly random permutation of
/// group `m`'s selections, independently per group.
pub fn combine_random(selections: &[GroupSelection], d: usize, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
    let count = check(selections, d)?;
    let orders: Vec<Vec<usize>> = selections
        .iter()
        .map(|_| {
            let mut order: Vec<usize> = (0..count).collect();
            order.shuffle(rng);
            order
        })
        .collect();
    Ok(assemble(selections, d, &orders))
}

/// Full points built by taking, for the `i`-th point, each group's remaining
/// selection with the highest score. `scores[m][i]` belongs to
/// `selections[m].points[i]`; ties go to the lower index.
pub fn combine_quality(selections: &[GroupSelection], scores: &[Vec<f64>], d: usize) -> Result<Vec<Vec<f64>>> {
    check(selections, d)?;
    if scores.len() != selections.len() || scores.iter().zip(selections).any(|(s, g)| s.len() != g.points.len()) {
        return input("one score per selected point is required");
    }
    let orders: Vec<Vec<usize>> = scores
        .iter()
        .map(|s| {
            let mut order: Vec<usize> = (0..s.len()).collect();
            order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
            order
        })
        .collect();
    Ok(assemble(selections, d, &orders))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;

    fn sel() -> Vec<GroupSelection> {
        vec![
            GroupSelection { dims: vec![1], points: vec![vec![0.1], vec![0.2], vec![0.3]] },
            GroupSelection { dims: vec![0, 2], points: vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]] },
        ]
    }

    #[test]
    fn random_preserves_each_group_multiset() {
        let s = sel();
        for seed in 0..100 {
            let out = combine_random(&s, 3, &mut substream(seed, &[])).unwrap();
            let mut a: Vec<f64> = out.iter().map(|x| x[1]).collect();
            a.sort_by(f64::total_cmp);
            assert_eq!(a, vec![0.1, 0.2, 0.3]);
            let mut b: Vec<(f64, f64)> = out.iter().map(|x| (x[0], x[2])).collect();
            b.sort_by(|p, q| p.0.total_cmp(&q.0));
            assert_eq!(b, vec![(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)]);
        }
    }

    #[test]
    fn quality_pairs_best_with_best() {
        let s = sel();
        let out = combine_quality(&s, &[vec![0.0, 2.0, 1.0], vec![5.0, 5.0, 9.0]], 3).unwrap();
        assert_eq!(out[0], vec![5.0, 0.2, 6.0]);
        assert_eq!(out[1], vec![1.0, 0.3, 2.0]);
        assert_eq!(out[2], vec![3.0, 0.1, 4.0]);
    }

    #[test]
    fn mismatched_inputs_are_rejected() {
        let mut s = sel();
        s[0].points.pop();
        assert!(combine_random(&s, 3, &mut substream(0, &[])).is_err());
        assert!(combine_random(&sel(), 4, &mut substream(0, &[])).is_err());
        assert!(combine_quality(&sel(), &[vec![0.0; 3]], 3).is_err());
    }
}

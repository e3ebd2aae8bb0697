use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Assignment of each input dimension to one of `M = D` group slots.
///
/// Labels are 0-based. Empty slots are allowed and contribute nothing to the
/// additive kernel.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Decomposition {
    assignment: Vec<usize>,
}

impl Decomposition {
    pub fn new(assignment: Vec<usize>) -> Result<Self> {
        let d = assignment.len();
        if d == 0 {
            return input("decomposition needs at least one dimension");
        }
        if let Some(&bad) = assignment.iter().find(|&&m| m >= d) {
            return input(format!("group label {bad} out of range for D = {d}"));
        }
        Ok(Self { assignment })
    }

    /// Every dimension in its own group.
    pub fn fully_partitioned(d: usize) -> Self {
        Self { assignment: (0..d).collect() }
    }

    /// One group holding all dimensions.
    pub fn single_group(d: usize) -> Self {
        Self { assignment: vec![0; d] }
    }

    /// Build from explicit groups of dimension indices, labelled in order.
    pub fn from_groups(d: usize, groups: &[Vec<usize>]) -> Result<Self> {
        let mut assignment = vec![usize::MAX; d];
        for (m, g) in groups.iter().enumerate() {
            for &j in g {
                if j >= d || assignment[j] != usize::MAX {
                    return input(format!("dimension {j} missing or assigned twice"));
                }
                assignment[j] = m;
            }
        }
        if assignment.contains(&usize::MAX) {
            return input("groups do not cover every dimension");
        }
        Self::new(assignment)
    }

    pub fn dim(&self) -> usize {
        self.assignment.len()
    }

    /// Number of group slots (always equal to the dimension).
    pub fn slots(&self) -> usize {
        self.assignment.len()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn label(&self, j: usize) -> usize {
        self.assignment[j]
    }

    pub fn set(&mut self, j: usize, m: usize) {
        assert!(m < self.slots(), "group label out of range");
        self.assignment[j] = m;
    }

    /// Members of every slot, in ascending dimension order. Length `M`.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.slots()];
        for (j, &m) in self.assignment.iter().enumerate() {
            groups[m].push(j);
        }
        groups
    }

    /// `(label, members)` for each nonempty slot, by ascending label.
    pub fn nonempty_groups(&self) -> Vec<(usize, Vec<usize>)> {
        self.groups()
            .into_iter()
            .enumerate()
            .filter(|(_, g)| !g.is_empty())
            .collect()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.slots()];
        for &m in &self.assignment {
            sizes[m] += 1;
        }
        sizes
    }

    pub fn num_nonempty(&self) -> usize {
        self.group_sizes().iter().filter(|&&s| s > 0).count()
    }

    pub fn max_group_size(&self) -> usize {
        self.group_sizes().into_iter().max().unwrap_or(0)
    }

    /// Relabel so that groups are numbered by first appearance.
    pub fn canonical(&self) -> Self {
        let mut map = vec![usize::MAX; self.slots()];
        let mut next = 0;
        let assignment = self
            .assignment
            .iter()
            .map(|&m| {
                if map[m] == usize::MAX {
                    map[m] = next;
                    next += 1;
                }
                map[m]
            })
            .collect();
        Self { assignment }
    }

    /// True when both induce the same partition, ignoring labels.
    pub fn same_partition(&self, other: &Self) -> bool {
        self.canonical() == other.canonical()
    }

    /// Apply a permutation of slot labels: label `m` becomes `perm[m]`.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.slots() {
            return input("label permutation has the wrong length");
        }
        Self::new(self.assignment.iter().map(|&m| perm[m]).collect())
    }

    /// Groups are disjoint and cover `0..D`; holds by construction but is
    /// checked explicitly by the invariant tests.
    pub fn is_valid_partition(&self) -> bool {
        let groups = self.groups();
        let mut seen = vec![false; self.dim()];
        for g in &groups {
            for &j in g {
                if seen[j] {
                    return false;
                }
                seen[j] = true;
            }
        }
        seen.into_iter().all(|s| s) && groups.len() == self.dim()
    }
}

impl TryFrom<Vec<usize>> for Decomposition {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Decomposition> for Vec<usize> {
    fn from(d: Decomposition) -> Self {
        d.assignment
    }
}

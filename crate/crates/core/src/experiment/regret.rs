use serde::{Deserialize, Serialize};

/// Per-round regret series.
///
/// `immediate[t] = max f − f(x_t)` (for a batch, the best point of the batch),
/// `simple[t] = min_{τ≤t} immediate[τ]`, and
/// `averaged_cumulative[t] = mean_{τ≤t} immediate[τ]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RegretTrace {
    pub immediate: Vec<f64>,
    pub simple: Vec<f64>,
    pub averaged_cumulative: Vec<f64>,
}

impl RegretTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, regret: f64) {
        let simple = self.simple.last().map_or(regret, |&s| s.min(regret));
        let t = self.immediate.len() as f64;
        let avg = self.averaged_cumulative.last().map_or(regret, |&a| (a * t + regret) / (t + 1.0));
        self.immediate.push(regret);
        self.simple.push(simple);
        self.averaged_cumulative.push(avg);
    }

    pub fn from_immediate(immediate: &[f64]) -> Self {
        let mut trace = Self::new();
        for &r in immediate {
            trace.push(r);
        }
        trace
    }

    pub fn len(&self) -> usize {
        self.immediate.len()
    }

    pub fn is_empty(&self) -> bool {
        self.immediate.is_empty()
    }

    pub fn final_simple(&self) -> Option<f64> {
        self.simple.last().copied()
    }

    pub fn truncated(&self, t: usize) -> Self {
        Self {
            immediate: self.immediate[..t].to_vec(),
            simple: self.simple[..t].to_vec(),
            averaged_cumulative: self.averaged_cumulative[..t].to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_min_and_mean() {
        let t = RegretTrace::from_immediate(&[3.0, 1.0, 2.0, 0.5]);
        assert_eq!(t.simple, vec![3.0, 1.0, 1.0, 0.5]);
        assert_eq!(t.averaged_cumulative, vec![3.0, 2.0, 2.0, 1.625]);
        for i in 0..t.len() {
            assert!(t.averaged_cumulative[i] >= t.simple[i]);
        }
        assert_eq!(t.final_simple(), Some(0.5));
        assert_eq!(t.truncated(2).immediate, vec![3.0, 1.0]);
    }
}

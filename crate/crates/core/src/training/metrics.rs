use std::fmt;

use crate::error::{invalid, Result};
use crate::graph::HeteroGraph;
use crate::rgcn::{forward_pass, ModelParams};

/// Confusion counts and derived rates; `0/0` rates are reported as 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            precision,
            recall,
            f1,
            tp,
            fp,
            tn,
            fn_,
        }
    }

    /// Tallies `(predicted, actual)` pairs.
    pub fn from_predictions(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (pred, actual) in pairs {
            match (pred, actual) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        Self::from_counts(tp, fp, tn, fn_)
    }

    /// Scores `p >= threshold` as fraud over the selected transactions.
    pub fn from_scores(scores: &[f64], labels: &[bool], indices: &[usize], threshold: f64) -> Result<Self> {
        if indices.is_empty() {
            return Err(invalid("cannot evaluate an empty index set"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= scores.len() || i >= labels.len()) {
            return Err(invalid(format!("transaction index {bad} out of range")));
        }
        Ok(Self::from_predictions(
            indices.iter().map(|&i| (scores[i] >= threshold, labels[i])),
        ))
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// `key = value` lines, one per field.
    pub fn to_kv(&self) -> String {
        format!(
            "accuracy = {}\nprecision = {}\nrecall = {}\nf1 = {}\ntp = {}\nfp = {}\ntn = {}\nfn = {}\n",
            self.accuracy, self.precision, self.recall, self.f1, self.tp, self.fp, self.tn, self.fn_
        )
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_kv())
    }
}

/// Classification metrics of `params` on the given transactions.
pub fn evaluate(graph: &HeteroGraph, params: &ModelParams, edge_indices: &[usize], threshold: f64) -> Result<Metrics> {
    if edge_indices.is_empty() {
        return Err(invalid("cannot evaluate an empty index set"));
    }
    let scores = forward_pass(graph, params)?.probabilities();
    Metrics::from_scores(&scores, graph.edge_labels(), edge_indices, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictor() {
        let labels = [true, false, false, true];
        let m = Metrics::from_predictions(labels.iter().map(|&y| (y, y)));
        assert_eq!(m.accuracy, 1.0);
        assert_eq!((m.fp, m.fn_), (0, 0));
        assert_eq!(m.f1, 1.0);
    }

    #[test]
    fn all_legit_on_rare_fraud() {
        let labels: Vec<bool> = (0..1000).map(|i| i == 500).collect();
        let m = Metrics::from_predictions(labels.iter().map(|&y| (false, y)));
        assert_eq!(m.accuracy, 0.999);
        assert_eq!(m.recall, 0.0);
        assert_eq!(m.precision, 0.0);
    }

    #[test]
    fn twenty_edge_tally() {
        let scores = [
            0.9, 0.8, 0.2, 0.6, 0.1, 0.05, 0.7, 0.4, 0.5, 0.3, 0.95, 0.0, 0.55, 0.45, 0.2, 0.99, 0.01, 0.6, 0.3, 0.49,
        ];
        let labels = [
            true, true, true, false, false, false, true, true, false, false, true, false, false, true, false, true,
            false, true, false, false,
        ];
        // By hand at 0.5: predicted positive at 0,1,3,6,8,10,12,15,17.
        // tp: 0,1,6,10,15,17 = 6; fp: 3,8,12 = 3; fn: 2,7,13 = 3; tn = 8.
        let idx: Vec<usize> = (0..20).collect();
        let m = Metrics::from_scores(&scores, &labels, &idx, 0.5).unwrap();
        assert_eq!((m.tp, m.fp, m.tn, m.fn_), (6, 3, 8, 3));
        assert_eq!(m.accuracy, 14.0 / 20.0);
    }

    #[test]
    fn empty_index_set_errors() {
        assert!(Metrics::from_scores(&[0.5], &[true], &[], 0.5).is_err());
    }

    proptest! {
        #[test]
        fn identities(tp in 0u64..500, fp in 0u64..500, tn in 0u64..500, fn_ in 0u64..500) {
            prop_assume!(tp + fp + tn + fn_ > 0);
            let m = Metrics::from_counts(tp, fp, tn, fn_);
            prop_assert_eq!(m.total(), tp + fp + tn + fn_);
            prop_assert!(((m.precision * (tp + fp) as f64) - tp as f64).abs() < 1e-9);
            prop_assert!(((m.recall * (tp + fn_) as f64) - tp as f64).abs() < 1e-9);
            for v in [m.accuracy, m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}

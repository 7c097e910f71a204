use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::graph::HeteroGraph;

/// Disjoint train/test partition of transaction indices, each side sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified split of transactions by label.
pub fn split_edges(graph: &HeteroGraph, ratio: f64, seed: u64) -> Result<SplitSpec> {
    split_labels(graph.edge_labels(), ratio, seed)
}

/// Positives and negatives are shuffled independently and each class sends
/// `floor(count * ratio)` members to train, adjusted so that a class with at
/// least two members is present on both sides.
pub fn split_labels(labels: &[bool], ratio: f64, seed: u64) -> Result<SplitSpec> {
    if labels.len() < 2 {
        return Err(invalid(format!("need at least 2 transactions to split, got {}", labels.len())));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(invalid(format!("split ratio {ratio} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n = idx.len();
        // Tolerance keeps products like 0.29 * 100 from flooring to 28.
        let mut k = ((n as f64) * ratio + 1e-9).floor() as usize;
        if n >= 2 {
            k = k.clamp(1, n - 1);
        }
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitSpec { train, test })
}

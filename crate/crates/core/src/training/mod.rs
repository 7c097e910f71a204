//! Full-batch training: focal loss, Adam, stratified splits and metrics.

mod adam;
mod focal;
mod metrics;
mod split;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use focal::{focal_loss, focal_loss_logit};
pub use metrics::{evaluate, Metrics};
pub use split::{split_edges, split_labels, SplitSpec};

use std::io::Write;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::HeteroGraph;
use crate::rgcn::{forward_pass, ModelConfig, ModelParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub focal_alpha: f64,
    pub focal_gamma: f64,
    pub split_ratio: f64,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub threshold: f64,
    #[serde(skip)]
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            learning_rate: 0.005,
            focal_alpha: 0.25,
            focal_gamma: 2.0,
            split_ratio: 0.8,
            seed: 42,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            threshold: 0.5,
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(invalid(what.to_string())) };
        check(self.epochs >= 1, "epochs must be >= 1")?;
        check(self.learning_rate > 0.0, "learning_rate must be > 0")?;
        check(self.focal_alpha > 0.0 && self.focal_alpha <= 1.0, "focal_alpha must be in (0, 1]")?;
        check(self.focal_gamma >= 0.0, "focal_gamma must be >= 0")?;
        check(self.split_ratio > 0.0 && self.split_ratio < 1.0, "split_ratio must be in (0, 1)")?;
        check(self.threshold > 0.0 && self.threshold < 1.0, "threshold must be in (0, 1)")?;
        check((0.0..1.0).contains(&self.adam_beta1), "adam_beta1 must be in [0, 1)")?;
        check((0.0..1.0).contains(&self.adam_beta2), "adam_beta2 must be in [0, 1)")?;
        check(self.adam_epsilon > 0.0, "adam_epsilon must be > 0")?;
        check(self.model.embed_dim > 0, "embed_dim must be > 0")?;
        check(self.model.layer_dims.iter().all(|&d| d > 0), "layer widths must be > 0")
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
    /// Wall-clock time of each epoch.
    pub elapsed: Vec<Duration>,
    /// Test-split metrics of the final parameters at the configured threshold.
    pub final_metrics: Metrics,
    pub split: SplitSpec,
}

impl TrainHistory {
    pub fn train_losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.train_loss).collect()
    }

    /// Writes `epoch,train_loss,test_loss` rows.
    pub fn write_csv<W: Write>(&self, mut sink: W) -> Result<()> {
        writeln!(sink, "epoch,train_loss,test_loss")?;
        for r in &self.records {
            writeln!(sink, "{},{},{}", r.epoch, r.train_loss, r.test_loss)?;
        }
        Ok(())
    }
}

/// Means of consecutive non-overlapping windows of `values`; a trailing
/// partial window is averaged over its own length.
pub fn window_means(values: &[f64], window: usize) -> Vec<f64> {
    values
        .chunks(window.max(1))
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

/// Mean focal loss over `indices` and its gradient with respect to every
/// transaction logit (zero outside `indices`).
pub fn batch_focal(logits: &[f64], labels: &[bool], indices: &[usize], alpha: f64, gamma: f64) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; logits.len()];
    if indices.is_empty() {
        return (0.0, grad);
    }
    let inv = 1.0 / indices.len() as f64;
    let mut total = 0.0;
    for &e in indices {
        let (l, d) = focal_loss_logit(logits[e], labels[e], alpha, gamma);
        total += l;
        grad[e] = d * inv;
    }
    (total * inv, grad)
}

/// Splits the transactions with `config.seed` and trains on the train side.
pub fn train(graph: &HeteroGraph, config: &TrainConfig) -> Result<(ModelParams, TrainHistory)> {
    config.validate()?;
    let split = split_edges(graph, config.split_ratio, config.seed)?;
    train_with_split(graph, config, split)
}

/// Full-batch training: each epoch is one forward pass over the whole graph,
/// the mean focal loss over train transactions, one backward pass and one
/// Adam step. Test loss is measured with the same pre-step parameters.
pub fn train_with_split(
    graph: &HeteroGraph,
    config: &TrainConfig,
    split: SplitSpec,
) -> Result<(ModelParams, TrainHistory)> {
    config.validate()?;
    let labels = graph.edge_labels();
    let has = |class: bool| split.train.iter().any(|&i| labels[i] == class);
    if !has(true) || !has(false) {
        return Err(invalid("training split must contain both fraud and legitimate transactions"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut params = ModelParams::init(
        graph.num_cards(),
        graph.num_merchants(),
        graph.feature_dim(),
        &config.model,
        &mut rng,
    );
    let mut state = AdamState::new(&params);
    let hyper = config.adam();
    let (alpha, gamma) = (config.focal_alpha, config.focal_gamma);

    let mut records = Vec::with_capacity(config.epochs);
    let mut elapsed = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let started = Instant::now();
        let fp = forward_pass(graph, &params)?;
        let logits = fp.logits();
        let (train_loss, upstream) = batch_focal(&logits, labels, &split.train, alpha, gamma);
        let (test_loss, _) = batch_focal(&logits, labels, &split.test, alpha, gamma);
        if !train_loss.is_finite() || !test_loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        let grads = fp.backward(graph, &params, &upstream)?;
        adam_step(&mut params, &grads, &mut state, &hyper)?;
        records.push(EpochRecord {
            epoch,
            train_loss,
            test_loss,
        });
        elapsed.push(started.elapsed());
    }

    let eval_on = if split.test.is_empty() { &split.train } else { &split.test };
    let final_metrics = evaluate(graph, &params, eval_on, config.threshold)?;
    Ok((
        params,
        TrainHistory {
            records,
            elapsed,
            final_metrics,
            split,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { epochs: 0, ..Default::default() },
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { split_ratio: 1.0, ..Default::default() },
            TrainConfig { focal_alpha: 0.0, ..Default::default() },
            TrainConfig { threshold: 1.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn windows() {
        assert_eq!(window_means(&[1.0, 3.0, 5.0, 7.0, 9.0], 2), vec![2.0, 6.0, 9.0]);
    }

    #[test]
    fn batch_focal_scales_by_count() {
        let (l, g) = batch_focal(&[0.0, 0.0, 5.0], &[true, false, true], &[0, 1], 0.5, 0.0);
        assert!((l - std::f64::consts::LN_2 * 0.5).abs() < 1e-15);
        assert_eq!(g[2], 0.0);
        assert!((g[0] + 0.125).abs() < 1e-15);
        assert!((g[1] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn history_csv() {
        let h = TrainHistory {
            records: vec![
                EpochRecord { epoch: 1, train_loss: 0.5, test_loss: 0.25 },
                EpochRecord { epoch: 2, train_loss: 0.125, test_loss: 0.0625 },
            ],
            elapsed: vec![],
            final_metrics: Metrics::from_counts(1, 0, 1, 0),
            split: SplitSpec { train: vec![0], test: vec![1] },
        };
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "epoch,train_loss,test_loss\n1,0.5,0.25\n2,0.125,0.0625\n");
    }
}

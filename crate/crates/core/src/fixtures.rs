//! Small reproducible inputs shared by tests, the CLI and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::HeteroGraph;
use crate::numerics::{check_gradients, GradReport, Matrix};
use crate::rgcn::{forward_pass, ModelConfig, ModelParams};
use crate::synthgen::GenConfig;
use crate::training::{batch_focal, TrainConfig};

/// Card/merchant pairs of the toy graph. Card 0 pays merchant 0 twice.
pub const TOY_PAYS: [(usize, usize); 8] = [(0, 0), (0, 1), (1, 1), (1, 2), (2, 0), (2, 2), (0, 0), (1, 0)];
pub const TOY_LABELS: [bool; 8] = [false, true, false, false, true, false, false, true];
pub const TOY_FEATURE_DIM: usize = 5;

/// Three cards, three merchants, eight transactions with features drawn
/// uniformly from [-1, 1).
pub fn toy_graph(seed: u64) -> HeteroGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..TOY_PAYS.len() * TOY_FEATURE_DIM)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let features = Matrix::from_vec(TOY_PAYS.len(), TOY_FEATURE_DIM, data).expect("toy feature shape");
    HeteroGraph::from_parts(
        vec!["c0".into(), "c1".into(), "c2".into()],
        vec![100, 101, 102],
        &TOY_PAYS,
        features,
        TOY_LABELS.to_vec(),
        true,
    )
    .expect("toy graph is well formed")
}

pub fn toy_model_config() -> ModelConfig {
    ModelConfig {
        embed_dim: 4,
        layer_dims: vec![5, 3],
    }
}

/// Parameters for `graph` under `config` with every entry, biases included,
/// drawn uniformly from [-0.5, 0.5) so no gradient is trivially zero.
pub fn toy_params(graph: &HeteroGraph, config: &ModelConfig, seed: u64) -> ModelParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut params = ModelParams::init(graph.num_cards(), graph.num_merchants(), graph.feature_dim(), config, &mut rng);
    for layer in &mut params.layers {
        for rel in &mut layer.relations {
            rel.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        }
    }
    params.head_bias = rng.random_range(-0.5..0.5);
    params
}

/// Mean focal loss over every transaction of `graph`.
pub fn full_batch_loss(graph: &HeteroGraph, params: &ModelParams, config: &TrainConfig) -> Result<f64> {
    let all: Vec<usize> = (0..graph.num_transactions()).collect();
    let logits = forward_pass(graph, params)?.logits();
    Ok(batch_focal(&logits, graph.edge_labels(), &all, config.focal_alpha, config.focal_gamma).0)
}

/// Finite-difference check of every parameter on the toy graph.
pub fn toy_gradcheck(seed: u64, epsilon: f64, tolerance: f64) -> Result<GradReport> {
    let graph = toy_graph(seed);
    let params = toy_params(&graph, &toy_model_config(), seed);
    let config = TrainConfig::default();
    let all: Vec<usize> = (0..graph.num_transactions()).collect();
    let fp = forward_pass(&graph, &params)?;
    let (_, upstream) = batch_focal(&fp.logits(), graph.edge_labels(), &all, config.focal_alpha, config.focal_gamma);
    let analytic = fp.backward(&graph, &params, &upstream)?;
    check_gradients(
        |p: &ModelParams| full_batch_loss(&graph, p, &config).unwrap_or(f64::NAN),
        &params,
        &analytic,
        epsilon,
        tolerance,
    )
}

/// A 50-transaction corpus whose fraud rows are far from the legitimate ones.
pub fn overfit_gen_config() -> GenConfig {
    GenConfig {
        n_cards: 10,
        n_merchants: 8,
        n_transactions: 50,
        fraud_rate: 0.2,
        hot_merchant_fraction: 0.25,
        hot_odds_ratio: 10.0,
        signal_strength: 3.0,
        seed: 11,
    }
}

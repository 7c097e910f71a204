//! Relational graph convolution model with an edge-classification head.
//!
//! Node states start from learnable card/merchant embeddings, pass through
//! the stacked relational layers, and each transaction is scored from the
//! concatenation of its card state, merchant state and encoded features.

mod layer;
mod model;

pub use layer::{layer_backward, layer_forward, LayerCache};
pub use model::{
    edge_scores, forward_pass, logistic, model_backward, model_forward, ForwardPass, LOGIT_CLAMP,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape, Result};
use crate::graph::{HeteroGraph, Relation};
use crate::numerics::{xavier_init, Matrix, ParamSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    /// Width of the initial node embeddings.
    pub embed_dim: usize,
    /// Output width of each relational layer; its length is the depth.
    pub layer_dims: Vec<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed_dim: 32,
            layer_dims: vec![32, 32],
        }
    }
}

impl ModelConfig {
    pub fn output_dim(&self) -> usize {
        self.layer_dims.last().copied().unwrap_or(self.embed_dim)
    }
}

/// Weight (`d_in × d_out`) and bias (`d_out`) of one relation in one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationParams {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

/// One relational layer; `relations[r.index()]` holds relation `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub relations: [RelationParams; 3],
}

impl LayerParams {
    pub fn zeros(d_in: usize, d_out: usize) -> Self {
        let rp = || RelationParams {
            weight: Matrix::zeros(d_in, d_out),
            bias: vec![0.0; d_out],
        };
        Self {
            relations: [rp(), rp(), rp()],
        }
    }

    pub fn relation(&self, r: Relation) -> &RelationParams {
        &self.relations[r.index()]
    }

    pub fn relation_mut(&mut self, r: Relation) -> &mut RelationParams {
        &mut self.relations[r.index()]
    }

    pub fn d_in(&self) -> usize {
        self.relations[0].weight.rows()
    }

    pub fn d_out(&self) -> usize {
        self.relations[0].weight.cols()
    }

    fn validate(&self) -> Result<()> {
        let (i, o) = self.relations[0].weight.shape();
        for rp in &self.relations {
            if rp.weight.shape() != (i, o) || rp.bias.len() != o {
                return Err(shape("relation parameters disagree within a layer"));
            }
        }
        Ok(())
    }
}

/// All learnable parameters. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub card_embeddings: Matrix,
    pub merchant_embeddings: Matrix,
    pub layers: Vec<LayerParams>,
    /// Length `2 * output_dim + feature_dim`: card part, merchant part, features.
    pub head_weights: Vec<f64>,
    pub head_bias: f64,
}

impl ModelParams {
    /// Xavier-initialised weights and embeddings, zero biases.
    pub fn init<R: Rng + ?Sized>(
        num_cards: usize,
        num_merchants: usize,
        feature_dim: usize,
        config: &ModelConfig,
        rng: &mut R,
    ) -> Self {
        let d0 = config.embed_dim;
        let card_embeddings = xavier_init(num_cards.max(1), d0, rng).slice_rows(0, num_cards);
        let merchant_embeddings =
            xavier_init(num_merchants.max(1), d0, rng).slice_rows(0, num_merchants);
        let mut layers = Vec::with_capacity(config.layer_dims.len());
        let mut d_in = d0;
        for &d_out in &config.layer_dims {
            let mut lp = LayerParams::zeros(d_in, d_out);
            for rp in &mut lp.relations {
                rp.weight = xavier_init(d_in, d_out, rng);
            }
            layers.push(lp);
            d_in = d_out;
        }
        let head_dim = 2 * d_in + feature_dim;
        let head_weights = xavier_init(1, head_dim, rng).into_data();
        Self {
            card_embeddings,
            merchant_embeddings,
            layers,
            head_weights,
            head_bias: 0.0,
        }
    }

    /// Same shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for seg in z.segments_mut() {
            seg.fill(0.0);
        }
        z
    }

    pub fn embed_dim(&self) -> usize {
        self.card_embeddings.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.embed_dim(), LayerParams::d_out)
    }

    /// Checks internal consistency and agreement with `graph`.
    pub fn validate(&self, graph: &HeteroGraph) -> Result<()> {
        if self.card_embeddings.rows() != graph.num_cards()
            || self.merchant_embeddings.rows() != graph.num_merchants()
        {
            return Err(shape(format!(
                "embeddings cover {}+{} nodes, graph has {}+{}",
                self.card_embeddings.rows(),
                self.merchant_embeddings.rows(),
                graph.num_cards(),
                graph.num_merchants()
            )));
        }
        if self.card_embeddings.cols() != self.merchant_embeddings.cols() {
            return Err(shape("card and merchant embedding widths differ"));
        }
        let mut d = self.embed_dim();
        for (l, lp) in self.layers.iter().enumerate() {
            lp.validate()?;
            if lp.d_in() != d {
                return Err(shape(format!("layer {l} expects width {}, gets {d}", lp.d_in())));
            }
            d = lp.d_out();
        }
        let want = 2 * d + graph.feature_dim();
        if self.head_weights.len() != want {
            return Err(shape(format!(
                "head has {} weights, expected {want}",
                self.head_weights.len()
            )));
        }
        Ok(())
    }

    /// Names of the parameter tensors, in `segments` order.
    pub fn segment_names(&self) -> Vec<String> {
        self.segments().into_iter().map(|(n, _)| n).collect()
    }
}

impl ParamSet for ModelParams {
    fn segments(&self) -> Vec<(String, &[f64])> {
        let mut out = vec![
            ("card_embeddings".to_string(), self.card_embeddings.data()),
            ("merchant_embeddings".to_string(), self.merchant_embeddings.data()),
        ];
        for (l, lp) in self.layers.iter().enumerate() {
            for r in Relation::ALL {
                let rp = lp.relation(r);
                out.push((format!("layers.{l}.{r}.weight"), rp.weight.data()));
                out.push((format!("layers.{l}.{r}.bias"), rp.bias.as_slice()));
            }
        }
        out.push(("head.weight".to_string(), self.head_weights.as_slice()));
        out.push(("head.bias".to_string(), std::slice::from_ref(&self.head_bias)));
        out
    }

    fn segments_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![
            self.card_embeddings.data_mut(),
            self.merchant_embeddings.data_mut(),
        ];
        for lp in &mut self.layers {
            for rp in &mut lp.relations {
                out.push(rp.weight.data_mut());
                out.push(rp.bias.as_mut_slice());
            }
        }
        out.push(self.head_weights.as_mut_slice());
        out.push(std::slice::from_mut(&mut self.head_bias));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_shapes() {
        let cfg = ModelConfig::default();
        let p = ModelParams::init(5, 3, 10, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(p.card_embeddings.shape(), (5, 32));
        assert_eq!(p.merchant_embeddings.shape(), (3, 32));
        assert_eq!(p.layers.len(), 2);
        assert_eq!(p.head_weights.len(), 2 * 32 + 10);
        assert_eq!(p.segments().len(), 2 + 2 * 3 * 2 + 2);
        let z = p.zeros_like();
        assert!(z.segments().iter().all(|(_, s)| s.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn depth_zero_head_uses_embed_width() {
        let cfg = ModelConfig {
            embed_dim: 4,
            layer_dims: vec![],
        };
        let p = ModelParams::init(2, 2, 3, &cfg, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(p.head_weights.len(), 11);
        assert_eq!(p.output_dim(), 4);
    }
}

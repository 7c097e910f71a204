use super::layer::{layer_backward, layer_forward_cached, LayerCache};
use super::ModelParams;
use crate::error::{shape, Result};
use crate::graph::{HeteroGraph, Relation};
use crate::numerics::{dot, relu, Matrix};
use crate::par;

/// Logits are clamped to `±LOGIT_CLAMP` before the logistic so probabilities
/// stay strictly inside (0, 1).
pub const LOGIT_CLAMP: f64 = 30.0;

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Everything the backward pass needs from a forward evaluation.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// `states[0]` is the stacked embedding matrix, `states[l + 1]` the output
    /// of layer `l`.
    pub states: Vec<Matrix>,
    pub caches: Vec<LayerCache>,
    /// Head outputs per transaction before clamping.
    pub raw_logits: Vec<f64>,
}

/// Runs embeddings → layers → head over the whole graph.
pub fn forward_pass(graph: &HeteroGraph, params: &ModelParams) -> Result<ForwardPass> {
    params.validate(graph)?;
    let depth = params.layers.len();
    let mut states = Vec::with_capacity(depth + 1);
    states.push(params.card_embeddings.vstack(&params.merchant_embeddings)?);
    let mut caches = Vec::with_capacity(depth);
    for (l, lp) in params.layers.iter().enumerate() {
        let cache = layer_forward_cached(&states[l], graph, lp)?;
        let next = if l + 1 < depth {
            relu(&cache.pre_activation)
        } else {
            cache.pre_activation.clone()
        };
        caches.push(cache);
        states.push(next);
    }
    let raw_logits = head_logits(graph, states.last().unwrap(), params);
    Ok(ForwardPass {
        states,
        caches,
        raw_logits,
    })
}

fn head_logits(graph: &HeteroGraph, h: &Matrix, params: &ModelParams) -> Vec<f64> {
    let d = h.cols();
    let w = &params.head_weights;
    let (w_card, rest) = w.split_at(d);
    let (w_merchant, w_feat) = rest.split_at(d);
    let x = graph.edge_features();
    par::map_indices(graph.num_transactions(), |e| {
        let (u, v) = graph.pays_endpoints(e);
        dot(w_card, h.row(u.0)) + dot(w_merchant, h.row(v.0)) + dot(w_feat, x.row(e)) + params.head_bias
    })
}

impl ForwardPass {
    pub fn final_states(&self) -> &Matrix {
        self.states.last().unwrap()
    }

    /// Clamped logits.
    pub fn logits(&self) -> Vec<f64> {
        self.raw_logits
            .iter()
            .map(|z| z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP))
            .collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.logits().into_iter().map(logistic).collect()
    }

    /// Gradients of all parameters given `upstream[e] = ∂L/∂logit_e` for the
    /// clamped logit of every transaction.
    pub fn backward(
        &self,
        graph: &HeteroGraph,
        params: &ModelParams,
        upstream: &[f64],
    ) -> Result<ModelParams> {
        let t = graph.num_transactions();
        if upstream.len() != t {
            return Err(shape(format!(
                "{} upstream gradients for {t} transactions",
                upstream.len()
            )));
        }
        let g: Vec<f64> = upstream
            .iter()
            .zip(&self.raw_logits)
            .map(|(&u, &z)| if z.abs() <= LOGIT_CLAMP { u } else { 0.0 })
            .collect();

        let h = self.final_states();
        let d = h.cols();
        let x = graph.edge_features();
        let head_len = params.head_weights.len();
        let head = par::chunked_sum(t, head_len + 1, |start, end, acc| {
            for e in start..end {
                let ge = g[e];
                if ge == 0.0 {
                    continue;
                }
                let (u, v) = graph.pays_endpoints(e);
                let parts = [h.row(u.0), h.row(v.0), x.row(e)];
                let mut off = 0;
                for part in parts {
                    for (a, z) in acc[off..off + part.len()].iter_mut().zip(part) {
                        *a += ge * z;
                    }
                    off += part.len();
                }
                acc[head_len] += ge;
            }
        });

        let mut grads = params.zeros_like();
        grads.head_weights.copy_from_slice(&head[..head_len]);
        grads.head_bias = head[head_len];

        // Each node's share of the head: card states feed the first `d`
        // weights, merchant states the next `d`.
        let nc = graph.num_cards();
        let mut d_h = Matrix::zeros(graph.num_nodes(), d);
        par::for_each_row(d_h.data_mut(), d, |i, row| {
            let (incident, w) = if i < nc {
                (graph.out_neighbors(i, Relation::Pays), &params.head_weights[..d])
            } else {
                (graph.in_neighbors(i, Relation::Pays), &params.head_weights[d..2 * d])
            };
            let total: f64 = incident.iter().map(|&(_, e)| g[e]).sum();
            if total != 0.0 {
                for (o, wv) in row.iter_mut().zip(w) {
                    *o = total * wv;
                }
            }
        });

        let depth = params.layers.len();
        for l in (0..depth).rev() {
            let cache = &self.caches[l];
            let d_pre = if l + 1 < depth {
                let mut m = d_h;
                for (dv, &p) in m.data_mut().iter_mut().zip(cache.pre_activation.data()) {
                    if p <= 0.0 {
                        *dv = 0.0;
                    }
                }
                m
            } else {
                d_h
            };
            let (lg, d_in) = layer_backward(graph, &params.layers[l], cache, &d_pre)?;
            grads.layers[l] = lg;
            d_h = d_in;
        }

        grads.card_embeddings = d_h.slice_rows(0, nc);
        grads.merchant_embeddings = d_h.slice_rows(nc, graph.num_nodes());
        Ok(grads)
    }
}

/// Final node states: ReLU after every layer except the last.
pub fn model_forward(graph: &HeteroGraph, params: &ModelParams) -> Result<Matrix> {
    let mut fp = forward_pass(graph, params)?;
    Ok(fp.states.pop().unwrap())
}

/// Fraud probability of every transaction, computed from `node_states`.
pub fn edge_scores(graph: &HeteroGraph, node_states: &Matrix, params: &ModelParams) -> Result<Vec<f64>> {
    let d = node_states.cols();
    if node_states.rows() != graph.num_nodes()
        || params.head_weights.len() != 2 * d + graph.feature_dim()
    {
        return Err(shape("node states do not match the graph and head"));
    }
    Ok(head_logits(graph, node_states, params)
        .into_iter()
        .map(|z| logistic(z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP)))
        .collect())
}

/// Runs a forward pass and returns parameter gradients for `upstream`
/// (`∂L/∂logit` per transaction).
pub fn model_backward(graph: &HeteroGraph, params: &ModelParams, upstream: &[f64]) -> Result<ModelParams> {
    forward_pass(graph, params)?.backward(graph, params, upstream)
}


use super::LayerParams;
use crate::error::{shape, Result};
use crate::graph::{HeteroGraph, Relation};
use crate::numerics::{mat_vec_into, relu, vec_mat_into, Matrix};
use crate::par;

/// Intermediate values of one layer needed by the backward pass.
#[derive(Debug, Clone)]
pub struct LayerCache {
    /// Per relation, row `i` is the mean of the in-neighbor states of node
    /// `i` under that relation (zero when it has none).
    pub aggregates: [Matrix; 3],
    pub pre_activation: Matrix,
}

/// One relational convolution:
/// `h'_i = σ( Σ_r [ (1/|N_i^r|) Σ_{j∈N_i^r} h_j W_r + b_r ] )`, where the sum
/// runs only over relations in which `i` has at least one in-neighbor.
pub fn layer_forward(
    h: &Matrix,
    graph: &HeteroGraph,
    params: &LayerParams,
    apply_activation: bool,
) -> Result<Matrix> {
    let cache = layer_forward_cached(h, graph, params)?;
    Ok(if apply_activation {
        relu(&cache.pre_activation)
    } else {
        cache.pre_activation
    })
}

pub(crate) fn layer_forward_cached(
    h: &Matrix,
    graph: &HeteroGraph,
    params: &LayerParams,
) -> Result<LayerCache> {
    let n = graph.num_nodes();
    let (d_in, d_out) = (params.d_in(), params.d_out());
    if h.rows() != n || h.cols() != d_in {
        return Err(shape(format!(
            "layer input is {}x{}, expected {n}x{d_in}",
            h.rows(),
            h.cols()
        )));
    }
    for rp in &params.relations {
        if rp.weight.shape() != (d_in, d_out) || rp.bias.len() != d_out {
            return Err(shape("relation parameters disagree within a layer"));
        }
    }

    let aggregates = Relation::ALL.map(|rel| {
        let mut agg = Matrix::zeros(n, d_in);
        par::for_each_row(agg.data_mut(), d_in, |i, row| {
            let nbrs = graph.in_neighbors(i, rel);
            if nbrs.is_empty() {
                return;
            }
            for &(j, _) in nbrs {
                for (a, x) in row.iter_mut().zip(h.row(j.0)) {
                    *a += x;
                }
            }
            let inv = 1.0 / nbrs.len() as f64;
            row.iter_mut().for_each(|a| *a *= inv);
        });
        agg
    });

    let mut pre = Matrix::zeros(n, d_out);
    par::for_each_row(pre.data_mut(), d_out, |i, row| {
        for rel in Relation::ALL {
            if graph.in_neighbors(i, rel).is_empty() {
                continue;
            }
            let rp = params.relation(rel);
            vec_mat_into(aggregates[rel.index()].row(i), &rp.weight, row);
            for (o, b) in row.iter_mut().zip(&rp.bias) {
                *o += b;
            }
        }
    });

    Ok(LayerCache {
        aggregates,
        pre_activation: pre,
    })
}

/// Given `d_pre = ∂L/∂pre_activation`, returns the parameter gradients of the
/// layer and `∂L/∂h` for its input states.
pub fn layer_backward(
    graph: &HeteroGraph,
    params: &LayerParams,
    cache: &LayerCache,
    d_pre: &Matrix,
) -> Result<(LayerParams, Matrix)> {
    let n = graph.num_nodes();
    let (d_in, d_out) = (params.d_in(), params.d_out());
    if d_pre.shape() != (n, d_out) {
        return Err(shape(format!(
            "upstream gradient is {}x{}, expected {n}x{d_out}",
            d_pre.rows(),
            d_pre.cols()
        )));
    }

    let block = d_in * d_out + d_out;
    let sums = par::chunked_sum(n, 3 * block, |start, end, acc| {
        for i in start..end {
            let g = d_pre.row(i);
            for rel in Relation::ALL {
                if graph.in_neighbors(i, rel).is_empty() {
                    continue;
                }
                let base = rel.index() * block;
                let agg = cache.aggregates[rel.index()].row(i);
                for (k, &a) in agg.iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    let w = &mut acc[base + k * d_out..base + (k + 1) * d_out];
                    for (wv, gv) in w.iter_mut().zip(g) {
                        *wv += a * gv;
                    }
                }
                for (bv, gv) in acc[base + d_in * d_out..base + block].iter_mut().zip(g) {
                    *bv += gv;
                }
            }
        }
    });
    let mut grads = LayerParams::zeros(d_in, d_out);
    for rel in Relation::ALL {
        let base = rel.index() * block;
        let rp = grads.relation_mut(rel);
        rp.weight
            .data_mut()
            .copy_from_slice(&sums[base..base + d_in * d_out]);
        rp.bias.copy_from_slice(&sums[base + d_in * d_out..base + block]);
    }

    // ∂L/∂agg_r(i), already divided by |N_i^r| so it can be gathered per source.
    let d_agg = Relation::ALL.map(|rel| {
        let w = &params.relation(rel).weight;
        let mut m = Matrix::zeros(n, d_in);
        par::for_each_row(m.data_mut(), d_in, |i, row| {
            let deg = graph.in_neighbors(i, rel).len();
            if deg == 0 {
                return;
            }
            mat_vec_into(w, d_pre.row(i), row);
            let inv = 1.0 / deg as f64;
            row.iter_mut().for_each(|v| *v *= inv);
        });
        m
    });

    let mut d_h = Matrix::zeros(n, d_in);
    par::for_each_row(d_h.data_mut(), d_in, |j, row| {
        for rel in Relation::ALL {
            for &(i, _) in graph.out_neighbors(j, rel) {
                for (o, v) in row.iter_mut().zip(d_agg[rel.index()].row(i.0)) {
                    *o += v;
                }
            }
        }
    });
    Ok((grads, d_h))
}

#![allow(dead_code)]

use fraudgraph::graph::HeteroGraph;
use fraudgraph::rgcn::{LayerParams, ModelParams};
use fraudgraph::{Matrix, Relation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn graph(nc: usize, nm: usize, pays: &[(usize, usize)], feature_dim: usize, self_loops: bool, seed: u64) -> HeteroGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let feats = (0..pays.len() * feature_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let labels = (0..pays.len()).map(|i| i % 3 == 1).collect();
    HeteroGraph::from_parts(
        (0..nc).map(|i| format!("card{i}")).collect(),
        (0..nm as i64).map(|m| 1000 + m).collect(),
        pays,
        Matrix::from_vec(pays.len(), feature_dim, feats).unwrap(),
        labels,
        self_loops,
    )
    .unwrap()
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn random_layer(d_in: usize, d_out: usize, rng: &mut impl Rng) -> LayerParams {
    let mut layer = LayerParams::zeros(d_in, d_out);
    for rel in &mut layer.relations {
        rel.weight = random_matrix(d_in, d_out, rng);
        rel.bias = (0..d_out).map(|_| rng.random_range(-1.0..1.0)).collect();
    }
    layer
}

/// Direct evaluation of the relational update from the raw edge list:
/// for every node and relation, collect the sources of edges pointing at
/// the node, average their transformed states and add the bias.
pub fn oracle_layer(h: &Matrix, graph: &HeteroGraph, params: &LayerParams, relu: bool) -> Matrix {
    let n = graph.num_nodes();
    let d_out = params.d_out();
    let mut out = Matrix::zeros(n, d_out);
    for i in 0..n {
        for rel in Relation::ALL {
            let sources: Vec<usize> = graph
                .edges()
                .iter()
                .filter(|e| e.relation == rel && e.target.0 == i)
                .map(|e| e.source.0)
                .collect();
            if sources.is_empty() {
                continue;
            }
            let rp = params.relation(rel);
            let c = sources.len() as f64;
            for k in 0..d_out {
                let mut msg = 0.0;
                for &j in &sources {
                    for q in 0..h.cols() {
                        msg += h.get(j, q) * rp.weight.get(q, k) / c;
                    }
                }
                out.set(i, k, out.get(i, k) + msg + rp.bias[k]);
            }
        }
        if relu {
            for k in 0..d_out {
                out.set(i, k, out.get(i, k).max(0.0));
            }
        }
    }
    out
}

pub fn oracle_model(graph: &HeteroGraph, params: &ModelParams) -> Matrix {
    let mut h = params.card_embeddings.vstack(&params.merchant_embeddings).unwrap();
    let depth = params.layers.len();
    for (l, layer) in params.layers.iter().enumerate() {
        h = oracle_layer(&h, graph, layer, l + 1 < depth);
    }
    h
}

pub fn oracle_scores(graph: &HeteroGraph, states: &Matrix, params: &ModelParams) -> Vec<f64> {
    (0..graph.num_transactions())
        .map(|e| {
            let (u, v) = graph.pays_endpoints(e);
            let mut z: Vec<f64> = states.row(u.0).to_vec();
            z.extend_from_slice(states.row(v.0));
            z.extend_from_slice(graph.edge_features().row(e));
            let s: f64 = z.iter().zip(&params.head_weights).map(|(a, b)| a * b).sum::<f64>() + params.head_bias;
            1.0 / (1.0 + (-s).exp())
        })
        .collect()
}

pub fn assert_close(a: &Matrix, b: &Matrix, tol: f64) {
    assert_eq!(a.shape(), b.shape());
    for (k, (x, y)) in a.data().iter().zip(b.data()).enumerate() {
        assert!((x - y).abs() <= tol, "entry {k}: {x} vs {y}");
    }
}

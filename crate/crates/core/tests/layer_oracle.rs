mod common;

use common::{assert_close, graph, oracle_layer, random_layer, random_matrix};
use fraudgraph::graph::HeteroGraph;
use fraudgraph::rgcn::{layer_forward, LayerParams};
use fraudgraph::{Matrix, Relation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixed_graphs() -> Vec<HeteroGraph> {
    vec![
        // repeated card/merchant pair and a merchant nobody pays
        graph(3, 4, &[(0, 0), (0, 1), (1, 1), (1, 2), (2, 0), (2, 2), (0, 0), (1, 0)], 4, true, 1),
        // star around one card, no self loops
        graph(2, 5, &[(0, 0), (0, 1), (0, 2), (0, 3), (1, 4)], 3, false, 2),
        // chain card-merchant-card-merchant
        graph(3, 3, &[(0, 0), (1, 0), (1, 1), (2, 1), (2, 2)], 2, true, 3),
    ]
}

#[test]
fn matches_direct_summation_on_fixed_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for g in fixed_graphs() {
        for (d_in, d_out) in [(3, 4), (5, 2)] {
            let h = random_matrix(g.num_nodes(), d_in, &mut rng);
            let params = random_layer(d_in, d_out, &mut rng);
            for relu in [false, true] {
                let got = layer_forward(&h, &g, &params, relu).unwrap();
                assert_close(&got, &oracle_layer(&h, &g, &params, relu), 1e-12);
            }
        }
    }
}

#[test]
fn four_node_integer_weights() {
    let g = graph(2, 2, &[(0, 0), (0, 1), (1, 1)], 1, true, 0);
    let h = Matrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.0], vec![3.0, -2.0], vec![0.0, 1.0]]).unwrap();
    let mut params = LayerParams::zeros(2, 2);
    params.relation_mut(Relation::Pays).weight = Matrix::from_rows(&[vec![1.0, 0.0], vec![2.0, -1.0]]).unwrap();
    params.relation_mut(Relation::Pays).bias = vec![1.0, 0.0];
    params.relation_mut(Relation::PaidBy).weight = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
    params.relation_mut(Relation::PaidBy).bias = vec![0.0, -1.0];
    params.relation_mut(Relation::SelfLoop).weight = Matrix::identity(2);
    params.relation_mut(Relation::SelfLoop).bias = vec![0.0, 2.0];

    // card 0 <- merchants 0 (h=[3,-2]) and 1 (h=[0,1]) via paid_by: mean [1.5,-0.5] -> [-0.5, 1.0] + [0,-1]
    // card 0 self: [1, 2] + [0, 2]
    let want = Matrix::from_rows(&[
        vec![-0.5 + 1.0, 1.0 - 1.0 + 4.0],
        // card 1 <- merchant 1 ([0,1] -> [1,1]) + b, self [-1,0]+[0,2]
        vec![1.0 - 1.0, 1.0 - 1.0 + 2.0],
        // merchant 0 <- card 0 ([1,2] -> [5,-2]) + [1,0], self [3,0]
        vec![5.0 + 1.0 + 3.0, -2.0 + 0.0],
        // merchant 1 <- mean of cards 0,1 ([0,1] -> [2,-1]) + [1,0], self [0,3]
        vec![2.0 + 1.0 + 0.0, -1.0 + 3.0],
    ])
    .unwrap();
    let got = layer_forward(&h, &g, &params, false).unwrap();
    assert_close(&got, &want, 1e-12);
    assert_close(&got, &oracle_layer(&h, &g, &params, false), 1e-12);
}

#[test]
fn two_neighbor_mean() {
    let g = graph(2, 1, &[(0, 0), (1, 0)], 1, false, 0);
    let h = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![7.0, 7.0]]).unwrap();
    let mut params = LayerParams::zeros(2, 2);
    params.relation_mut(Relation::Pays).weight = Matrix::identity(2);
    let out = layer_forward(&h, &g, &params, false).unwrap();
    assert_eq!(out.row(2), &[0.5, 0.5]);
}

#[test]
fn lone_node_with_identity_self_loop() {
    let g = HeteroGraph::from_parts(vec!["only".into()], vec![], &[], Matrix::zeros(0, 2), vec![], true).unwrap();
    let mut params = LayerParams::zeros(3, 3);
    params.relation_mut(Relation::SelfLoop).weight = Matrix::identity(3);
    let x = Matrix::from_rows(&[vec![0.25, 0.0, 4.0]]).unwrap();
    assert_eq!(layer_forward(&x, &g, &params, true).unwrap(), x);
}

#[test]
fn relation_without_neighbors_adds_no_bias() {
    let g = graph(1, 2, &[(0, 0)], 1, false, 0);
    let mut params = LayerParams::zeros(1, 1);
    for rel in &mut params.relations {
        rel.bias = vec![10.0];
    }
    let h = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
    let out = layer_forward(&h, &g, &params, false).unwrap();
    // the second merchant has no edges at all
    assert_eq!(out.row(2), &[0.0]);
    assert_eq!(out.row(0), &[10.0]);
}

#[test]
fn shape_errors() {
    let g = graph(1, 1, &[(0, 0)], 1, true, 0);
    let params = LayerParams::zeros(2, 2);
    assert!(layer_forward(&Matrix::zeros(3, 2), &g, &params, false).is_err());
    assert!(layer_forward(&Matrix::zeros(2, 3), &g, &params, false).is_err());
}

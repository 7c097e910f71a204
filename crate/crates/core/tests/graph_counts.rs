use std::collections::{HashMap, HashSet};

use fraudgraph::graph::{build_graph, NodeKind};
use fraudgraph::ingest::{fit_encoder, EncoderConfig};
use fraudgraph::synthgen::{generate, GenConfig};
use fraudgraph::{NodeId, Relation};

#[test]
fn desk_corpus_counts_and_degrees() {
    let records = generate(&GenConfig::default()).unwrap();
    let enc = fit_encoder(&records, &EncoderConfig::default()).unwrap();
    let g = build_graph(&records, &enc).unwrap();

    assert_eq!(g.num_cards(), 100);
    assert_eq!(g.num_merchants(), 50);
    assert_eq!(g.num_nodes(), 150);
    assert_eq!(g.num_transactions(), 10_000);
    assert_eq!(g.num_edges(), 2 * 10_000 + 150);
    assert_eq!(g.edge_features().shape(), (10_000, enc.feature_dim));

    let n = g.num_nodes();
    let indeg = |rel| (0..n).map(|i| g.neighbors(NodeId(i), rel).unwrap().len()).sum::<usize>();
    assert_eq!(indeg(Relation::Pays), 10_000);
    assert_eq!(indeg(Relation::PaidBy), 10_000);
    assert_eq!(indeg(Relation::SelfLoop), 150);

    // per-entity transaction counts straight from the rows
    let mut per_card: HashMap<&str, usize> = HashMap::new();
    let mut per_merchant: HashMap<i64, usize> = HashMap::new();
    for r in &records {
        *per_card.entry(&r.card_id).or_default() += 1;
        *per_merchant.entry(r.merchant_name).or_default() += 1;
    }
    for i in 0..n {
        let node = NodeId(i);
        match g.kind(node) {
            NodeKind::Card => {
                let key = g.card_keys().nth(i).unwrap();
                assert_eq!(g.neighbors(node, Relation::PaidBy).unwrap().len(), per_card[key]);
                assert!(g.neighbors(node, Relation::Pays).unwrap().is_empty());
            }
            NodeKind::Merchant => {
                let key = g.merchant_keys().nth(i - g.num_cards()).unwrap();
                assert_eq!(g.neighbors(node, Relation::Pays).unwrap().len(), per_merchant[&key]);
                assert!(g.neighbors(node, Relation::PaidBy).unwrap().is_empty());
            }
        }
        assert_eq!(g.degree_norm(node, Relation::SelfLoop).unwrap(), 1.0);
    }
}

#[test]
fn adjacency_matches_brute_force_scan() {
    let records = generate(&GenConfig { n_transactions: 1_500, seed: 21, ..GenConfig::default() }).unwrap();
    let enc = fit_encoder(&records, &EncoderConfig::default()).unwrap();
    let g = build_graph(&records, &enc).unwrap();
    for i in 0..g.num_nodes() {
        for rel in Relation::ALL {
            let scanned: Vec<(NodeId, usize)> = g
                .edges()
                .iter()
                .filter(|e| e.target == NodeId(i) && e.relation == rel)
                .map(|e| (e.source, e.index))
                .collect();
            assert_eq!(g.neighbors(NodeId(i), rel).unwrap(), scanned.as_slice());
        }
    }
    // pays edge t is row t
    for (t, r) in records.iter().enumerate() {
        let (u, v) = g.pays_endpoints(t);
        assert_eq!(g.card_node(&r.card_id), Some(u));
        assert_eq!(g.merchant_node(r.merchant_name), Some(v));
        assert_eq!(g.edge_labels()[t], r.is_fraud);
    }
    let distinct: HashSet<_> = g.edges().iter().map(|e| e.index).collect();
    assert_eq!(distinct.len(), g.num_edges());
}

#[test]
fn unknown_node_is_an_error() {
    let records = generate(&GenConfig { n_transactions: 200, fraud_rate: 0.05, ..GenConfig::default() }).unwrap();
    let enc = fit_encoder(&records, &EncoderConfig::default()).unwrap();
    let g = build_graph(&records, &enc).unwrap();
    assert!(g.neighbors(NodeId(g.num_nodes()), Relation::Pays).is_err());
}

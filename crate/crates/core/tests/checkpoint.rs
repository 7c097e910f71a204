use fraudgraph::checkpoint::Checkpoint;
use fraudgraph::pipeline::fit;
use fraudgraph::rgcn::forward_pass;
use fraudgraph::synthgen::{generate, GenConfig};
use fraudgraph::training::TrainConfig;

fn trained() -> Checkpoint {
    let records = generate(&GenConfig { n_transactions: 400, fraud_rate: 0.05, seed: 8, ..GenConfig::default() }).unwrap();
    let cfg = TrainConfig { epochs: 5, ..TrainConfig::default() };
    let (prep, params, _) = fit(&records, &cfg, &Default::default()).unwrap();
    Checkpoint::new(&prep.graph, params, prep.encoder, cfg)
}

#[test]
fn round_trip_is_exact() {
    let ck = trained();
    let mut buf = Vec::new();
    ck.write(&mut buf).unwrap();
    let back = Checkpoint::read(buf.as_slice()).unwrap();
    assert_eq!(back, ck);
    let mut again = Vec::new();
    back.write(&mut again).unwrap();
    assert_eq!(buf, again);
    assert!(buf.ends_with(b"\n"));
}

#[test]
fn reloaded_model_scores_identically() {
    let records = generate(&GenConfig { n_transactions: 400, fraud_rate: 0.05, seed: 8, ..GenConfig::default() }).unwrap();
    let cfg = TrainConfig { epochs: 5, ..TrainConfig::default() };
    let (prep, params, _) = fit(&records, &cfg, &Default::default()).unwrap();
    let ck = Checkpoint::new(&prep.graph, params.clone(), prep.encoder.clone(), cfg);
    let mut buf = Vec::new();
    ck.write(&mut buf).unwrap();
    let back = Checkpoint::read(buf.as_slice()).unwrap();
    back.check_graph(&prep.graph).unwrap();
    let a = forward_pass(&prep.graph, &params).unwrap().probabilities();
    let b = forward_pass(&prep.graph, &back.params).unwrap().probabilities();
    assert_eq!(a, b);
}

#[test]
fn corrupt_documents_are_rejected() {
    let ck = trained();
    let mut buf = Vec::new();
    ck.write(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    for bad in [
        text.replace("fraudgraph-checkpoint", "something-else"),
        text.replace("\"version\":1", "\"version\":2"),
        text.replace("\"head.bias\"", "\"head.bias_\""),
        text[..text.len() / 2].to_string(),
        String::new(),
    ] {
        assert!(Checkpoint::read(bad.as_bytes()).is_err());
    }
}

#[test]
fn mismatched_graph_is_rejected() {
    let ck = trained();
    let other = generate(&GenConfig { n_transactions: 400, fraud_rate: 0.05, seed: 9, ..GenConfig::default() }).unwrap();
    let graph = fraudgraph::graph::build_graph(&other, &ck.encoder).unwrap();
    assert!(ck.check_graph(&graph).is_err());
}

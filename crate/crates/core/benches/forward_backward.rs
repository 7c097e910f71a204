use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fraudgraph::graph::build_graph;
use fraudgraph::ingest::{fit_encoder, EncoderConfig};
use fraudgraph::par;
use fraudgraph::rgcn::{forward_pass, layer_forward, ModelConfig, ModelParams};
use fraudgraph::synthgen::{generate, GenConfig};
use fraudgraph::HeteroGraph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(n_transactions: usize) -> (HeteroGraph, ModelParams) {
    let records = generate(&GenConfig {
        n_cards: n_transactions / 100,
        n_merchants: n_transactions / 200,
        n_transactions,
        ..GenConfig::default()
    })
    .unwrap();
    let enc = fit_encoder(&records, &EncoderConfig::default()).unwrap();
    let graph = build_graph(&records, &enc).unwrap();
    let params = ModelParams::init(
        graph.num_cards(),
        graph.num_merchants(),
        graph.feature_dim(),
        &ModelConfig::default(),
        &mut ChaCha8Rng::seed_from_u64(1),
    );
    (graph, params)
}

fn modes() -> [(&'static str, bool); 2] {
    [("sequential", true), ("parallel", false)]
}

fn run<T>(sequential: bool, f: impl FnOnce() -> T) -> T {
    if sequential {
        par::sequential(f)
    } else {
        f()
    }
}

fn bench(c: &mut Criterion) {
    for n in [10_000, 50_000] {
        let (graph, params) = setup(n);
        let h = params.card_embeddings.vstack(&params.merchant_embeddings).unwrap();
        let upstream: Vec<f64> = (0..graph.num_transactions()).map(|e| ((e % 7) as f64 - 3.0) * 1e-4).collect();
        let fp = forward_pass(&graph, &params).unwrap();

        let mut group = c.benchmark_group(format!("tx{n}"));
        group.sample_size(20);
        for (mode, seq) in modes() {
            group.bench_function(BenchmarkId::new("layer_forward", mode), |b| {
                b.iter(|| run(seq, || layer_forward(&h, &graph, &params.layers[0], true).unwrap()))
            });
            group.bench_function(BenchmarkId::new("forward_pass", mode), |b| {
                b.iter(|| run(seq, || forward_pass(&graph, &params).unwrap()))
            });
            group.bench_function(BenchmarkId::new("backward", mode), |b| {
                b.iter(|| run(seq, || fp.backward(&graph, &params, &upstream).unwrap()))
            });
        }
        group.finish();
    }
}

criterion_group!(benches, bench);
criterion_main!(benches);

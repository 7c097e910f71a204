use fraudgraph::fixtures::overfit_gen_config;
use fraudgraph::par;
use fraudgraph::pipeline::fit;
use fraudgraph::synthgen::{generate, GenConfig};
use fraudgraph::training::{adam_step, focal_loss, window_means, AdamConfig, AdamState, TrainConfig};

#[test]
fn adam_matches_scalar_reference() {
    // 20-line reference: bias-corrected Adam on one scalar, gradient 1.
    let (lr, b1, b2, eps) = (0.01f64, 0.9f64, 0.999f64, 1e-8f64);
    let (mut x, mut m, mut v) = (0.0f64, 0.0f64, 0.0f64);
    for t in 1..=100 {
        let g = 1.0;
        m = b1 * m + (1.0 - b1) * g;
        v = b2 * v + (1.0 - b2) * g * g;
        let mh = m / (1.0 - b1.powi(t));
        let vh = v / (1.0 - b2.powi(t));
        x -= lr * mh / (vh.sqrt() + eps);
    }

    let mut theta = vec![0.0];
    let mut state = AdamState::new(&theta);
    let hyper = AdamConfig { learning_rate: lr, beta1: b1, beta2: b2, epsilon: eps };
    for _ in 0..100 {
        adam_step(&mut theta, &vec![1.0], &mut state, &hyper).unwrap();
    }
    assert_eq!(state.step, 100);
    assert!((theta[0] - x).abs() <= 1e-12, "{} vs {x}", theta[0]);
}

#[test]
fn focal_reduces_to_cross_entropy_on_grid() {
    for k in 0..1000 {
        let p = 0.001 + 0.998 * k as f64 / 999.0;
        // negatives carry weight 1 - alpha, so their unweighted case is alpha = 0
        assert!((focal_loss(p, true, 1.0, 0.0).unwrap() + p.ln()).abs() <= 1e-12);
        assert!((focal_loss(p, false, 0.0, 0.0).unwrap() + (1.0 - p).ln()).abs() <= 1e-12);
        assert_eq!(focal_loss(p, false, 1.0, 0.0).unwrap(), 0.0);
    }
    let spot = focal_loss(0.5, true, 0.25, 2.0).unwrap();
    assert!((spot - 0.25 * 0.25 * std::f64::consts::LN_2).abs() <= 1e-12);
}

#[test]
fn overfit_fixture_converges() {
    let records = generate(&overfit_gen_config()).unwrap();
    assert_eq!(records.len(), 50);
    let (_, _, history) = fit(&records, &TrainConfig::default(), &Default::default()).unwrap();
    let losses = history.train_losses();
    assert_eq!(losses.len(), 200);
    assert!(*losses.last().unwrap() < 0.01);
    let blocks = window_means(&losses, 10);
    assert!(blocks.windows(2).all(|w| w[1] <= w[0]), "{blocks:?}");
}

#[test]
fn training_is_bit_reproducible_across_modes() {
    let records = generate(&GenConfig { n_transactions: 800, fraud_rate: 0.05, seed: 2, ..GenConfig::default() }).unwrap();
    let cfg = TrainConfig { epochs: 15, ..TrainConfig::default() };
    let (_, p1, h1) = fit(&records, &cfg, &Default::default()).unwrap();
    let (_, p2, h2) = fit(&records, &cfg, &Default::default()).unwrap();
    let (_, p3, h3) = par::sequential(|| fit(&records, &cfg, &Default::default())).unwrap();
    assert_eq!(p1, p2);
    assert_eq!(p1, p3);
    assert_eq!(h1.records, h2.records);
    assert_eq!(h1.records, h3.records);
    assert_eq!(h1.final_metrics, h3.final_metrics);
}

#[test]
fn single_class_training_split_is_rejected() {
    let mut records = generate(&GenConfig { n_transactions: 100, fraud_rate: 0.05, ..GenConfig::default() }).unwrap();
    records.iter_mut().for_each(|r| r.is_fraud = false);
    assert!(fit(&records, &TrainConfig::default(), &Default::default()).is_err());
}

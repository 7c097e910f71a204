use crate::error::{invalid, Result};

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Focal loss of predicting probability `p` for label `y`:
/// `-α_t (1 - p_t)^γ ln p_t`, with `p_t = p` and `α_t = α` for positives,
/// `p_t = 1 - p` and `α_t = 1 - α` for negatives.
pub fn focal_loss(p: f64, y: bool, alpha: f64, gamma: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("probability {p} outside (0, 1)")));
    }
    let (p_t, alpha_t) = if y { (p, alpha) } else { (1.0 - p, 1.0 - alpha) };
    Ok(-alpha_t * (1.0 - p_t).powf(gamma) * p_t.ln())
}

/// Focal loss and its derivative with respect to the logit `z`, where
/// `p = logistic(z)`. Works in log space so large `|z|` stays finite.
pub fn focal_loss_logit(z: f64, y: bool, alpha: f64, gamma: f64) -> (f64, f64) {
    // s is the logit of p_t.
    let (s, alpha_t, sign) = if y { (z, alpha, 1.0) } else { (-z, 1.0 - alpha, -1.0) };
    let ln_pt = -softplus(-s);
    let p_t = ln_pt.exp();
    // 1 - p_t = logistic(-s)
    let q = (-softplus(s)).exp();
    let q_gamma = q.powf(gamma);
    let loss = -alpha_t * q_gamma * ln_pt;
    let d_s = alpha_t * (gamma * p_t * q_gamma * ln_pt - q_gamma * q);
    (loss, sign * d_s)
}

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use super::TransactionRecord;
use crate::error::{invalid, Result};

/// Number of one-hot slots for the chip/swipe/online channel.
pub const USE_CHIP_SLOTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub hash_seed: u64,
    pub city_buckets: usize,
    pub state_buckets: usize,
    pub zip_buckets: usize,
    pub mcc_buckets: usize,
    pub errors_buckets: usize,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            hash_seed: 0x5EED,
            city_buckets: 64,
            state_buckets: 16,
            zip_buckets: 32,
            mcc_buckets: 64,
            errors_buckets: 8,
        }
    }
}

/// Start offsets of each field block in an encoded vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub amount: usize,
    pub cyclic: usize,
    pub use_chip: usize,
    pub city: usize,
    pub state: usize,
    pub zip: usize,
    pub mcc: usize,
    pub errors: usize,
    pub errors_flag: usize,
    pub dim: usize,
}

impl FeatureLayout {
    fn new(cfg: &EncoderConfig) -> Self {
        let amount = 0;
        let cyclic = amount + 1;
        let use_chip = cyclic + 8;
        let city = use_chip + USE_CHIP_SLOTS;
        let state = city + cfg.city_buckets;
        let zip = state + cfg.state_buckets;
        let mcc = zip + cfg.zip_buckets;
        let errors = mcc + cfg.mcc_buckets;
        let errors_flag = errors + cfg.errors_buckets;
        Self {
            amount,
            cyclic,
            use_chip,
            city,
            state,
            zip,
            mcc,
            errors,
            errors_flag,
            dim: errors_flag + 1,
        }
    }
}

/// Fitted transaction-to-vector encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureEncoder {
    pub amount_mean: f64,
    pub amount_std: f64,
    pub use_chip_categories: Vec<String>,
    pub config: EncoderConfig,
    pub feature_dim: usize,
}

/// `sign(a) * ln(1 + |a|)`.
pub fn signed_log(a: f64) -> f64 {
    a.signum() * a.abs().ln_1p()
}

/// Fits amount statistics and the channel vocabulary on training rows.
///
/// The amount standard deviation is the population value, clamped to 1 when
/// the fitted spread is (numerically) zero.
pub fn fit_encoder(train: &[TransactionRecord], config: &EncoderConfig) -> Result<FeatureEncoder> {
    if train.is_empty() {
        return Err(invalid("cannot fit an encoder on an empty training set"));
    }
    let n = train.len() as f64;
    let logs: Vec<f64> = train.iter().map(|r| signed_log(r.amount)).collect();
    let mean = logs.iter().sum::<f64>() / n;
    let var = logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let mut std = var.sqrt();
    if !(std > 1e-12) {
        std = 1.0;
    }

    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in train {
        if !r.use_chip.is_empty() {
            *counts.entry(r.use_chip.as_str()).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    // Most frequent first; BTreeMap order breaks ties lexicographically.
    ranked.sort_by(|a, b| b.1.cmp(&a.1));
    let use_chip_categories = ranked
        .into_iter()
        .take(USE_CHIP_SLOTS)
        .map(|(s, _)| s.to_string())
        .collect();

    Ok(FeatureEncoder {
        amount_mean: mean,
        amount_std: std,
        use_chip_categories,
        config: config.clone(),
        feature_dim: FeatureLayout::new(config).dim,
    })
}

/// Field tags mixed into the hash so equal strings in different fields land
/// in unrelated buckets.
#[derive(Clone, Copy)]
#[repr(u8)]
enum Field {
    City = 1,
    State = 2,
    Zip = 3,
    Mcc = 4,
    Errors = 5,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(state: u64, bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(state, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

impl FeatureEncoder {
    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout::new(&self.config)
    }

    /// Bucket index of `value` for a field with `buckets` slots.
    fn bucket(&self, field: Field, value: &str, buckets: usize) -> usize {
        let h = fnv1a(FNV_OFFSET, &self.config.hash_seed.to_le_bytes());
        let h = fnv1a(h, &[field as u8]);
        (fnv1a(h, value.as_bytes()) % buckets as u64) as usize
    }

    fn one_hot(&self, out: &mut [f64], start: usize, buckets: usize, field: Field, value: &str) {
        if buckets == 0 || value.is_empty() {
            return;
        }
        out[start + self.bucket(field, value, buckets)] = 1.0;
    }

    pub fn encode_edge_features(&self, record: &TransactionRecord) -> Vec<f64> {
        let mut out = vec![0.0; self.feature_dim];
        self.encode_into(record, &mut out);
        out
    }

    /// Writes the encoding of `record` into `out`, which must be zeroed and
    /// `feature_dim` long.
    pub fn encode_into(&self, record: &TransactionRecord, out: &mut [f64]) {
        let lay = self.layout();
        let cfg = &self.config;
        debug_assert_eq!(out.len(), lay.dim);

        out[lay.amount] = (signed_log(record.amount) - self.amount_mean) / self.amount_std;

        let phases = [
            (record.month as f64 - 1.0) / 12.0,
            (record.day as f64 - 1.0) / 31.0,
            record.hour as f64 / 24.0,
            record.minute as f64 / 60.0,
        ];
        for (k, phase) in phases.into_iter().enumerate() {
            let (s, c) = (TAU * phase).sin_cos();
            out[lay.cyclic + 2 * k] = s;
            out[lay.cyclic + 2 * k + 1] = c;
        }

        if let Some(slot) = self
            .use_chip_categories
            .iter()
            .position(|c| *c == record.use_chip)
        {
            out[lay.use_chip + slot] = 1.0;
        }

        self.one_hot(out, lay.city, cfg.city_buckets, Field::City, &record.merchant_city);
        self.one_hot(out, lay.state, cfg.state_buckets, Field::State, &record.merchant_state);
        if let Some(zip) = record.zip {
            self.one_hot(out, lay.zip, cfg.zip_buckets, Field::Zip, &zip.to_string());
        }
        self.one_hot(out, lay.mcc, cfg.mcc_buckets, Field::Mcc, &record.mcc.to_string());
        if let Some(err) = record.errors.as_deref() {
            self.one_hot(out, lay.errors, cfg.errors_buckets, Field::Errors, err);
            out[lay.errors_flag] = 1.0;
        }
    }
}

//! Seeded generator of transaction corpora with a planted fraud signature.
//!
//! Fraud labels are drawn per transaction, with higher odds on a set of "hot"
//! merchants. Fraudulent rows also get larger amounts, late-night hours and
//! more magnetic-stripe swipes; `signal_strength` scales those shifts
//! (0 makes fraud rows look like legitimate ones apart from the merchant).

use std::collections::HashSet;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ingest::{write_transactions, TransactionRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenConfig {
    pub n_cards: usize,
    pub n_merchants: usize,
    pub n_transactions: usize,
    pub fraud_rate: f64,
    /// Fraction of merchants on which fraud concentrates.
    pub hot_merchant_fraction: f64,
    /// Odds of fraud on a hot merchant relative to any other merchant.
    pub hot_odds_ratio: f64,
    /// Scale of the amount/hour/channel shift of fraudulent rows.
    pub signal_strength: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            n_cards: 100,
            n_merchants: 50,
            n_transactions: 10_000,
            fraud_rate: 0.01,
            hot_merchant_fraction: 0.1,
            hot_odds_ratio: 10.0,
            signal_strength: 1.0,
            seed: 7,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_cards == 0 || self.n_merchants == 0 {
            return Err(invalid("n_cards and n_merchants must be >= 1"));
        }
        if !(self.fraud_rate > 0.0 && self.fraud_rate < 1.0) {
            return Err(invalid(format!("fraud_rate {} outside (0, 1)", self.fraud_rate)));
        }
        if self.fraud_rate * (self.n_transactions as f64) < 1.0 {
            return Err(invalid("expected fraud count is below 1"));
        }
        if !(self.hot_merchant_fraction > 0.0 && self.hot_merchant_fraction <= 1.0) {
            return Err(invalid("hot_merchant_fraction must be in (0, 1]"));
        }
        if !(self.hot_odds_ratio >= 1.0) || !(self.signal_strength >= 0.0) {
            return Err(invalid("hot_odds_ratio must be >= 1 and signal_strength >= 0"));
        }
        Ok(())
    }

    pub fn hot_merchants(&self) -> usize {
        ((self.hot_merchant_fraction * self.n_merchants as f64).round() as usize).clamp(1, self.n_merchants)
    }

    /// Per-transaction fraud probabilities `(hot, other)` whose mixture over
    /// uniformly chosen merchants equals `fraud_rate`.
    pub fn fraud_probabilities(&self) -> (f64, f64) {
        let share = self.hot_merchants() as f64 / self.n_merchants as f64;
        let hot_of = |p: f64| {
            let odds = self.hot_odds_ratio * p / (1.0 - p);
            odds / (1.0 + odds)
        };
        let mix = |p: f64| share * hot_of(p) + (1.0 - share) * p;
        let (mut lo, mut hi) = (0.0, self.fraud_rate);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mix(mid) < self.fraud_rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let cold = 0.5 * (lo + hi);
        (hot_of(cold), cold)
    }
}

struct Merchant {
    name: i64,
    city: &'static str,
    state: &'static str,
    zip: Option<u32>,
    mcc: u32,
    online: bool,
}

const PLACES: [(&str, &str, u32); 16] = [
    ("La Verne", "CA", 91750),
    ("Monterey Park", "CA", 91754),
    ("Mira Loma", "CA", 91752),
    ("Houston", "TX", 77002),
    ("Austin", "TX", 78701),
    ("Brooklyn", "NY", 11201),
    ("Buffalo", "NY", 14201),
    ("Miami", "FL", 33101),
    ("Orlando", "FL", 32801),
    ("Chicago", "IL", 60601),
    ("Columbus", "OH", 43004),
    ("Seattle", "WA", 98101),
    ("Denver", "CO", 80201),
    ("Phoenix", "AZ", 85001),
    ("Atlanta", "GA", 30301),
    ("Tulsa", "OK", 74101),
];

const MCCS: [u32; 12] = [5411, 5812, 5541, 5912, 4829, 5300, 5499, 5311, 7538, 4121, 5815, 5942];

const ERRORS: [&str; 5] = [
    "Insufficient Balance",
    "Bad PIN",
    "Technical Glitch",
    "Bad CVV",
    "Bad Expiration",
];

/// Generates `n_transactions` records.
pub fn generate(config: &GenConfig) -> Result<Vec<TransactionRecord>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let cards: Vec<String> = (0..config.n_cards)
        .map(|i| {
            let number = 4_000_000_000_000_000u64 + i as u64 * 1_000_000 + rng.random_range(0..1_000_000);
            format!("{number}_{}", i / 2)
        })
        .collect();

    let mut seen = HashSet::new();
    let merchants: Vec<Merchant> = (0..config.n_merchants)
        .map(|_| {
            let name = loop {
                let n: i64 = rng.random();
                if seen.insert(n) {
                    break n;
                }
            };
            let online = rng.random_bool(0.15);
            let (city, state, zip) = PLACES[rng.random_range(0..PLACES.len())];
            Merchant {
                name,
                city: if online { "ONLINE" } else { city },
                state: if online { "" } else { state },
                zip: (!online).then_some(zip),
                mcc: MCCS[rng.random_range(0..MCCS.len())],
                online,
            }
        })
        .collect();

    let n_hot = config.hot_merchants();
    let (p_hot, p_cold) = config.fraud_probabilities();
    let s = config.signal_strength;
    let legit_amount = LogNormal::new(40f64.ln(), 0.9).unwrap();
    let fraud_amount = LogNormal::new(40f64.ln() + 2.0 * s, (0.9 - 0.4 * s.min(1.0)).max(0.3)).unwrap();
    let legit_night = 0.04;
    let fraud_night = legit_night + (0.9 - legit_night) * s.min(1.0);
    let fraud_swipe = 0.4 + 0.4 * s.min(1.0);

    let mut out = Vec::with_capacity(config.n_transactions);
    for t in 0..config.n_transactions {
        let c = if t < cards.len() { t } else { rng.random_range(0..cards.len()) };
        let m = if t < merchants.len() { t } else { rng.random_range(0..merchants.len()) };
        let merchant = &merchants[m];
        let is_fraud = rng.random_bool(if m < n_hot { p_hot } else { p_cold });

        let raw = if is_fraud {
            fraud_amount.sample(&mut rng)
        } else {
            legit_amount.sample(&mut rng)
        };
        let mut amount = (raw * 100.0).round() / 100.0;
        if !is_fraud && rng.random_bool(0.02) {
            amount = -amount;
        }

        let night = rng.random_bool(if is_fraud { fraud_night } else { legit_night });
        let hour = if night {
            rng.random_range(0..=if is_fraud { 4 } else { 5 })
        } else {
            rng.random_range(6..=23)
        };

        let use_chip = if merchant.online {
            "Online Transaction"
        } else if rng.random_bool(if is_fraud { fraud_swipe } else { 0.4 }) {
            "Swipe Transaction"
        } else {
            "Chip Transaction"
        };
        let errors = rng
            .random_bool(if is_fraud { 0.05 } else { 0.015 })
            .then(|| ERRORS[rng.random_range(0..ERRORS.len())].to_string());

        out.push(TransactionRecord {
            year: rng.random_range(2015..=2019),
            month: rng.random_range(1..=12),
            day: rng.random_range(1..=28),
            amount,
            use_chip: use_chip.to_string(),
            merchant_name: merchant.name,
            merchant_city: merchant.city.to_string(),
            merchant_state: merchant.state.to_string(),
            zip: merchant.zip,
            mcc: merchant.mcc,
            errors,
            is_fraud,
            card_id: cards[c].clone(),
            hour,
            minute: rng.random_range(0..60),
        });
    }
    Ok(out)
}

/// Generates a corpus and writes it as CSV.
pub fn generate_csv<W: Write>(config: &GenConfig, sink: W) -> Result<Vec<TransactionRecord>> {
    let records = generate(config)?;
    write_transactions(sink, &records)?;
    Ok(records)
}

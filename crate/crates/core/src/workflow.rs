//! Contact-routing simulation for flagged transactions.
//!
//! A flagged transaction (an alert) first gets advice from the card
//! association. If the advice is to process it, nothing else happens. If the
//! advice is to contact the customer, the model is consulted: a score at or
//! above the threshold marks the transaction as fraud without a call,
//! otherwise the customer is contacted.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::graph::HeteroGraph;
use crate::rgcn::{forward_pass, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alert {
    /// Transaction (`pays` edge) index.
    pub edge_index: usize,
    /// Ground truth; used only for outcome accounting.
    pub true_label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssociationAdvice {
    ProcessDirectly,
    ContactCustomer,
}

impl AssociationAdvice {
    pub fn name(self) -> &'static str {
        match self {
            AssociationAdvice::ProcessDirectly => "process_directly",
            AssociationAdvice::ContactCustomer => "contact_customer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Processed,
    AutoMarkedFraud,
    CustomerContacted,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Processed => "processed",
            Outcome::AutoMarkedFraud => "auto_marked_fraud",
            Outcome::CustomerContacted => "customer_contacted",
        }
    }
}

/// Routing result. `model_score` is present exactly when the model was
/// consulted, i.e. when the outcome is not `Processed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub outcome: Outcome,
    pub model_score: Option<f64>,
}

/// Where association advice comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum AdvicePolicy {
    Explicit(Vec<AssociationAdvice>),
    /// Each alert independently gets `ContactCustomer` with this probability.
    Bernoulli { contact_fraction: f64, seed: u64 },
}

impl AdvicePolicy {
    pub fn advise(&self, n: usize) -> Result<Vec<AssociationAdvice>> {
        match self {
            AdvicePolicy::Explicit(v) if v.len() == n => Ok(v.clone()),
            AdvicePolicy::Explicit(v) => Err(invalid(format!("{} advice values for {n} alerts", v.len()))),
            &AdvicePolicy::Bernoulli { contact_fraction, seed } => {
                if !(0.0..=1.0).contains(&contact_fraction) {
                    return Err(invalid(format!("contact fraction {contact_fraction} outside [0, 1]")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok((0..n)
                    .map(|_| {
                        if rng.random_bool(contact_fraction) {
                            AssociationAdvice::ContactCustomer
                        } else {
                            AssociationAdvice::ProcessDirectly
                        }
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WorkflowStats {
    pub total_alerts: u64,
    pub processed: u64,
    pub auto_marked: u64,
    pub contacted: u64,
    /// Calls the flow without a model would have made but this one did not.
    pub contacts_avoided: u64,
    /// True frauds the association said to process.
    pub missed_frauds_processed: u64,
    /// Legitimate transactions the model auto-marked.
    pub false_auto_marks: u64,
}

impl WorkflowStats {
    pub fn to_kv(&self) -> String {
        format!(
            "total_alerts = {}\nprocessed = {}\nauto_marked = {}\ncontacted = {}\ncontacts_avoided = {}\nmissed_frauds_processed = {}\nfalse_auto_marks = {}\n",
            self.total_alerts,
            self.processed,
            self.auto_marked,
            self.contacted,
            self.contacts_avoided,
            self.missed_frauds_processed,
            self.false_auto_marks
        )
    }
}

impl fmt::Display for WorkflowStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_kv())
    }
}

pub fn route_alert(_alert: &Alert, advice: AssociationAdvice, score: f64, threshold: f64) -> Decision {
    match advice {
        AssociationAdvice::ProcessDirectly => Decision {
            outcome: Outcome::Processed,
            model_score: None,
        },
        AssociationAdvice::ContactCustomer => Decision {
            outcome: if score >= threshold {
                Outcome::AutoMarkedFraud
            } else {
                Outcome::CustomerContacted
            },
            model_score: Some(score),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub advice: Vec<AssociationAdvice>,
    pub decisions: Vec<Decision>,
    pub stats: WorkflowStats,
}

impl Simulation {
    /// Writes `edge_index,advice,score,decision,true_label`; the score is
    /// empty when the model was not consulted.
    pub fn write_log<W: Write>(&self, alerts: &[Alert], sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["edge_index", "advice", "score", "decision", "true_label"])?;
        for ((a, adv), d) in alerts.iter().zip(&self.advice).zip(&self.decisions) {
            w.write_record([
                a.edge_index.to_string(),
                adv.name().to_string(),
                d.model_score.map(|s| s.to_string()).unwrap_or_default(),
                d.outcome.name().to_string(),
                u8::from(a.true_label).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Alerts for the given transactions, labelled from the graph.
pub fn alerts_for(graph: &HeteroGraph, edge_indices: &[usize]) -> Vec<Alert> {
    edge_indices
        .iter()
        .map(|&e| Alert {
            edge_index: e,
            true_label: graph.edge_labels()[e],
        })
        .collect()
}

/// Routes alerts given precomputed per-transaction `scores`.
pub fn route_all(
    alerts: &[Alert],
    advice: Vec<AssociationAdvice>,
    scores: &[f64],
    threshold: f64,
) -> Result<Simulation> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid(format!("threshold {threshold} outside (0, 1)")));
    }
    if advice.len() != alerts.len() {
        return Err(invalid("advice and alerts differ in length"));
    }
    if let Some(a) = alerts.iter().find(|a| a.edge_index >= scores.len()) {
        return Err(invalid(format!("alert references transaction {} of {}", a.edge_index, scores.len())));
    }
    let mut stats = WorkflowStats {
        total_alerts: alerts.len() as u64,
        ..Default::default()
    };
    let decisions: Vec<Decision> = alerts
        .iter()
        .zip(&advice)
        .map(|(a, &adv)| {
            let d = route_alert(a, adv, scores[a.edge_index], threshold);
            match d.outcome {
                Outcome::Processed => {
                    stats.processed += 1;
                    stats.missed_frauds_processed += u64::from(a.true_label);
                }
                Outcome::AutoMarkedFraud => {
                    stats.auto_marked += 1;
                    stats.false_auto_marks += u64::from(!a.true_label);
                }
                Outcome::CustomerContacted => stats.contacted += 1,
            }
            d
        })
        .collect();
    stats.contacts_avoided = stats.auto_marked;
    Ok(Simulation {
        advice,
        decisions,
        stats,
    })
}

/// Scores every transaction with one forward pass and routes `alerts`.
pub fn simulate_workflow(
    graph: &HeteroGraph,
    params: &ModelParams,
    alerts: &[Alert],
    policy: &AdvicePolicy,
    threshold: f64,
) -> Result<Simulation> {
    if let Some(a) = alerts.iter().find(|a| a.edge_index >= graph.num_transactions()) {
        return Err(invalid(format!("alert references missing transaction {}", a.edge_index)));
    }
    let advice = policy.advise(alerts.len())?;
    let scores = forward_pass(graph, params)?.probabilities();
    route_all(alerts, advice, &scores, threshold)
}

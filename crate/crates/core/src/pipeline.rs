//! Records in, trained model out.
//!
//! The split is drawn over record labels first so the encoder statistics come
//! from training rows only. Message passing still runs over every
//! transaction.

use crate::error::Result;
use crate::graph::{build_graph, HeteroGraph};
use crate::ingest::{fit_encoder, EncoderConfig, FeatureEncoder, TransactionRecord};
use crate::rgcn::ModelParams;
use crate::training::{split_labels, train_with_split, SplitSpec, TrainConfig, TrainHistory};

#[derive(Debug, Clone)]
pub struct Prepared {
    pub graph: HeteroGraph,
    pub encoder: FeatureEncoder,
    pub split: SplitSpec,
}

/// Splits, fits the encoder on the training rows and builds the graph.
pub fn prepare(records: &[TransactionRecord], train: &TrainConfig, encoder: &EncoderConfig) -> Result<Prepared> {
    train.validate()?;
    let labels: Vec<bool> = records.iter().map(|r| r.is_fraud).collect();
    let split = split_labels(&labels, train.split_ratio, train.seed)?;
    let train_rows: Vec<TransactionRecord> = split.train.iter().map(|&i| records[i].clone()).collect();
    let encoder = fit_encoder(&train_rows, encoder)?;
    let graph = build_graph(records, &encoder)?;
    Ok(Prepared { graph, encoder, split })
}

/// Rebuilds the graph and split for already-fitted encoder statistics, as
/// when evaluating a checkpoint.
pub fn prepare_with_encoder(
    records: &[TransactionRecord],
    train: &TrainConfig,
    encoder: &FeatureEncoder,
) -> Result<Prepared> {
    let labels: Vec<bool> = records.iter().map(|r| r.is_fraud).collect();
    let split = split_labels(&labels, train.split_ratio, train.seed)?;
    let graph = build_graph(records, encoder)?;
    Ok(Prepared {
        graph,
        encoder: encoder.clone(),
        split,
    })
}

pub fn fit(
    records: &[TransactionRecord],
    train: &TrainConfig,
    encoder: &EncoderConfig,
) -> Result<(Prepared, ModelParams, TrainHistory)> {
    let prepared = prepare(records, train, encoder)?;
    let (params, history) = train_with_split(&prepared.graph, train, prepared.split.clone())?;
    Ok((prepared, params, history))
}

//! Relational graph convolution for card/merchant transaction graphs.
//!
//! The pipeline runs `ingest` (CSV parsing and feature encoding) into `graph`
//! (typed nodes, relation-indexed adjacency), trains an `rgcn` model with the
//! `training` loop, and feeds scores into the `workflow` contact-routing
//! simulator. `synthgen` produces schema-compatible corpora with planted fraud.

pub mod checkpoint;
pub mod fixtures;
pub mod error;
pub mod graph;
pub mod ingest;
pub mod numerics;
pub mod par;
pub mod pipeline;
pub mod rgcn;
pub mod synthgen;
pub mod training;
pub mod workflow;

pub use error::{Error, Result};
pub use graph::{HeteroGraph, NodeId, Relation};
pub use ingest::{EncoderConfig, FeatureEncoder, TransactionRecord};
pub use numerics::Matrix;
pub use rgcn::{ModelConfig, ModelParams};
pub use training::{Metrics, TrainConfig, TrainHistory};

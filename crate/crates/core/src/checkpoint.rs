//! Model checkpoint file.
//!
//! A checkpoint is one JSON document:
//!
//! ```text
//! {
//!   "format": "fraudgraph-checkpoint",
//!   "version": 1,
//!   "relations": ["pays", "paid_by", "self"],
//!   "model": { "embed_dim": 32, "layer_dims": [32, 32] },
//!   "training": { ...TrainConfig fields... },
//!   "encoder": { ...FeatureEncoder fields... },
//!   "nodes": { "cards": ["<card_id>", ...], "merchants": [<merchant name>, ...] },
//!   "tensors": [ { "name": "card_embeddings", "shape": [rows, cols], "values": [...] }, ... ]
//! }
//! ```
//!
//! Tensor values are row-major 64-bit floats written in shortest round-trip
//! form, so a save/load cycle reproduces every bit. Tensor names are
//! `card_embeddings`, `merchant_embeddings`, `layers.<l>.<relation>.weight`
//! (`d_in × d_out`), `layers.<l>.<relation>.bias` (`1 × d_out`),
//! `head.weight` (`1 × (2·d_L + F)`) and `head.bias` (`1 × 1`).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, Relation};
use crate::ingest::FeatureEncoder;
use crate::numerics::Matrix;
use crate::rgcn::{LayerParams, ModelConfig, ModelParams};
use crate::training::TrainConfig;

pub const FORMAT: &str = "fraudgraph-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub training: TrainConfig,
    pub encoder: FeatureEncoder,
    pub cards: Vec<String>,
    pub merchants: Vec<i64>,
    pub params: ModelParams,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Nodes {
    cards: Vec<String>,
    merchants: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Tensor {
    name: String,
    shape: [usize; 2],
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    version: u32,
    relations: Vec<String>,
    model: ModelConfig,
    training: TrainConfig,
    encoder: FeatureEncoder,
    nodes: Nodes,
    tensors: Vec<Tensor>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

impl Checkpoint {
    pub fn new(graph: &HeteroGraph, params: ModelParams, encoder: FeatureEncoder, training: TrainConfig) -> Self {
        Self {
            model: training.model.clone(),
            training,
            encoder,
            cards: graph.card_keys().map(str::to_string).collect(),
            merchants: graph.merchant_keys().collect(),
            params,
        }
    }

    /// Fails unless `graph` has exactly the checkpoint's nodes, in order.
    pub fn check_graph(&self, graph: &HeteroGraph) -> Result<()> {
        let same = graph.card_keys().eq(self.cards.iter().map(String::as_str))
            && graph.merchant_keys().eq(self.merchants.iter().copied());
        if !same {
            return Err(bad("graph nodes differ from the nodes the model was trained on"));
        }
        self.params.validate(graph)
    }

    pub fn write<W: Write>(&self, mut sink: W) -> Result<()> {
        let p = &self.params;
        let mut tensors = vec![
            Tensor {
                name: "card_embeddings".into(),
                shape: [p.card_embeddings.rows(), p.card_embeddings.cols()],
                values: p.card_embeddings.data().to_vec(),
            },
            Tensor {
                name: "merchant_embeddings".into(),
                shape: [p.merchant_embeddings.rows(), p.merchant_embeddings.cols()],
                values: p.merchant_embeddings.data().to_vec(),
            },
        ];
        for (l, lp) in p.layers.iter().enumerate() {
            for r in Relation::ALL {
                let rp = lp.relation(r);
                tensors.push(Tensor {
                    name: format!("layers.{l}.{r}.weight"),
                    shape: [rp.weight.rows(), rp.weight.cols()],
                    values: rp.weight.data().to_vec(),
                });
                tensors.push(Tensor {
                    name: format!("layers.{l}.{r}.bias"),
                    shape: [1, rp.bias.len()],
                    values: rp.bias.clone(),
                });
            }
        }
        tensors.push(Tensor {
            name: "head.weight".into(),
            shape: [1, p.head_weights.len()],
            values: p.head_weights.clone(),
        });
        tensors.push(Tensor {
            name: "head.bias".into(),
            shape: [1, 1],
            values: vec![p.head_bias],
        });

        let doc = Document {
            format: FORMAT.into(),
            version: VERSION,
            relations: Relation::ALL.iter().map(|r| r.name().to_string()).collect(),
            model: self.model.clone(),
            training: self.training.clone(),
            encoder: self.encoder.clone(),
            nodes: Nodes {
                cards: self.cards.clone(),
                merchants: self.merchants.clone(),
            },
            tensors,
        };
        serde_json::to_writer(&mut sink, &doc)?;
        sink.write_all(b"\n")?;
        Ok(())
    }

    pub fn read<R: Read>(source: R) -> Result<Self> {
        let doc: Document = serde_json::from_reader(source)?;
        if doc.format != FORMAT {
            return Err(bad(format!("unknown format {:?}", doc.format)));
        }
        if doc.version != VERSION {
            return Err(bad(format!("unsupported version {}", doc.version)));
        }
        let expected: Vec<&str> = Relation::ALL.iter().map(|r| r.name()).collect();
        if doc.relations != expected {
            return Err(bad(format!("relation set {:?} is not {:?}", doc.relations, expected)));
        }

        let mut tensors: std::collections::HashMap<String, Tensor> =
            doc.tensors.into_iter().map(|t| (t.name.clone(), t)).collect();
        let mut take = |name: &str| -> Result<Matrix> {
            let t = tensors
                .remove(name)
                .ok_or_else(|| bad(format!("missing tensor {name}")))?;
            Matrix::from_vec(t.shape[0], t.shape[1], t.values).map_err(|_| bad(format!("tensor {name} has the wrong size")))
        };

        let card_embeddings = take("card_embeddings")?;
        let merchant_embeddings = take("merchant_embeddings")?;
        let mut layers = Vec::with_capacity(doc.model.layer_dims.len());
        for l in 0..doc.model.layer_dims.len() {
            let w0 = take(&format!("layers.{l}.pays.weight"))?;
            let mut lp = LayerParams::zeros(w0.rows(), w0.cols());
            lp.relation_mut(Relation::Pays).weight = w0;
            for r in Relation::ALL {
                if r != Relation::Pays {
                    lp.relation_mut(r).weight = take(&format!("layers.{l}.{r}.weight"))?;
                }
                lp.relation_mut(r).bias = take(&format!("layers.{l}.{r}.bias"))?.into_data();
            }
            layers.push(lp);
        }
        let head_weights = take("head.weight")?.into_data();
        let head_bias = take("head.bias")?;
        if head_bias.data().len() != 1 {
            return Err(bad("head.bias must hold one value"));
        }
        let head_bias = head_bias.data()[0];
        drop(take);
        if let Some(extra) = tensors.keys().next() {
            return Err(bad(format!("unexpected tensor {extra}")));
        }

        let params = ModelParams {
            card_embeddings,
            merchant_embeddings,
            layers,
            head_weights,
            head_bias,
        };
        if params.card_embeddings.rows() != doc.nodes.cards.len()
            || params.merchant_embeddings.rows() != doc.nodes.merchants.len()
        {
            return Err(bad("embedding rows do not match the node lists"));
        }
        let mut training = doc.training;
        training.model = doc.model.clone();
        Ok(Checkpoint {
            model: doc.model,
            training,
            encoder: doc.encoder,
            cards: doc.nodes.cards,
            merchants: doc.nodes.merchants,
            params,
        })
    }
}

//! Heterogeneous card/merchant transaction graph.
//!
//! Node ids are global: cards occupy `0..num_cards`, merchants follow. Edge
//! indices are global too: `pays` edges come first and share their index with
//! the transaction row they came from, then the mirrored `paid_by` edges, then
//! one `self` edge per node.

use std::fmt;
use std::io::Write;

use indexmap::IndexSet;

use crate::error::{invalid, Error, Result};
use crate::ingest::{FeatureEncoder, TransactionRecord};
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    /// card → merchant, one per transaction.
    Pays,
    /// merchant → card mirror of `Pays`.
    PaidBy,
    /// node → itself.
    SelfLoop,
}

impl Relation {
    pub const ALL: [Relation; 3] = [Relation::Pays, Relation::PaidBy, Relation::SelfLoop];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Relation::Pays => "pays",
            Relation::PaidBy => "paid_by",
            Relation::SelfLoop => "self",
        }
    }

    pub fn from_name(name: &str) -> Option<Relation> {
        Relation::ALL.into_iter().find(|r| r.name() == name)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Card,
    Merchant,
}

impl NodeKind {
    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Card => "card",
            NodeKind::Merchant => "merchant",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub source: NodeId,
    pub target: NodeId,
    pub relation: Relation,
    pub index: usize,
}

/// Per-node adjacency in compressed form; entries are `(neighbor, edge index)`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Csr {
    offsets: Vec<usize>,
    entries: Vec<(NodeId, usize)>,
}

impl Csr {
    /// Groups `(key, neighbor, edge)` triples by key, keeping input order
    /// within each group.
    fn build(num_nodes: usize, triples: impl Iterator<Item = (usize, NodeId, usize)> + Clone) -> Csr {
        let mut offsets = vec![0usize; num_nodes + 1];
        for (key, _, _) in triples.clone() {
            offsets[key + 1] += 1;
        }
        for i in 0..num_nodes {
            offsets[i + 1] += offsets[i];
        }
        let mut cursor = offsets.clone();
        let mut entries = vec![(NodeId(0), 0); offsets[num_nodes]];
        for (key, nb, edge) in triples {
            entries[cursor[key]] = (nb, edge);
            cursor[key] += 1;
        }
        Csr { offsets, entries }
    }

    fn get(&self, node: usize) -> &[(NodeId, usize)] {
        &self.entries[self.offsets[node]..self.offsets[node + 1]]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroGraph {
    cards: IndexSet<String>,
    merchants: IndexSet<i64>,
    edges: Vec<Edge>,
    incoming: [Csr; 3],
    outgoing: [Csr; 3],
    edge_features: Matrix,
    edge_labels: Vec<bool>,
}

/// Builds the graph from transactions: one node per distinct card and
/// merchant, one `pays` edge per record (parallel edges kept).
pub fn build_graph(records: &[TransactionRecord], encoder: &FeatureEncoder) -> Result<HeteroGraph> {
    if records.is_empty() {
        return Err(invalid("cannot build a graph from zero transactions"));
    }
    let mut cards = IndexSet::new();
    let mut merchants = IndexSet::new();
    let mut pays = Vec::with_capacity(records.len());
    for r in records {
        let (c, _) = cards.insert_full(r.card_id.clone());
        let (m, _) = merchants.insert_full(r.merchant_name);
        pays.push((c, m));
    }
    let f = encoder.feature_dim;
    let mut features = Matrix::zeros(records.len(), f);
    crate::par::for_each_row(features.data_mut(), f, |i, row| {
        encoder.encode_into(&records[i], row)
    });
    let labels = records.iter().map(|r| r.is_fraud).collect();
    HeteroGraph::assemble(cards, merchants, &pays, features, labels, true)
}

impl HeteroGraph {
    /// Builds a graph from explicit node keys and `(card, merchant)` pays
    /// pairs given as positions into the key lists.
    pub fn from_parts(
        card_keys: Vec<String>,
        merchant_keys: Vec<i64>,
        pays: &[(usize, usize)],
        edge_features: Matrix,
        edge_labels: Vec<bool>,
        self_loops: bool,
    ) -> Result<HeteroGraph> {
        let nc = card_keys.len();
        let cards: IndexSet<String> = card_keys.into_iter().collect();
        let merchants: IndexSet<i64> = merchant_keys.iter().copied().collect();
        if cards.len() != nc || merchants.len() != merchant_keys.len() {
            return Err(invalid("duplicate node keys"));
        }
        if let Some(&(c, m)) = pays
            .iter()
            .find(|(c, m)| *c >= cards.len() || *m >= merchants.len())
        {
            return Err(invalid(format!("pays edge ({c}, {m}) out of range")));
        }
        HeteroGraph::assemble(cards, merchants, pays, edge_features, edge_labels, self_loops)
    }

    fn assemble(
        cards: IndexSet<String>,
        merchants: IndexSet<i64>,
        pays: &[(usize, usize)],
        edge_features: Matrix,
        edge_labels: Vec<bool>,
        self_loops: bool,
    ) -> Result<HeteroGraph> {
        let t = pays.len();
        if edge_features.rows() != t || edge_labels.len() != t {
            return Err(Error::Shape(format!(
                "{t} pays edges but {} feature rows and {} labels",
                edge_features.rows(),
                edge_labels.len()
            )));
        }
        let nc = cards.len();
        let n = nc + merchants.len();
        let mut edges = Vec::with_capacity(2 * t + if self_loops { n } else { 0 });
        for (i, &(c, m)) in pays.iter().enumerate() {
            edges.push(Edge {
                source: NodeId(c),
                target: NodeId(nc + m),
                relation: Relation::Pays,
                index: i,
            });
        }
        for (i, &(c, m)) in pays.iter().enumerate() {
            edges.push(Edge {
                source: NodeId(nc + m),
                target: NodeId(c),
                relation: Relation::PaidBy,
                index: t + i,
            });
        }
        if self_loops {
            for v in 0..n {
                edges.push(Edge {
                    source: NodeId(v),
                    target: NodeId(v),
                    relation: Relation::SelfLoop,
                    index: 2 * t + v,
                });
            }
        }
        let by_rel = |rel: Relation| edges.iter().filter(move |e| e.relation == rel);
        let incoming = Relation::ALL.map(|rel| {
            Csr::build(n, by_rel(rel).map(|e| (e.target.0, e.source, e.index)))
        });
        let outgoing = Relation::ALL.map(|rel| {
            Csr::build(n, by_rel(rel).map(|e| (e.source.0, e.target, e.index)))
        });
        Ok(HeteroGraph {
            cards,
            merchants,
            edges,
            incoming,
            outgoing,
            edge_features,
            edge_labels,
        })
    }

    pub fn num_cards(&self) -> usize {
        self.cards.len()
    }

    pub fn num_merchants(&self) -> usize {
        self.merchants.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.cards.len() + self.merchants.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Number of transactions (`pays` edges).
    pub fn num_transactions(&self) -> usize {
        self.edge_labels.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_features(&self) -> &Matrix {
        &self.edge_features
    }

    pub fn feature_dim(&self) -> usize {
        self.edge_features.cols()
    }

    pub fn edge_labels(&self) -> &[bool] {
        &self.edge_labels
    }

    pub fn card_keys(&self) -> impl Iterator<Item = &str> {
        self.cards.iter().map(String::as_str)
    }

    pub fn merchant_keys(&self) -> impl Iterator<Item = i64> + '_ {
        self.merchants.iter().copied()
    }

    pub fn card_node(&self, card_id: &str) -> Option<NodeId> {
        self.cards.get_index_of(card_id).map(NodeId)
    }

    pub fn merchant_node(&self, merchant: i64) -> Option<NodeId> {
        self.merchants
            .get_index_of(&merchant)
            .map(|m| NodeId(self.cards.len() + m))
    }

    pub fn kind(&self, node: NodeId) -> NodeKind {
        if node.0 < self.cards.len() {
            NodeKind::Card
        } else {
            NodeKind::Merchant
        }
    }

    /// Human-readable key of a node (card id or merchant name).
    pub fn key(&self, node: NodeId) -> String {
        match self.kind(node) {
            NodeKind::Card => self.cards[node.0].clone(),
            NodeKind::Merchant => self.merchants[node.0 - self.cards.len()].to_string(),
        }
    }

    /// `(card, merchant)` endpoints of a transaction.
    pub fn pays_endpoints(&self, tx: usize) -> (NodeId, NodeId) {
        let e = &self.edges[tx];
        (e.source, e.target)
    }

    fn check(&self, node: NodeId) -> Result<()> {
        if node.0 >= self.num_nodes() {
            return Err(invalid(format!(
                "node {} out of range ({} nodes)",
                node.0,
                self.num_nodes()
            )));
        }
        Ok(())
    }

    /// In-neighbors of `node` under `relation`, as `(neighbor, edge index)` in
    /// insertion order.
    pub fn neighbors(&self, node: NodeId, relation: Relation) -> Result<&[(NodeId, usize)]> {
        self.check(node)?;
        Ok(self.in_neighbors(node.0, relation))
    }

    pub(crate) fn in_neighbors(&self, node: usize, relation: Relation) -> &[(NodeId, usize)] {
        self.incoming[relation.index()].get(node)
    }

    /// Nodes that list `node` among their in-neighbors under `relation`.
    pub(crate) fn out_neighbors(&self, node: usize, relation: Relation) -> &[(NodeId, usize)] {
        self.outgoing[relation.index()].get(node)
    }

    /// Normalisation constant for messages into `node` under `relation`: its
    /// in-degree. Zero means the relation contributes nothing to the node.
    pub fn degree_norm(&self, node: NodeId, relation: Relation) -> Result<f64> {
        Ok(self.neighbors(node, relation)?.len() as f64)
    }

    /// Writes `relation,source_type,source_key,target_type,target_key,edge_index` rows.
    pub fn write_edge_list<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "relation",
            "source_type",
            "source_key",
            "target_type",
            "target_key",
            "edge_index",
        ])?;
        for e in &self.edges {
            w.write_record([
                e.relation.name().to_string(),
                self.kind(e.source).name().to_string(),
                self.key(e.source),
                self.kind(e.target).name().to_string(),
                self.key(e.target),
                e.index.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

//! Feature graphs derived from fitted tree ensembles.
//!
//! Nodes are the features an ensemble splits on. Every internal node and its
//! internal child contribute one undirected edge between their split
//! features; edges are unioned over all trees and every node gets a
//! self-loop.

use std::collections::BTreeSet;
use std::io::Write;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::boosting::{used_features, GbtEnsemble, TreeNode};
use crate::data::OmicsMatrix;
use crate::error::{MotgnnError, Result};

/// Undirected feature graph with self-loops.
///
/// `adjacency` is indexed by node position (`0..p*`), not by original column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct FeatureGraph {
    node_columns: Vec<usize>,
    node_names: Vec<String>,
    adjacency: Array2<u8>,
    edge_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    /// Edge count including self-loops.
    pub edges: usize,
    pub edge_node_ratio: f64,
}

impl FeatureGraph {
    /// Build from node columns (ascending, unique) and off-diagonal edges given
    /// as pairs of original column indices.
    pub fn from_edges(
        node_columns: Vec<usize>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        if node_columns.is_empty() {
            return Err(MotgnnError::Degenerate("feature graph has no nodes".into()));
        }
        if node_columns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MotgnnError::InvalidData(
                "graph node columns must be strictly ascending".into(),
            ));
        }
        let p = node_columns.len();
        let position = |c: usize| {
            node_columns
                .binary_search(&c)
                .map_err(|_| MotgnnError::InvalidData(format!("edge endpoint {c} is not a node")))
        };
        let mut adjacency = Array2::<u8>::zeros((p, p));
        for i in 0..p {
            adjacency[[i, i]] = 1;
        }
        for (a, b) in edges {
            let (i, j) = (position(a)?, position(b)?);
            adjacency[[i, j]] = 1;
            adjacency[[j, i]] = 1;
        }
        let off_diagonal = adjacency.iter().filter(|&&v| v == 1).count() - p;
        let node_names = node_columns.iter().map(|c| c.to_string()).collect();
        Ok(FeatureGraph {
            node_columns,
            node_names,
            adjacency,
            edge_count: p + off_diagonal / 2,
        })
    }

    /// Label nodes with the feature names of the source matrix's header.
    pub fn with_names(mut self, feature_names: &[String]) -> Result<Self> {
        if let Some(&bad) = self.node_columns.iter().find(|&&c| c >= feature_names.len()) {
            return Err(MotgnnError::Shape(format!(
                "graph node column {bad} outside {} feature names",
                feature_names.len()
            )));
        }
        self.node_names = self
            .node_columns
            .iter()
            .map(|&c| feature_names[c].clone())
            .collect();
        Ok(self)
    }

    pub fn node_columns(&self) -> &[usize] {
        &self.node_columns
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn adjacency(&self) -> &Array2<u8> {
        &self.adjacency
    }

    pub fn num_nodes(&self) -> usize {
        self.node_columns.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn edge_node_ratio(&self) -> f64 {
        self.edge_count as f64 / self.num_nodes() as f64
    }

    /// Adjacency as a 0/1 `f64` matrix, for use as a weight mask.
    pub fn mask(&self) -> Array2<f64> {
        self.adjacency.mapv(f64::from)
    }

    /// Off-diagonal edges as `(i, j)` node positions with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let p = self.num_nodes();
        let mut out = Vec::new();
        for i in 0..p {
            for j in i + 1..p {
                if self.adjacency[[i, j]] == 1 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Off-diagonal edges as original column pairs `(a, b)` with `a < b`.
    pub fn column_edges(&self) -> BTreeSet<(usize, usize)> {
        self.edges()
            .into_iter()
            .map(|(i, j)| (self.node_columns[i], self.node_columns[j]))
            .collect()
    }

    /// `u,v` per line in original column indices, self-loops first, then
    /// off-diagonal edges in ascending order.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for &c in &self.node_columns {
            writeln!(out, "{c},{c}")?;
        }
        for (a, b) in self.column_edges() {
            writeln!(out, "{a},{b}")?;
        }
        Ok(())
    }

    /// `column,name` per node.
    pub fn write_node_map<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "column,name")?;
        for (c, name) in self.node_columns.iter().zip(&self.node_names) {
            writeln!(out, "{c},{name}")?;
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    node_columns: Vec<usize>,
    node_names: Vec<String>,
    /// Off-diagonal edges in original column indices.
    edges: Vec<(usize, usize)>,
}

impl From<FeatureGraph> for GraphRepr {
    fn from(g: FeatureGraph) -> Self {
        GraphRepr {
            edges: g.column_edges().into_iter().collect(),
            node_columns: g.node_columns,
            node_names: g.node_names,
        }
    }
}

impl TryFrom<GraphRepr> for FeatureGraph {
    type Error = MotgnnError;

    fn try_from(r: GraphRepr) -> Result<Self> {
        if r.node_names.len() != r.node_columns.len() {
            return Err(MotgnnError::Checkpoint("graph node names do not match nodes".into()));
        }
        let mut g = FeatureGraph::from_edges(r.node_columns, r.edges)?;
        g.node_names = r.node_names;
        Ok(g)
    }
}

/// Split-feature pairs `{parent, child}` for every internal node with an
/// internal child. Same-feature pairs are dropped. Pairs are `(min, max)`.
pub fn tree_edges(tree: &TreeNode) -> BTreeSet<(usize, usize)> {
    let mut edges = BTreeSet::new();
    let mut stack = vec![tree];
    while let Some(node) = stack.pop() {
        if let TreeNode::Internal {
            feature,
            left,
            right,
            ..
        } = node
        {
            for child in [left.as_ref(), right.as_ref()] {
                if let Some(cf) = child.split_feature() {
                    if cf != *feature {
                        edges.insert((cf.min(*feature), cf.max(*feature)));
                    }
                }
                stack.push(child);
            }
        }
    }
    edges
}

pub fn build_feature_graph(ensemble: &GbtEnsemble) -> Result<FeatureGraph> {
    let nodes = used_features(ensemble)?;
    let mut edges = BTreeSet::new();
    for tree in ensemble.trees() {
        edges.extend(tree_edges(tree));
    }
    FeatureGraph::from_edges(nodes, edges)
}

pub fn graph_stats(graph: &FeatureGraph) -> GraphStats {
    GraphStats {
        nodes: graph.num_nodes(),
        edges: graph.edge_count(),
        edge_node_ratio: graph.edge_node_ratio(),
    }
}

/// Restrict `x` to the graph's node columns, in node order.
pub fn reduce_matrix(x: &OmicsMatrix, graph: &FeatureGraph) -> Result<OmicsMatrix> {
    x.select_columns(graph.node_columns())
}

//! Typed heterogeneous graph model.
//!
//! A [`HeteroGraph`] is immutable once built. Nodes are stored in a canonical
//! order (natural order of their external ids) and every undirected edge is a
//! single record with `src <= dst`, so two files describing the same logical
//! graph produce identical in-memory graphs regardless of line order.

mod io;
mod view;

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use io::{load_graph, parse_graph, save_graph, write_edges_tsv, write_nodes_tsv, EDGES_FILE, NODES_FILE};
pub use view::{CrossTypeView, EdgeClass, EdgePartition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<F> {
    /// Smaller endpoint (canonical node index).
    pub src: usize,
    pub dst: usize,
    pub edge_type: usize,
    pub weight: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeteroGraph<F> {
    node_ids: Vec<String>,
    node_types: Vec<usize>,
    node_type_names: Vec<String>,
    edge_type_names: Vec<String>,
    edges: Vec<Edge<F>>,
    weighted: bool,
    target_type: usize,
    features: Vec<Option<Vec<F>>>,
    labels: Vec<Option<usize>>,
    splits: Vec<Option<Split>>,
    num_classes: usize,
    target_nodes: Vec<usize>,
    nontarget_nodes: Vec<usize>,
    local_index: Vec<usize>,
    id_index: HashMap<String, usize>,
}

impl<F: Scalar> HeteroGraph<F> {
    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<F>] {
        &self.edges
    }

    pub fn edge(&self, id: usize) -> &Edge<F> {
        &self.edges[id]
    }

    /// Whether the source data carried explicit edge weights.
    pub fn is_weighted(&self) -> bool {
        self.weighted
    }

    pub fn node_id(&self, node: usize) -> &str {
        &self.node_ids[node]
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_type(&self, node: usize) -> usize {
        self.node_types[node]
    }

    pub fn node_type_names(&self) -> &[String] {
        &self.node_type_names
    }

    pub fn edge_type_names(&self) -> &[String] {
        &self.edge_type_names
    }

    pub fn num_node_types(&self) -> usize {
        self.node_type_names.len()
    }

    pub fn num_edge_types(&self) -> usize {
        self.edge_type_names.len()
    }

    pub fn target_type(&self) -> usize {
        self.target_type
    }

    pub fn target_type_name(&self) -> &str {
        &self.node_type_names[self.target_type]
    }

    pub fn is_target(&self, node: usize) -> bool {
        self.node_types[node] == self.target_type
    }

    /// Number of target classes `C`.
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn label(&self, node: usize) -> Option<usize> {
        self.labels[node]
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn split(&self, node: usize) -> Option<Split> {
        self.splits[node]
    }

    pub fn features(&self, node: usize) -> Option<&[F]> {
        self.features[node].as_deref()
    }

    /// Feature width for a node type, `None` when that type carries no features.
    pub fn feature_dim(&self, node_type: usize) -> Option<usize> {
        self.node_types
            .iter()
            .position(|&t| t == node_type)
            .and_then(|n| self.features[n].as_ref().map(Vec::len))
    }

    /// Target nodes in canonical order.
    pub fn target_nodes(&self) -> &[usize] {
        &self.target_nodes
    }

    /// Non-target nodes in canonical order.
    pub fn nontarget_nodes(&self) -> &[usize] {
        &self.nontarget_nodes
    }

    /// Position of a node within [`Self::target_nodes`] or [`Self::nontarget_nodes`].
    pub fn local_index(&self, node: usize) -> usize {
        self.local_index[node]
    }

    pub fn n_target(&self) -> usize {
        self.target_nodes.len()
    }

    pub fn n_nontarget(&self) -> usize {
        self.nontarget_nodes.len()
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    /// Target nodes whose split is `split`, in canonical order.
    pub fn nodes_in_split(&self, split: Split) -> Vec<usize> {
        self.target_nodes
            .iter()
            .copied()
            .filter(|&n| self.splits[n] == Some(split))
            .collect()
    }

    /// Copy of the graph keeping only edges for which `keep(edge_id)` holds.
    /// Retained edges keep their relative order.
    pub fn retain_edges(&self, mut keep: impl FnMut(usize) -> bool) -> Self {
        let mut g = self.clone();
        g.edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(*i))
            .map(|(_, e)| *e)
            .collect();
        g
    }

    /// Copy of the graph with a new split assignment for target nodes.
    pub fn with_splits(&self, splits: &[Option<Split>]) -> Result<Self> {
        if splits.len() != self.node_count() {
            return Err(Error::Dimension(format!(
                "split vector has {} entries for {} nodes",
                splits.len(),
                self.node_count()
            )));
        }
        let mut g = self.clone();
        g.splits = splits.to_vec();
        g.validate()?;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        for (n, &t) in self.node_types.iter().enumerate() {
            let target = t == self.target_type;
            if !target && self.labels[n].is_some() {
                return Err(Error::Validation(format!(
                    "node {} is not of the target type but carries a label",
                    self.node_ids[n]
                )));
            }
            if !target && self.splits[n].is_some() {
                return Err(Error::Validation(format!(
                    "node {} is not of the target type but carries a split",
                    self.node_ids[n]
                )));
            }
            if target && self.splits[n] == Some(Split::Train) && self.labels[n].is_none() {
                return Err(Error::Validation(format!(
                    "training node {} has no label",
                    self.node_ids[n]
                )));
            }
            if let Some(y) = self.labels[n] {
                if y >= self.num_classes {
                    return Err(Error::Validation(format!(
                        "label {y} of node {} outside [0, {})",
                        self.node_ids[n], self.num_classes
                    )));
                }
            }
        }
        Ok(())
    }
}

struct PendingNode<F> {
    id: String,
    type_name: String,
    label: Option<usize>,
    split: Option<Split>,
    features: Option<Vec<F>>,
}

struct PendingEdge<F> {
    src: String,
    dst: String,
    type_name: String,
    weight: Option<F>,
}

/// Incremental constructor; [`GraphBuilder::build`] validates and canonicalizes.
pub struct GraphBuilder<F> {
    nodes: Vec<PendingNode<F>>,
    edges: Vec<PendingEdge<F>>,
    index: HashMap<String, usize>,
    num_classes: Option<usize>,
}

impl<F: Scalar> Default for GraphBuilder<F> {
    fn default() -> Self {
        Self {
            nodes: Vec::new(),
            edges: Vec::new(),
            index: HashMap::new(),
            num_classes: None,
        }
    }
}

impl<F: Scalar> GraphBuilder<F> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares `C` explicitly instead of inferring it from the largest label.
    pub fn num_classes(&mut self, c: usize) -> &mut Self {
        self.num_classes = Some(c);
        self
    }

    pub fn add_node(
        &mut self,
        id: impl Into<String>,
        type_name: impl Into<String>,
        label: Option<usize>,
        split: Option<Split>,
        features: Option<Vec<F>>,
    ) -> Result<&mut Self> {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(Error::Validation(format!("duplicate node id {id}")));
        }
        self.index.insert(id.clone(), self.nodes.len());
        self.nodes.push(PendingNode {
            id,
            type_name: type_name.into(),
            label,
            split,
            features,
        });
        Ok(self)
    }

    /// Adds an undirected edge; `weight = None` means unit weight from an unweighted source.
    pub fn add_edge(
        &mut self,
        src: impl Into<String>,
        dst: impl Into<String>,
        type_name: impl Into<String>,
        weight: Option<F>,
    ) -> &mut Self {
        self.edges.push(PendingEdge {
            src: src.into(),
            dst: dst.into(),
            type_name: type_name.into(),
            weight,
        });
        self
    }

    pub fn build(self, target_type: &str) -> Result<HeteroGraph<F>> {
        let GraphBuilder {
            nodes,
            edges,
            index,
            num_classes,
        } = self;

        let mut order: Vec<usize> = (0..nodes.len()).collect();
        let numeric = nodes.iter().all(|n| n.id.parse::<u64>().is_ok());
        if numeric {
            order.sort_by_key(|&i| nodes[i].id.parse::<u64>().unwrap());
        } else {
            order.sort_by(|&a, &b| nodes[a].id.cmp(&nodes[b].id));
        }
        let mut canonical = vec![0usize; nodes.len()];
        for (pos, &i) in order.iter().enumerate() {
            canonical[i] = pos;
        }

        let mut node_type_names: Vec<String> = Vec::new();
        let mut node_types = Vec::with_capacity(nodes.len());
        let mut node_ids = Vec::with_capacity(nodes.len());
        let mut features = Vec::with_capacity(nodes.len());
        let mut labels = Vec::with_capacity(nodes.len());
        let mut splits = Vec::with_capacity(nodes.len());
        for &i in &order {
            let n = &nodes[i];
            let t = match node_type_names.iter().position(|x| *x == n.type_name) {
                Some(t) => t,
                None => {
                    node_type_names.push(n.type_name.clone());
                    node_type_names.len() - 1
                }
            };
            node_types.push(t);
            node_ids.push(n.id.clone());
            features.push(n.features.clone());
            labels.push(n.label);
            splits.push(n.split);
        }

        let target = node_type_names
            .iter()
            .position(|x| x == target_type)
            .ok_or_else(|| {
                Error::Config(format!(
                    "target type {target_type:?} not among node types {node_type_names:?}"
                ))
            })?;

        // Features: all-or-nothing per type, constant width within a type.
        for t in 0..node_type_names.len() {
            let mut width: Option<Option<usize>> = None;
            for n in (0..node_types.len()).filter(|&n| node_types[n] == t) {
                let w = features[n].as_ref().map(Vec::len);
                match width {
                    None => width = Some(w),
                    Some(prev) if prev != w => {
                        return Err(Error::Validation(format!(
                            "node {} of type {} has feature width {:?}, expected {:?}",
                            node_ids[n], node_type_names[t], w, prev
                        )))
                    }
                    _ => {}
                }
            }
        }
        if features.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Validation("non-finite feature value".into()));
        }

        let weighted = edges.iter().any(|e| e.weight.is_some());
        let mut staged = Vec::with_capacity(edges.len());
        for e in &edges {
            let lookup = |id: &str| {
                index.get(id).map(|&i| canonical[i]).ok_or_else(|| {
                    Error::Validation(format!("edge endpoint {id} is not a declared node"))
                })
            };
            let (a, b) = (lookup(&e.src)?, lookup(&e.dst)?);
            let w = e.weight.unwrap_or_else(F::one);
            if !w.is_finite() || w < F::zero() {
                return Err(Error::Validation(format!(
                    "edge {}-{} has invalid weight {w}",
                    e.src, e.dst
                )));
            }
            staged.push((a.min(b), a.max(b), e.type_name.as_str(), w));
        }
        staged.sort_by(|x, y| {
            (x.0, x.1, x.2)
                .cmp(&(y.0, y.1, y.2))
                .then(x.3.partial_cmp(&y.3).expect("finite weights"))
        });
        let mut edge_type_names: Vec<String> = Vec::new();
        let mut out_edges = Vec::with_capacity(staged.len());
        for (src, dst, name, weight) in staged {
            let edge_type = match edge_type_names.iter().position(|x| x == name) {
                Some(t) => t,
                None => {
                    edge_type_names.push(name.to_string());
                    edge_type_names.len() - 1
                }
            };
            out_edges.push(Edge {
                src,
                dst,
                edge_type,
                weight,
            });
        }

        let max_label = labels.iter().flatten().copied().max();
        let inferred = max_label.map_or(0, |m| m + 1);
        let num_classes = match num_classes {
            Some(c) if c < inferred => {
                return Err(Error::Validation(format!(
                    "declared {c} classes but label {} present",
                    inferred - 1
                )))
            }
            Some(c) => c,
            None => inferred,
        };
        if num_classes < 2 {
            return Err(Error::Validation(format!(
                "need at least 2 target classes, found {num_classes}"
            )));
        }

        let mut target_nodes = Vec::new();
        let mut nontarget_nodes = Vec::new();
        let mut local_index = vec![0usize; node_types.len()];
        for (n, &t) in node_types.iter().enumerate() {
            if t == target {
                local_index[n] = target_nodes.len();
                target_nodes.push(n);
            } else {
                local_index[n] = nontarget_nodes.len();
                nontarget_nodes.push(n);
            }
        }

        let id_index = node_ids.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();
        let g = HeteroGraph {
            id_index,
            node_ids,
            node_types,
            node_type_names,
            edge_type_names,
            edges: out_edges,
            weighted,
            target_type: target,
            features,
            labels,
            splits,
            num_classes,
            target_nodes,
            nontarget_nodes,
            local_index,
        };
        g.validate()?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny() -> HeteroGraph<f64> {
        let mut b = GraphBuilder::new();
        b.add_node("0", "paper", Some(0), Some(Split::Train), None).unwrap();
        b.add_node("1", "paper", Some(1), Some(Split::Test), None).unwrap();
        b.add_node("2", "author", None, None, None).unwrap();
        b.add_edge("0", "2", "writes", None);
        b.add_edge("1", "0", "cites", None);
        b.build("paper").unwrap()
    }

    #[test]
    fn builder_canonicalizes_edges() {
        let g = tiny();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!((g.edge(0).src, g.edge(0).dst), (0, 1));
        assert_eq!(g.edge_type_names(), &["cites".to_string(), "writes".to_string()]);
        assert!(!g.is_weighted());
        assert_eq!(g.edge(1).weight, 1.0);
    }

    #[test]
    fn numeric_ids_sort_numerically() {
        let mut b = GraphBuilder::<f64>::new();
        for id in ["10", "9", "100"] {
            b.add_node(id, "t", Some(0), None, None).unwrap();
        }
        b.num_classes(2);
        let g = b.build("t").unwrap();
        assert_eq!(g.node_ids(), &["9", "10", "100"]);
    }

    #[test]
    fn rejects_unlabeled_train_node_and_single_class() {
        let mut b = GraphBuilder::<f64>::new();
        b.add_node("a", "t", None, Some(Split::Train), None).unwrap();
        b.add_node("b", "t", Some(1), None, None).unwrap();
        assert!(matches!(b.build("t"), Err(Error::Validation(_))));

        let mut b = GraphBuilder::<f64>::new();
        b.add_node("a", "t", Some(0), None, None).unwrap();
        assert!(matches!(b.build("t"), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_unknown_target_and_dangling_edge() {
        let mut b = GraphBuilder::<f64>::new();
        b.add_node("a", "t", Some(1), None, None).unwrap();
        assert!(matches!(b.build("nope"), Err(Error::Config(_))));

        let mut b = GraphBuilder::<f64>::new();
        b.add_node("a", "t", Some(1), None, None).unwrap();
        b.add_edge("a", "z", "r", None);
        assert!(matches!(b.build("t"), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_negative_weight_and_ragged_features() {
        let mut b = GraphBuilder::<f64>::new();
        b.add_node("a", "t", Some(1), None, None).unwrap();
        b.add_edge("a", "a", "r", Some(-1.0));
        assert!(b.build("t").is_err());

        let mut b = GraphBuilder::<f64>::new();
        b.add_node("a", "t", Some(1), None, Some(vec![1.0])).unwrap();
        b.add_node("b", "t", Some(0), None, Some(vec![1.0, 2.0])).unwrap();
        assert!(b.build("t").is_err());
    }

    #[test]
    fn retain_edges_preserves_schema() {
        let g = tiny();
        let h = g.retain_edges(|i| i == 1);
        assert_eq!(h.edge_count(), 1);
        assert_eq!(h.num_edge_types(), 2);
        assert_eq!(h.edge(0), g.edge(1));
    }
}

use crate::linalg::CsrMatrix;
use crate::scalar::Scalar;

use super::HeteroGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeClass {
    /// Both endpoints are target nodes (includes target self-loops).
    TargetTarget,
    /// One target endpoint and one non-target endpoint.
    Cross,
    /// Both endpoints are non-target nodes.
    NonTarget,
}

/// Edge ids split by endpoint types. Each list is ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgePartition {
    pub tt: Vec<usize>,
    pub tn: Vec<usize>,
    pub nn: Vec<usize>,
}

impl EdgePartition {
    pub fn total(&self) -> usize {
        self.tt.len() + self.tn.len() + self.nn.len()
    }
}

/// Weighted adjacency between non-target rows and target columns, restricted
/// to cross-type edges. Every stored entry is tagged with its edge id.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossTypeView<F> {
    a_nt: CsrMatrix<F>,
    a_tn: CsrMatrix<F>,
    e_tn: Vec<usize>,
}

impl<F: Scalar> CrossTypeView<F> {
    /// `N_n × N_t` adjacency.
    pub fn a_nt(&self) -> &CsrMatrix<F> {
        &self.a_nt
    }

    /// `N_t × N_n` adjacency, the exact transpose of [`Self::a_nt`].
    pub fn a_tn(&self) -> &CsrMatrix<F> {
        &self.a_tn
    }

    /// Cross-type edge ids, ascending.
    pub fn e_tn(&self) -> &[usize] {
        &self.e_tn
    }

    pub fn n_t(&self) -> usize {
        self.a_nt.cols()
    }

    pub fn n_n(&self) -> usize {
        self.a_nt.rows()
    }
}

impl<F: Scalar> HeteroGraph<F> {
    pub fn classify_edge(&self, edge_id: usize) -> EdgeClass {
        let e = &self.edges[edge_id];
        match (self.is_target(e.src), self.is_target(e.dst)) {
            (true, true) => EdgeClass::TargetTarget,
            (false, false) => EdgeClass::NonTarget,
            _ => EdgeClass::Cross,
        }
    }

    pub fn partition_edges(&self) -> EdgePartition {
        let mut p = EdgePartition::default();
        for id in 0..self.edges.len() {
            match self.classify_edge(id) {
                EdgeClass::TargetTarget => p.tt.push(id),
                EdgeClass::Cross => p.tn.push(id),
                EdgeClass::NonTarget => p.nn.push(id),
            }
        }
        p
    }

    /// For a cross-type edge, `(non-target node, target node)`.
    pub fn cross_endpoints(&self, edge_id: usize) -> (usize, usize) {
        let e = &self.edges[edge_id];
        if self.is_target(e.src) {
            (e.dst, e.src)
        } else {
            (e.src, e.dst)
        }
    }

    /// Cross-type view over every cross-type edge of the graph.
    pub fn cross_view(&self) -> CrossTypeView<F> {
        let tn = self.partition_edges().tn;
        self.cross_view_of(&tn)
    }

    /// Cross-type view over a chosen subset of cross-type edge ids.
    pub fn cross_view_of(&self, edge_ids: &[usize]) -> CrossTypeView<F> {
        let mut e_tn = edge_ids.to_vec();
        e_tn.sort_unstable();
        e_tn.dedup();
        let triplets = e_tn
            .iter()
            .map(|&id| {
                debug_assert_eq!(self.classify_edge(id), EdgeClass::Cross);
                let (n, t) = self.cross_endpoints(id);
                (self.local_index(n), self.local_index(t), self.edges[id].weight, id)
            })
            .collect();
        let a_nt = CsrMatrix::from_triplets(self.n_nontarget(), self.n_target(), triplets);
        let a_tn = a_nt.transpose();
        CrossTypeView { a_nt, a_tn, e_tn }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hetgraph::{GraphBuilder, Split};

    fn star(cross: usize) -> HeteroGraph<f64> {
        let mut b = GraphBuilder::new();
        b.add_node("t", "target", Some(0), Some(Split::Train), None).unwrap();
        b.add_node("u", "target", Some(1), None, None).unwrap();
        for i in 0..cross {
            b.add_node(format!("n{i}"), "other", None, None, None).unwrap();
            b.add_edge("t", format!("n{i}"), "link", None);
        }
        b.build("target").unwrap()
    }

    #[test]
    fn target_only_graph_has_no_cross_edges() {
        let mut b = GraphBuilder::<f64>::new();
        b.add_node("a", "t", Some(0), None, None).unwrap();
        b.add_node("b", "t", Some(1), None, None).unwrap();
        b.add_edge("a", "b", "r", None);
        b.add_edge("a", "a", "r", None);
        let g = b.build("t").unwrap();
        let p = g.partition_edges();
        assert_eq!(p.tt, vec![0, 1]);
        assert!(p.tn.is_empty() && p.nn.is_empty());
        let v = g.cross_view();
        assert_eq!(v.a_nt().nnz(), 0);
        assert_eq!(v.a_nt().to_dense().as_slice(), &[] as &[f64]);
    }

    #[test]
    fn one_target_two_nontargets() {
        let g = star(2);
        let p = g.partition_edges();
        assert_eq!(p.tn.len(), 2);
        assert!(p.tt.is_empty() && p.nn.is_empty());
        let v = g.cross_view();
        assert_eq!((v.n_n(), v.n_t()), (2, 2));
        assert_eq!(v.e_tn().len(), v.a_nt().nnz());
    }

    #[test]
    fn single_weighted_cross_edge() {
        let mut b = GraphBuilder::<f64>::new();
        b.add_node("t", "target", Some(1), None, None).unwrap();
        b.add_node("x", "other", None, None, None).unwrap();
        b.add_node("y", "target", Some(0), None, None).unwrap();
        b.add_edge("x", "t", "link", Some(2.5));
        let g = b.build("target").unwrap();
        let d = g.cross_view().a_nt().to_dense();
        let nonzero: Vec<f64> = d.as_slice().iter().copied().filter(|&x| x != 0.0).collect();
        assert_eq!(nonzero, vec![2.5]);
    }
}

//! Target-information matrix and the cross-type homophily ratio (CHR).
//!
//! Each node gets a class-distribution row: labeled target nodes carry their
//! one-hot label, other target nodes the softmax of model logits (uniform when
//! no model is available), and non-target nodes the L1-normalized sum of their
//! target neighbours' rows. CHR is the mean inner product of the two endpoint
//! rows over cross-type edges.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hetgraph::{CrossTypeView, HeteroGraph, Split};
use crate::linalg::DenseMatrix;
use crate::scalar::{pairwise_sum, softmax_row, Scalar};

/// `N × C` class-distribution matrix: target rows first, then non-target rows,
/// each block in canonical node order.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetInfoMatrix<F> {
    h: DenseMatrix<F>,
    n_t: usize,
    row_of_node: Vec<usize>,
    isolated: Vec<bool>,
}

impl<F: Scalar> TargetInfoMatrix<F> {
    pub fn h(&self) -> &DenseMatrix<F> {
        &self.h
    }

    pub fn class_count(&self) -> usize {
        self.h.cols()
    }

    pub fn n_target(&self) -> usize {
        self.n_t
    }

    pub fn n_nontarget(&self) -> usize {
        self.h.rows() - self.n_t
    }

    /// Row `L(v)` for target node with local index `i`.
    pub fn l_row(&self, i: usize) -> &[F] {
        self.h.row(i)
    }

    /// Row `P'(v)` for non-target node with local index `i`.
    pub fn p_row(&self, i: usize) -> &[F] {
        self.h.row(self.n_t + i)
    }

    /// Row for a graph node (canonical index).
    pub fn node_row(&self, node: usize) -> &[F] {
        self.h.row(self.row_of_node[node])
    }

    /// Flags for non-target nodes with no cross-type neighbour (all-zero rows).
    pub fn isolated(&self) -> &[bool] {
        &self.isolated
    }

    /// Builds `H` from scratch for the cross-type edges in `view`.
    pub fn compute(g: &HeteroGraph<F>, view: &CrossTypeView<F>, test_logits: Option<&DenseMatrix<F>>) -> Result<Self> {
        let l = init_target_info(g, test_logits)?;
        let p = propagate(view, &l)?;
        let p_prime = normalize_rows(&p)?;
        build_target_info(g, l, p_prime)
    }
}

/// Target nodes outside the training split, in canonical order. These are the
/// rows that receive soft labels.
pub fn non_train_targets<F: Scalar>(g: &HeteroGraph<F>) -> Vec<usize> {
    g.target_nodes()
        .iter()
        .copied()
        .filter(|&n| g.split(n) != Some(Split::Train))
        .collect()
}

/// Selects the logits rows of [`non_train_targets`] out of a full `N × C`
/// model output.
pub fn non_train_logits<F: Scalar>(g: &HeteroGraph<F>, logits: &DenseMatrix<F>) -> DenseMatrix<F> {
    let nodes = non_train_targets(g);
    let mut out = DenseMatrix::zeros(nodes.len(), logits.cols());
    for (r, &n) in nodes.iter().enumerate() {
        out.row_mut(r).copy_from_slice(logits.row(n));
    }
    out
}

/// Builds the `N_t × C` matrix `L`: one-hot rows for training nodes and
/// softmax rows for every other target node. `test_logits` has one row per
/// node of [`non_train_targets`]; when absent those rows are uniform `1/C`.
pub fn init_target_info<F: Scalar>(g: &HeteroGraph<F>, test_logits: Option<&DenseMatrix<F>>) -> Result<DenseMatrix<F>> {
    let c = g.num_classes();
    let others = non_train_targets(g);
    if let Some(z) = test_logits {
        if z.rows() != others.len() || z.cols() != c {
            return Err(Error::Dimension(format!(
                "logits are {}x{}, expected {}x{c}",
                z.rows(),
                z.cols(),
                others.len()
            )));
        }
        if !z.is_finite() {
            return Err(Error::Numeric("non-finite logit".into()));
        }
    }
    let mut l = DenseMatrix::zeros(g.n_target(), c);
    let uniform = F::one() / F::from_count(c);
    let mut next_soft = 0;
    for (i, &n) in g.target_nodes().iter().enumerate() {
        if g.split(n) == Some(Split::Train) {
            let y = g.label(n).expect("training nodes are labeled");
            l[(i, y)] = F::one();
            continue;
        }
        match test_logits {
            Some(z) => softmax_row(z.row(next_soft), l.row_mut(i)),
            None => l.row_mut(i).fill(uniform),
        }
        next_soft += 1;
    }
    Ok(l)
}

/// `P = (W ∘ A_nt) L`: weighted sum of target rows into each non-target row.
pub fn propagate<F: Scalar>(view: &CrossTypeView<F>, l: &DenseMatrix<F>) -> Result<DenseMatrix<F>> {
    if l.rows() != view.n_t() {
        return Err(Error::Dimension(format!(
            "L has {} rows but the view has {} target nodes",
            l.rows(),
            view.n_t()
        )));
    }
    Ok(view.a_nt().matmul_dense(l))
}

/// Row-wise L1 normalization of a nonnegative matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedRows<F> {
    pub p: DenseMatrix<F>,
    /// Rows that were all-zero and were left as such.
    pub isolated: Vec<bool>,
}

pub fn normalize_rows<F: Scalar>(p: &DenseMatrix<F>) -> Result<NormalizedRows<F>> {
    if let Some(x) = p.as_slice().iter().find(|x| !(**x >= F::zero()) || !x.is_finite()) {
        return Err(Error::Numeric(format!("cannot normalize entry {x}")));
    }
    let mut out = p.clone();
    let mut isolated = vec![false; p.rows()];
    for (i, flag) in isolated.iter_mut().enumerate() {
        let row = out.row_mut(i);
        let norm = row.iter().fold(F::zero(), |s, &x| s + x);
        if norm == F::zero() {
            *flag = true;
        } else {
            row.iter_mut().for_each(|x| *x = *x / norm);
        }
    }
    Ok(NormalizedRows { p: out, isolated })
}

/// Concatenates `L` and `P'` into `H`.
pub fn build_target_info<F: Scalar>(g: &HeteroGraph<F>, l: DenseMatrix<F>, p_prime: NormalizedRows<F>) -> Result<TargetInfoMatrix<F>> {
    let (n_t, n_n) = (g.n_target(), g.n_nontarget());
    if l.rows() != n_t || p_prime.p.rows() != n_n || (n_n > 0 && l.cols() != p_prime.p.cols()) {
        return Err(Error::Dimension(format!(
            "L is {}x{}, P' is {}x{}, graph has N_t={n_t} N_n={n_n}",
            l.rows(),
            l.cols(),
            p_prime.p.rows(),
            p_prime.p.cols()
        )));
    }
    let c = l.cols();
    let mut data = l.into_vec();
    data.extend_from_slice(p_prime.p.as_slice());
    let row_of_node = (0..g.node_count())
        .map(|n| if g.is_target(n) { g.local_index(n) } else { n_t + g.local_index(n) })
        .collect();
    Ok(TargetInfoMatrix {
        h: DenseMatrix::from_vec(n_t + n_n, c, data),
        n_t,
        row_of_node,
        isolated: p_prime.isolated,
    })
}

/// `sim(u, v) = Σ_k H(u)_k H(v)_k`.
pub fn edge_similarity<F: Scalar>(h: &TargetInfoMatrix<F>, u: usize, v: usize) -> F {
    dot(h.node_row(u), h.node_row(v))
}

#[inline]
pub(crate) fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |s, (&x, &y)| s + x * y)
}

/// Per-edge similarities and their mean over a set of cross-type edges.
#[derive(Debug, Clone, PartialEq)]
pub struct ChrReport<F> {
    pub edges: Vec<usize>,
    pub similarities: Vec<F>,
    pub chr: F,
}

impl<F: Scalar> ChrReport<F> {
    /// `edge_id,src,dst,similarity` rows followed by `CHR,<value>`.
    pub fn to_csv(&self, g: &HeteroGraph<F>) -> String {
        let mut out = String::from("edge_id,src,dst,similarity\n");
        for (&id, s) in self.edges.iter().zip(&self.similarities) {
            let e = g.edge(id);
            let _ = writeln!(out, "{id},{},{},{s}", g.node_id(e.src), g.node_id(e.dst));
        }
        let _ = writeln!(out, "CHR,{}", self.chr);
        out
    }
}

/// Similarities for the given edges (any type), in the given order.
pub fn edge_similarities<F: Scalar>(g: &HeteroGraph<F>, h: &TargetInfoMatrix<F>, edges: &[usize]) -> Vec<F> {
    edges
        .par_iter()
        .map(|&id| {
            let e = g.edge(id);
            edge_similarity(h, e.src, e.dst)
        })
        .collect()
}

/// CHR over an explicit edge subset. Fails on an empty subset rather than
/// reporting 0.
pub fn chr_over<F: Scalar>(g: &HeteroGraph<F>, h: &TargetInfoMatrix<F>, edges: &[usize]) -> Result<ChrReport<F>> {
    if edges.is_empty() {
        return Err(Error::UndefinedMetric("CHR needs at least one cross-type edge".into()));
    }
    let similarities = edge_similarities(g, h, edges);
    let chr = pairwise_sum(&similarities) / F::from_count(similarities.len());
    Ok(ChrReport {
        edges: edges.to_vec(),
        similarities,
        chr,
    })
}

/// CHR over all cross-type edges of `g`.
pub fn compute_chr<F: Scalar>(g: &HeteroGraph<F>, h: &TargetInfoMatrix<F>) -> Result<F> {
    Ok(chr_report(g, h)?.chr)
}

pub fn chr_report<F: Scalar>(g: &HeteroGraph<F>, h: &TargetInfoMatrix<F>) -> Result<ChrReport<F>> {
    chr_over(g, h, &g.partition_edges().tn)
}

/// Classic edge homophily: fraction of edges whose endpoints share a label.
/// Edges touching an unlabeled node are an error.
pub fn homophily_ratio<F: Scalar>(g: &HeteroGraph<F>) -> Result<F> {
    if g.edge_count() == 0 {
        return Err(Error::UndefinedMetric("homophily ratio of an edgeless graph".into()));
    }
    let mut same = 0usize;
    for e in g.edges() {
        match (g.label(e.src), g.label(e.dst)) {
            (Some(a), Some(b)) => same += usize::from(a == b),
            _ => return Err(Error::Validation("edge endpoint without a label".into())),
        }
    }
    Ok(F::from_count(same) / F::from_count(g.edge_count()))
}

use crate::error::{Error, Result};
use crate::hetgraph::HeteroGraph;
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::scalar::Scalar;

/// Number of log-spaced degree buckets used when a node type has no features.
pub const DEGREE_BUCKETS: usize = 16;

/// Everything the model reads from a graph: per-type feature blocks and one
/// symmetric-normalized adjacency per edge type.
#[derive(Debug, Clone)]
pub struct GraphInputs<F> {
    pub(crate) node_count: usize,
    /// Node ids per node type, canonical order.
    pub(crate) type_nodes: Vec<Vec<usize>>,
    /// Feature block per node type, rows aligned with `type_nodes`.
    pub(crate) features: Vec<DenseMatrix<F>>,
    /// `D_r^{-1/2} A_r D_r^{-1/2}` per edge type, `N × N`, symmetric.
    pub(crate) adjacency: Vec<CsrMatrix<F>>,
}

impl<F: Scalar> GraphInputs<F> {
    /// Fails with a configuration error when a node type has no features and
    /// `synthesize` is off.
    pub fn from_graph(g: &HeteroGraph<F>, synthesize: bool) -> Result<Self> {
        let n = g.node_count();
        let mut degree = vec![0usize; n];
        for e in g.edges() {
            degree[e.src] += 1;
            if e.dst != e.src {
                degree[e.dst] += 1;
            }
        }

        let mut type_nodes = vec![Vec::new(); g.num_node_types()];
        for v in 0..n {
            type_nodes[g.node_type(v)].push(v);
        }
        let mut features = Vec::with_capacity(type_nodes.len());
        for (t, nodes) in type_nodes.iter().enumerate() {
            let block = match g.feature_dim(t) {
                Some(dim) => {
                    let mut m = DenseMatrix::zeros(nodes.len(), dim);
                    for (r, &v) in nodes.iter().enumerate() {
                        m.row_mut(r).copy_from_slice(g.features(v).expect("typed feature width"));
                    }
                    m
                }
                None if synthesize => {
                    let mut m = DenseMatrix::zeros(nodes.len(), DEGREE_BUCKETS);
                    for (r, &v) in nodes.iter().enumerate() {
                        m[(r, degree_bucket(degree[v]))] = F::one();
                    }
                    m
                }
                None => {
                    return Err(Error::Config(format!(
                        "node type {} has no features and feature synthesis is disabled",
                        g.node_type_names()[t]
                    )))
                }
            };
            features.push(block);
        }

        let mut per_type: Vec<Vec<(usize, usize, F, usize)>> = vec![Vec::new(); g.num_edge_types()];
        for (id, e) in g.edges().iter().enumerate() {
            per_type[e.edge_type].push((e.src, e.dst, e.weight, id));
            if e.src != e.dst {
                per_type[e.edge_type].push((e.dst, e.src, e.weight, id));
            }
        }
        let adjacency = per_type
            .into_iter()
            .map(|trips| {
                let mut deg = vec![F::zero(); n];
                for &(r, _, w, _) in &trips {
                    deg[r] = deg[r] + w;
                }
                let scaled = trips
                    .into_iter()
                    .filter(|&(r, c, _, _)| deg[r] > F::zero() && deg[c] > F::zero())
                    .map(|(r, c, w, id)| (r, c, w / (deg[r] * deg[c]).sqrt(), id))
                    .collect();
                CsrMatrix::from_triplets(n, n, scaled)
            })
            .collect();

        Ok(Self {
            node_count: n,
            type_nodes,
            features,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn feature_dims(&self) -> Vec<usize> {
        self.features.iter().map(DenseMatrix::cols).collect()
    }

    pub fn num_relations(&self) -> usize {
        self.adjacency.len()
    }
}

/// `floor(log2(d + 1))`, capped at the last bucket.
pub fn degree_bucket(degree: usize) -> usize {
    let b = (usize::BITS - (degree + 1).leading_zeros() - 1) as usize;
    b.min(DEGREE_BUCKETS - 1)
}

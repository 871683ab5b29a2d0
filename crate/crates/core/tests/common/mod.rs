#![allow(dead_code)]

use cthge::hetgraph::{GraphBuilder, Split};
use cthge::linalg::DenseMatrix;
use cthge::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random typed graph with every target labeled and roughly half of them in
/// the training split, plus random logits for the rest.
pub fn random_graph(seed: u64) -> (Graph, DenseMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = rng.random_range(2..=4);
    let n_t = rng.random_range(c..=30);
    let n_n = rng.random_range(2..=30);
    let mut b = GraphBuilder::new();
    b.num_classes(c);
    for i in 0..n_t {
        let split = if i < c || rng.random_bool(0.5) { Split::Train } else { Split::Test };
        b.add_node(format!("t{i}"), "paper", Some(rng.random_range(0..c)), Some(split), None)
            .unwrap();
    }
    for j in 0..n_n {
        b.add_node(format!("a{j}"), "author", None, None, None).unwrap();
    }
    for _ in 0..rng.random_range(1..=100) {
        b.add_edge(format!("a{}", rng.random_range(0..n_n)), format!("t{}", rng.random_range(0..n_t)), "writes", None);
    }
    for _ in 0..rng.random_range(0..=20) {
        b.add_edge(format!("t{}", rng.random_range(0..n_t)), format!("t{}", rng.random_range(0..n_t)), "cites", None);
    }
    for _ in 0..rng.random_range(0..=10) {
        b.add_edge(format!("a{}", rng.random_range(0..n_n)), format!("a{}", rng.random_range(0..n_n)), "knows", None);
    }
    let g = b.build("paper").unwrap();
    let k = cthge::chr::non_train_targets(&g).len();
    let z = DenseMatrix::from_vec(k, c, (0..k * c).map(|_| rng.random_range(-3.0..3.0)).collect());
    (g, z)
}

pub fn info(g: &Graph, z: &DenseMatrix<f64>) -> cthge::TargetInfo {
    cthge::chr::TargetInfoMatrix::compute(g, &g.cross_view(), Some(z)).unwrap()
}

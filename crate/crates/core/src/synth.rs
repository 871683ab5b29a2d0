//! Synthetic heterogeneous graphs with a planted cross-type homophily level.
//!
//! Target nodes get balanced classes; each non-target node gets a hidden
//! latent class. A clean cross edge is class-consistent with probability
//! `rho` and a uniform random pairing otherwise, so the oracle CHR is
//! `rho + (1 - rho) / C`. Noise edges always join different classes.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chr::{build_target_info, compute_chr, NormalizedRows};
use crate::error::{Error, Result};
use crate::eval::{make_split, spearman, EvalReport, SplitRatios};
use crate::hetgraph::{save_graph, GraphBuilder, HeteroGraph};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

pub const TARGET_TYPE: &str = "target";
pub const NONTARGET_TYPE: &str = "attr";
pub const TRUTH_FILE: &str = "truth.tsv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_t: usize,
    pub n_n: usize,
    pub classes: usize,
    /// Oracle CHR among clean cross edges, in `[1/C, 1]`.
    pub target_chr: f64,
    pub tt_edges: usize,
    pub tn_edges: usize,
    pub nn_edges: usize,
    pub feature_dim: usize,
    /// Norm of each class mean; features add unit-variance noise.
    pub class_separation: f64,
    /// Fraction of cross edges replaced by class-inconsistent noise.
    pub noise_fraction: f64,
    pub split: SplitRatios,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_t: 500,
            n_n: 500,
            classes: 4,
            target_chr: 0.7,
            tt_edges: 500,
            tn_edges: 2000,
            nn_edges: 500,
            feature_dim: 16,
            class_separation: 1.0,
            noise_fraction: 0.0,
            split: SplitRatios::default(),
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Lowest and highest reachable clean-edge CHR.
    pub fn chr_range(&self) -> (f64, f64) {
        (1.0 / self.classes as f64, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.classes));
        }
        if self.n_t < self.classes {
            return bad(format!("{} target nodes cannot cover {} classes", self.n_t, self.classes));
        }
        if self.tn_edges == 0 || self.n_n == 0 {
            return bad("cross-type edges need tn_edges > 0 and n_n > 0".into());
        }
        if (self.tt_edges > 0 && self.n_t < 2) || (self.nn_edges > 0 && self.n_n < 2) {
            return bad("same-type edges need at least two nodes of that type".into());
        }
        if self.feature_dim == 0 || !(self.class_separation >= 0.0) || !self.class_separation.is_finite() {
            return bad("feature_dim must be positive and class_separation finite and non-negative".into());
        }
        if !(0.0..1.0).contains(&self.noise_fraction) {
            return bad(format!("noise_fraction {} outside [0, 1)", self.noise_fraction));
        }
        let (lo, hi) = self.chr_range();
        if !(self.target_chr >= lo - 1e-12 && self.target_chr <= hi) {
            return bad(format!(
                "target_chr {} unreachable with {} classes; achievable range is [{lo:.4}, {hi}]",
                self.target_chr, self.classes
            ));
        }
        self.split.validate()
    }

    /// Probability that a clean cross edge is drawn class-consistent.
    pub fn rho(&self) -> f64 {
        let base = 1.0 / self.classes as f64;
        ((self.target_chr - base) / (1.0 - base)).clamp(0.0, 1.0)
    }
}

/// A generated graph and its hidden ground truth.
#[derive(Debug, Clone)]
pub struct SynthGraph<F> {
    pub graph: HeteroGraph<F>,
    /// Latent class of each non-target node, by non-target local index.
    pub truth: Vec<usize>,
    pub rho: f64,
}

fn balanced_classes(n: usize, classes: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut ys: Vec<usize> = (0..n).map(|i| i % classes).collect();
    ys.shuffle(rng);
    ys
}

pub fn generate<F: Scalar>(cfg: &SynthConfig) -> Result<SynthGraph<F>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let c = cfg.classes;
    let y_t = balanced_classes(cfg.n_t, c, &mut rng);
    let y_n = balanced_classes(cfg.n_n, c, &mut rng);
    let mut pools = vec![Vec::new(); c];
    for (i, &y) in y_t.iter().enumerate() {
        pools[y].push(i);
    }

    let means: Vec<Vec<f64>> = (0..c)
        .map(|_| {
            let v: Vec<f64> = (0..cfg.feature_dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            v.into_iter().map(|x| x * cfg.class_separation / norm).collect()
        })
        .collect();
    let features = |y: usize, rng: &mut ChaCha8Rng| -> Vec<F> {
        means[y].iter().map(|&m| F::lit(m + rng.sample::<f64, _>(StandardNormal))).collect()
    };

    let mut b = GraphBuilder::<F>::new();
    b.num_classes(c);
    for (i, &y) in y_t.iter().enumerate() {
        let x = features(y, &mut rng);
        b.add_node(i.to_string(), TARGET_TYPE, Some(y), None, Some(x))?;
    }
    for (j, &y) in y_n.iter().enumerate() {
        let x = features(y, &mut rng);
        b.add_node((cfg.n_t + j).to_string(), NONTARGET_TYPE, None, None, Some(x))?;
    }

    let distinct_pair = |n: usize, rng: &mut ChaCha8Rng| loop {
        let (u, v) = (rng.random_range(0..n), rng.random_range(0..n));
        if u != v {
            return (u, v);
        }
    };
    for _ in 0..cfg.tt_edges {
        let (u, v) = distinct_pair(cfg.n_t, &mut rng);
        b.add_edge(u.to_string(), v.to_string(), "tt", None);
    }
    for _ in 0..cfg.nn_edges {
        let (u, v) = distinct_pair(cfg.n_n, &mut rng);
        b.add_edge((cfg.n_t + u).to_string(), (cfg.n_t + v).to_string(), "nn", None);
    }

    let rho = cfg.rho();
    let n_noise = (cfg.noise_fraction * cfg.tn_edges as f64).round() as usize;
    let n_clean = cfg.tn_edges - n_noise;
    let n_consistent = (rho * n_clean as f64).round() as usize;
    // 0 = consistent, 1 = random pairing, 2 = noise
    let mut kinds: Vec<u8> = std::iter::repeat_n(0, n_consistent)
        .chain(std::iter::repeat_n(1, n_clean - n_consistent))
        .chain(std::iter::repeat_n(2, n_noise))
        .collect();
    kinds.shuffle(&mut rng);
    for kind in kinds {
        let n = rng.random_range(0..cfg.n_n);
        let t = match kind {
            0 => *pools[y_n[n]].choose(&mut rng).expect("every class has a target"),
            1 => rng.random_range(0..cfg.n_t),
            _ => {
                let k = (y_n[n] + rng.random_range(1..c)) % c;
                *pools[k].choose(&mut rng).expect("every class has a target")
            }
        };
        b.add_edge((cfg.n_t + n).to_string(), t.to_string(), "tn", None);
    }

    let g = b.build(TARGET_TYPE)?;
    let split = make_split(&g, cfg.split, cfg.seed)?;
    let graph = g.with_splits(&split.splits)?;
    let mut truth = vec![0; graph.n_nontarget()];
    for &v in graph.nontarget_nodes() {
        let j: usize = graph.node_id(v).parse::<usize>().expect("numeric ids") - cfg.n_t;
        truth[graph.local_index(v)] = y_n[j];
    }
    Ok(SynthGraph { graph, truth, rho })
}

impl<F: Scalar> SynthGraph<F> {
    /// `node_id<TAB>class` for each non-target node.
    pub fn truth_tsv(&self) -> String {
        let mut out = String::from("node_id\tclass\n");
        for &v in self.graph.nontarget_nodes() {
            let _ = writeln!(out, "{}\t{}", self.graph.node_id(v), self.truth[self.graph.local_index(v)]);
        }
        out
    }

    /// Writes the node/edge TSV pair and `truth.tsv` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        save_graph(&self.graph, dir)?;
        let path = dir.join(TRUTH_FILE);
        std::fs::write(&path, self.truth_tsv()).map_err(|e| Error::io(&path, e))
    }

    pub fn oracle_chr(&self) -> Result<F> {
        oracle_chr(&self.graph, &self.truth)
    }
}

/// CHR with one-hot rows from the true labels of every node. `truth` holds
/// the class of each non-target node by local index.
pub fn oracle_chr<F: Scalar>(g: &HeteroGraph<F>, truth: &[usize]) -> Result<F> {
    let c = g.num_classes();
    if truth.len() != g.n_nontarget() {
        return Err(Error::Dimension(format!("{} truth rows for {} non-target nodes", truth.len(), g.n_nontarget())));
    }
    let mut l = DenseMatrix::zeros(g.n_target(), c);
    for (i, &v) in g.target_nodes().iter().enumerate() {
        let y = g
            .label(v)
            .ok_or_else(|| Error::Validation(format!("target node {} has no label", g.node_id(v))))?;
        l[(i, y)] = F::one();
    }
    let mut p = DenseMatrix::zeros(g.n_nontarget(), c);
    for (j, &y) in truth.iter().enumerate() {
        if y >= c {
            return Err(Error::Validation(format!("truth class {y} outside [0, {c})")));
        }
        p[(j, y)] = F::one();
    }
    let p_prime = NormalizedRows {
        p,
        isolated: vec![false; truth.len()],
    };
    compute_chr(g, &build_target_info(g, l, p_prime)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub target_chr: f64,
    pub seed: u64,
    pub measured_chr: f64,
    pub macro_f1: f64,
    pub micro_f1: f64,
}

/// Generates one graph per `(target_chr, seed)` pair and scores it with
/// `trainer`. Seeds are shared across grid points. Rows come back in grid
/// order, then seed order.
pub fn chr_sweep<F, T>(base: &SynthConfig, grid: &[f64], seeds: &[u64], trainer: T) -> Result<Vec<SweepRow>>
where
    F: Scalar,
    T: Fn(&HeteroGraph<F>, u64) -> Result<EvalReport> + Sync,
{
    if grid.is_empty() || seeds.is_empty() {
        return Err(Error::Config("sweep needs a non-empty grid and seed list".into()));
    }
    let jobs: Vec<(f64, u64)> = grid.iter().flat_map(|&c| seeds.iter().map(move |&s| (c, s))).collect();
    for &c in grid {
        SynthConfig { target_chr: c, ..base.clone() }.validate()?;
    }
    jobs.par_iter()
        .map(|&(target_chr, seed)| {
            let cfg = SynthConfig {
                target_chr,
                seed,
                ..base.clone()
            };
            let s = generate::<F>(&cfg)?;
            let measured_chr = s.oracle_chr()?.as_f64();
            let report = trainer(&s.graph, seed)?;
            Ok(SweepRow {
                target_chr,
                seed,
                measured_chr,
                macro_f1: report.macro_f1,
                micro_f1: report.micro_f1,
            })
        })
        .collect()
}

/// Spearman correlation of measured CHR against Macro-F1; `None` when
/// undefined (fewer than two rows or a constant column).
pub fn sweep_correlation(rows: &[SweepRow]) -> Option<f64> {
    let x: Vec<f64> = rows.iter().map(|r| r.measured_chr).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.macro_f1).collect();
    spearman(&x, &y)
}

/// `target_chr,seed,measured_chr,macro_f1,micro_f1` rows.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("target_chr,seed,measured_chr,macro_f1,micro_f1\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.target_chr, r.seed, r.measured_chr, r.macro_f1, r.micro_f1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hetgraph::{write_edges_tsv, write_nodes_tsv};

    fn cfg(target_chr: f64, seed: u64) -> SynthConfig {
        SynthConfig {
            n_t: 200,
            n_n: 200,
            classes: 2,
            target_chr,
            tn_edges: 1000,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn perfect_chr_is_exact() {
        let s = generate::<f64>(&cfg(1.0, 3)).unwrap();
        assert_eq!(s.oracle_chr().unwrap(), 1.0);
    }

    #[test]
    fn random_pairing_baseline() {
        let vals: Vec<f64> = (0..10).map(|s| generate::<f64>(&cfg(0.5, s)).unwrap().oracle_chr().unwrap()).collect();
        let m = vals.iter().sum::<f64>() / 10.0;
        assert!((m - 0.5).abs() < 0.02, "{m}");
    }

    #[test]
    fn planted_chr_concentrates() {
        let c = SynthConfig { tn_edges: 5000, ..Default::default() };
        let got = generate::<f64>(&c).unwrap().oracle_chr().unwrap();
        assert!((got - 0.7).abs() < 0.02, "{got}");
    }

    #[test]
    fn noise_edges_lower_chr_proportionally() {
        let c = SynthConfig { tn_edges: 5000, noise_fraction: 0.3, ..Default::default() };
        let got = generate::<f64>(&c).unwrap().oracle_chr().unwrap();
        assert!((got - 0.49).abs() < 0.02, "{got}");
    }

    #[test]
    fn unreachable_chr_is_rejected() {
        let c = SynthConfig { target_chr: 0.2, ..Default::default() };
        let err = generate::<f64>(&c).unwrap_err();
        assert!(err.to_string().contains("achievable range"), "{err}");
    }

    #[test]
    fn deterministic_and_balanced() {
        let c = SynthConfig { n_t: 400, ..Default::default() };
        let (a, b) = (generate::<f64>(&c).unwrap(), generate::<f64>(&c).unwrap());
        assert_eq!(write_nodes_tsv(&a.graph), write_nodes_tsv(&b.graph));
        assert_eq!(write_edges_tsv(&a.graph), write_edges_tsv(&b.graph));
        assert_eq!(a.truth_tsv(), b.truth_tsv());
        let mut counts = vec![0usize; 4];
        for &v in a.graph.target_nodes() {
            counts[a.graph.label(v).unwrap()] += 1;
        }
        let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
        assert!(*hi as f64 / *lo as f64 <= 1.1);
        let p = a.graph.partition_edges();
        assert_eq!((p.tt.len(), p.tn.len(), p.nn.len()), (500, 2000, 500));
    }

    #[test]
    fn sweep_shapes() {
        let base = cfg(0.5, 0);
        let trainer = |_: &HeteroGraph<f64>, _| crate::eval::f1_scores(&[0, 1], &[0, 1], 2);
        let rows = chr_sweep(&base, &[0.6], &[0], trainer).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(sweep_correlation(&rows), None);
        assert!(chr_sweep::<f64, _>(&base, &[], &[0], trainer).is_err());
    }
}

//! Node-classification evaluation: stratified splits, Macro/Micro-F1,
//! average relative improvement, seed aggregation, rank correlation.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hetgraph::{HeteroGraph, Split};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.6,
            val: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|&r| !(0.0..=1.0).contains(&r)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split ratios {}/{}/{} must be in [0,1] and sum to 1",
                self.train, self.val, self.test
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitAssignment {
    /// Per graph node; `None` for non-target and unlabeled nodes.
    pub splits: Vec<Option<Split>>,
    pub stratified: bool,
}

/// Stratified train/val/test assignment of labeled target nodes. Falls back to
/// an unstratified split (with a warning) when some class has fewer than
/// three members.
pub fn make_split<F: Scalar>(g: &HeteroGraph<F>, ratios: SplitRatios, seed: u64) -> Result<SplitAssignment> {
    ratios.validate()?;
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &v in g.target_nodes() {
        if let Some(y) = g.label(v) {
            by_class.entry(y).or_default().push(v);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut splits = vec![None; g.node_count()];
    let stratified = by_class.values().all(|m| m.len() >= 3);
    let groups: Vec<Vec<usize>> = if stratified {
        by_class.into_values().collect()
    } else {
        warn!("a class has fewer than 3 labeled nodes; using an unstratified split");
        vec![by_class.into_values().flatten().collect()]
    };
    for mut members in groups {
        members.sort_unstable();
        members.shuffle(&mut rng);
        let n = members.len();
        let n_train = (n as f64 * ratios.train).round() as usize;
        let n_val = ((n as f64 * ratios.val).round() as usize).min(n - n_train);
        for (k, &v) in members.iter().enumerate() {
            splits[v] = Some(if k < n_train {
                Split::Train
            } else if k < n_train + n_val {
                Split::Val
            } else {
                Split::Test
            });
        }
    }
    Ok(SplitAssignment { splits, stratified })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub per_class: Vec<ClassScore>,
    /// `confusion[truth][pred]`.
    pub confusion: Vec<Vec<usize>>,
}

impl EvalReport {
    pub fn accuracy(&self) -> f64 {
        let total: usize = self.confusion.iter().flatten().sum();
        let hit: usize = (0..self.confusion.len()).map(|k| self.confusion[k][k]).sum();
        hit as f64 / total as f64
    }
}

fn safe_div(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        a / b
    }
}

/// Macro- and Micro-F1 over `num_classes` classes. Classes with no support and
/// no predictions score 0 and still count toward the macro mean.
pub fn f1_scores(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<EvalReport> {
    if pred.is_empty() {
        return Err(Error::UndefinedMetric("no predictions to score".into()));
    }
    if pred.len() != truth.len() {
        return Err(Error::Dimension(format!("{} predictions for {} labels", pred.len(), truth.len())));
    }
    if let Some(&bad) = pred.iter().chain(truth).find(|&&c| c >= num_classes) {
        return Err(Error::Dimension(format!("class {bad} outside [0, {num_classes})")));
    }
    let mut confusion = vec![vec![0usize; num_classes]; num_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        confusion[t][p] += 1;
    }
    let mut per_class = Vec::with_capacity(num_classes);
    let (mut tp_all, mut fp_all, mut fn_all) = (0usize, 0usize, 0usize);
    for k in 0..num_classes {
        let tp = confusion[k][k];
        let support: usize = confusion[k].iter().sum();
        let predicted: usize = (0..num_classes).map(|t| confusion[t][k]).sum();
        let (fp, fn_) = (predicted - tp, support - tp);
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        let precision = safe_div(tp as f64, predicted as f64);
        let recall = safe_div(tp as f64, support as f64);
        per_class.push(ClassScore {
            precision,
            recall,
            f1: safe_div(2.0 * precision * recall, precision + recall),
            support,
        });
    }
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / num_classes as f64;
    let micro_f1 = safe_div(2.0 * tp_all as f64, (2 * tp_all + fp_all + fn_all) as f64);
    Ok(EvalReport {
        macro_f1,
        micro_f1,
        per_class,
        confusion,
    })
}

/// [`f1_scores`] keyed by node; both maps must cover the same nodes.
pub fn f1_from_maps(pred: &BTreeMap<usize, usize>, truth: &BTreeMap<usize, usize>, num_classes: usize) -> Result<EvalReport> {
    if !pred.keys().eq(truth.keys()) {
        return Err(Error::Dimension("prediction and truth cover different nodes".into()));
    }
    let p: Vec<usize> = pred.values().copied().collect();
    let t: Vec<usize> = truth.values().copied().collect();
    f1_scores(&p, &t, num_classes)
}

/// Scores per-node predictions on the labeled target nodes of one split.
pub fn evaluate_split<F: Scalar>(g: &HeteroGraph<F>, predictions: &[usize], split: Split) -> Result<EvalReport> {
    let (mut p, mut t) = (Vec::new(), Vec::new());
    for v in g.nodes_in_split(split) {
        if let Some(y) = g.label(v) {
            p.push(predictions[v]);
            t.push(y);
        }
    }
    f1_scores(&p, &t, g.num_classes())
}

/// Average relative improvement: `mean((after - before) / before)`.
pub fn ari(before: &[f64], after: &[f64]) -> Result<f64> {
    if before.len() != after.len() || before.is_empty() {
        return Err(Error::Dimension(format!(
            "ARI needs equal-length non-empty lists, got {} and {}",
            before.len(),
            after.len()
        )));
    }
    if let Some(b) = before.iter().find(|&&b| !(b > 0.0)) {
        return Err(Error::Domain(format!("baseline score {b} must be positive")));
    }
    let total: f64 = before.iter().zip(after).map(|(&b, &a)| (a - b) / b).sum();
    Ok(total / before.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator); 0 for one value.
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Some(Self { mean, std: var.sqrt(), n })
    }
}

fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. `None` when either
/// side is constant or fewer than two points are given.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub model: String,
    pub graph: String,
    pub seed: u64,
    pub chr: Option<f64>,
    pub macro_f1: f64,
    pub micro_f1: f64,
}

/// `model,graph,seed,chr,macro_f1,micro_f1` rows, then an aggregate block with
/// mean/std per `(model, graph)` and any extra `key,value` lines.
pub fn metrics_csv(rows: &[MetricsRow], extra: &[(String, String)]) -> String {
    let mut out = String::from("model,graph,seed,chr,macro_f1,micro_f1\n");
    for r in rows {
        let chr = r.chr.map_or(String::new(), |c| c.to_string());
        let _ = writeln!(out, "{},{},{},{},{},{}", r.model, r.graph, r.seed, chr, r.macro_f1, r.micro_f1);
    }
    out.push_str("\n# aggregate\nmodel,graph,runs,macro_f1_mean,macro_f1_std,micro_f1_mean,micro_f1_std\n");
    let mut groups: BTreeMap<(&str, &str), Vec<&MetricsRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((&r.model, &r.graph)).or_default().push(r);
    }
    for ((model, graph), rs) in groups {
        let ma = MeanStd::of(&rs.iter().map(|r| r.macro_f1).collect::<Vec<_>>()).expect("non-empty group");
        let mi = MeanStd::of(&rs.iter().map(|r| r.micro_f1).collect::<Vec<_>>()).expect("non-empty group");
        let _ = writeln!(out, "{model},{graph},{},{},{},{},{}", rs.len(), ma.mean, ma.std, mi.mean, mi.std);
    }
    for (k, v) in extra {
        let _ = writeln!(out, "{k},{v}");
    }
    out
}

//! Cross-type homophily guided graph editing: threshold pruning of cross-type
//! edges followed by confidence-aware recovery/removal over several rounds.
//!
//! Every set in an [`EditPlan`] holds edge ids of the *input* graph.

use std::fmt::Write as _;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chr::{chr_over, dot, edge_similarities, non_train_logits, propagate, TargetInfoMatrix};
use crate::error::{Error, Result};
use crate::eval::{evaluate_split, EvalReport};
use crate::hetgraph::{EdgeClass, HeteroGraph, Split};
use crate::hgnn::{fine_tune, predict_classes, train_pre, GcnModel, GraphInputs, TrainConfig};
use crate::linalg::DenseMatrix;
use crate::scalar::{argmax, Scalar};

/// Pruning threshold: a fixed value or a validation search over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TauRepr", into = "TauRepr")]
pub enum Tau {
    Fixed(f64),
    Auto,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TauRepr {
    Value(f64),
    Name(String),
}

impl TryFrom<TauRepr> for Tau {
    type Error = String;

    fn try_from(r: TauRepr) -> std::result::Result<Self, String> {
        match r {
            TauRepr::Value(t) => Ok(Tau::Fixed(t)),
            TauRepr::Name(s) => s.parse(),
        }
    }
}

impl From<Tau> for TauRepr {
    fn from(t: Tau) -> Self {
        match t {
            Tau::Fixed(v) => TauRepr::Value(v),
            Tau::Auto => TauRepr::Name("auto".into()),
        }
    }
}

impl std::str::FromStr for Tau {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Tau::Auto);
        }
        s.parse::<f64>()
            .map(Tau::Fixed)
            .map_err(|_| format!("tau must be a number in [0,1] or `auto`, got `{s}`"))
    }
}

impl std::fmt::Display for Tau {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tau::Fixed(v) => write!(f, "{v}"),
            Tau::Auto => f.write_str("auto"),
        }
    }
}

/// `0.00, 0.05, ..., 1.00`.
pub fn default_tau_grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PruneConfig {
    pub tau: Tau,
    pub tau_grid: Vec<f64>,
    /// Training epochs for each candidate during the threshold search.
    pub search_epochs: usize,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            tau: Tau::Auto,
            tau_grid: default_tau_grid(),
            search_epochs: 100,
        }
    }
}

fn check_tau(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Config(format!("tau {t} outside [0, 1]")))
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        if let Tau::Fixed(t) = self.tau {
            check_tau(t)?;
        }
        if self.tau_grid.is_empty() {
            return Err(Error::Config("tau grid is empty".into()));
        }
        self.tau_grid.iter().try_for_each(|&t| check_tau(t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub offset: f64,
    pub iterations: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            alpha: 0.10,
            gamma: 0.1,
            offset: 0.06,
            iterations: 3,
        }
    }
}

/// Largest usable refinement ratio (the schedule is clamped below 0.5).
pub const MAX_RATIO: f64 = 0.5 - 1e-9;

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::Config(format!("alpha {} outside (0, 0.5)", self.alpha)));
        }
        if !(self.gamma >= 0.0 && self.offset >= 0.0) || !self.gamma.is_finite() || !self.offset.is_finite() {
            return Err(Error::Config("gamma and offset must be finite and non-negative".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("at least one refinement round is required".into()));
        }
        Ok(())
    }

    /// Effective ratio for 0-based round `r`: `offset + r * gamma * alpha`,
    /// clamped to `[0, 0.5)`.
    pub fn ratio(&self, round: usize) -> f64 {
        (self.offset + round as f64 * self.gamma * self.alpha).clamp(0.0, MAX_RATIO)
    }
}

/// Outcome of threshold pruning.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase1<F> {
    pub tau: f64,
    /// All cross-type edges, ascending.
    pub e_tn: Vec<usize>,
    /// Similarity per entry of `e_tn`.
    pub similarities: Vec<F>,
    pub e_prune: Vec<usize>,
    pub e_cand: Vec<usize>,
    pub chr_before: F,
    pub chr_after: F,
}

/// Keeps the cross-type edges whose similarity under `h` is at least `tau`.
pub fn prune_phase1<F: Scalar>(g: &HeteroGraph<F>, h: &TargetInfoMatrix<F>, tau: f64) -> Result<Phase1<F>> {
    check_tau(tau)?;
    let e_tn = g.partition_edges().tn;
    if e_tn.is_empty() {
        return Err(Error::UndefinedMetric("graph has no cross-type edges".into()));
    }
    let similarities = edge_similarities(g, h, &e_tn);
    prune_scored(e_tn, similarities, tau)
}

fn prune_scored<F: Scalar>(e_tn: Vec<usize>, similarities: Vec<F>, tau: f64) -> Result<Phase1<F>> {
    let t = F::lit(tau);
    let (mut e_prune, mut e_cand) = (Vec::new(), Vec::new());
    let (mut kept, mut all) = (Vec::new(), Vec::with_capacity(e_tn.len()));
    for (&id, &s) in e_tn.iter().zip(&similarities) {
        all.push(s);
        if s >= t {
            e_prune.push(id);
            kept.push(s);
        } else {
            e_cand.push(id);
        }
    }
    if e_prune.is_empty() {
        return Err(Error::EmptyPrune { tau });
    }
    let mean = |xs: &[F]| crate::scalar::mean(xs).expect("non-empty");
    let (chr_before, chr_after) = (mean(&all), mean(&kept));
    if chr_after < chr_before {
        warn!("pruning at tau={tau} lowered CHR from {chr_before} to {chr_after}");
    }
    Ok(Phase1 {
        tau,
        e_tn,
        similarities,
        e_prune,
        e_cand,
        chr_before,
        chr_after,
    })
}

/// Validation score of every grid point; `None` where pruning emptied the
/// cross-type edge set.
#[derive(Debug, Clone, PartialEq)]
pub struct TauSearch {
    pub tau: f64,
    pub scores: Vec<(f64, Option<f64>)>,
}

/// Picks the grid threshold with the best `validate` score (ties go to the
/// smaller threshold). Thresholds that prune every cross edge are skipped.
pub fn select_tau<F: Scalar>(
    g: &HeteroGraph<F>,
    h: &TargetInfoMatrix<F>,
    grid: &[f64],
    mut validate: impl FnMut(&Phase1<F>) -> Result<f64>,
) -> Result<TauSearch> {
    if grid.is_empty() {
        return Err(Error::Config("tau grid is empty".into()));
    }
    let mut grid = grid.to_vec();
    grid.iter().try_for_each(|&t| check_tau(t))?;
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let e_tn = g.partition_edges().tn;
    if e_tn.is_empty() {
        return Err(Error::UndefinedMetric("graph has no cross-type edges".into()));
    }
    let sims = edge_similarities(g, h, &e_tn);
    let mut best: Option<(f64, f64)> = None;
    let mut scores = Vec::with_capacity(grid.len());
    for tau in grid {
        let phase1 = match prune_scored(e_tn.clone(), sims.clone(), tau) {
            Ok(p) => p,
            Err(Error::EmptyPrune { .. }) => {
                scores.push((tau, None));
                continue;
            }
            Err(e) => return Err(e),
        };
        let score = validate(&phase1)?;
        info!("tau={tau}: validation score {score}");
        scores.push((tau, Some(score)));
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((tau, score));
        }
    }
    match best {
        Some((tau, _)) => Ok(TauSearch { tau, scores }),
        None => Err(Error::Search("every tau in the grid prunes all cross-type edges; lower the grid".into())),
    }
}

/// Label propagation from training targets onto non-target nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoLabelState<F> {
    /// `N_n × C` label counts (edge-weighted).
    pub p0: DenseMatrix<F>,
    /// Top minus runner-up of each `p0` row.
    pub margins: Vec<F>,
    /// Distinct non-training target neighbours of each non-target node.
    pub unlabeled_neighbors: Vec<usize>,
    /// Confident non-target nodes (graph indices), ascending.
    pub confident: Vec<usize>,
    /// `(node, class)` for each confident node.
    pub pseudo_labels: Vec<(usize, usize)>,
}

/// Top-minus-second margin of a row with at least two entries.
pub fn top_margin<F: Scalar>(row: &[F]) -> F {
    let (mut first, mut second) = (F::neg_infinity(), F::neg_infinity());
    for &x in row {
        if x > first {
            second = first;
            first = x;
        } else if x > second {
            second = x;
        }
    }
    first - second
}

/// Propagates one-hot training labels across the cross edges of `view` and
/// marks a non-target node confident when its margin exceeds its number of
/// unlabeled target neighbours.
pub fn propagate_pseudo<F: Scalar>(g: &HeteroGraph<F>, view: &crate::hetgraph::CrossTypeView<F>) -> Result<PseudoLabelState<F>> {
    let mut l0 = DenseMatrix::zeros(g.n_target(), g.num_classes());
    for (i, &v) in g.target_nodes().iter().enumerate() {
        if g.split(v) == Some(Split::Train) {
            l0[(i, g.label(v).expect("training nodes are labeled"))] = F::one();
        }
    }
    let p0 = propagate(view, &l0)?;
    let targets = g.target_nodes();
    let mut margins = Vec::with_capacity(view.n_n());
    let mut unlabeled_neighbors = Vec::with_capacity(view.n_n());
    let (mut confident, mut pseudo_labels) = (Vec::new(), Vec::new());
    for (i, &node) in g.nontarget_nodes().iter().enumerate() {
        let mut cols: Vec<usize> = view
            .a_nt()
            .row(i)
            .map(|(j, _, _)| j)
            .filter(|&j| g.split(targets[j]) != Some(Split::Train))
            .collect();
        cols.sort_unstable();
        cols.dedup();
        let m = top_margin(p0.row(i));
        if m > F::from_count(cols.len()) {
            confident.push(node);
            pseudo_labels.push((node, argmax(p0.row(i))));
        }
        margins.push(m);
        unlabeled_neighbors.push(cols.len());
    }
    Ok(PseudoLabelState {
        p0,
        margins,
        unlabeled_neighbors,
        confident,
        pseudo_labels,
    })
}

/// `N_t × C` label rows for soft similarity: one-hot for training targets,
/// model probabilities (rows of the full `N × C` `probs`) otherwise.
pub fn label_rows<F: Scalar>(g: &HeteroGraph<F>, probs: &DenseMatrix<F>) -> DenseMatrix<F> {
    let mut l = DenseMatrix::zeros(g.n_target(), g.num_classes());
    for (i, &v) in g.target_nodes().iter().enumerate() {
        if g.split(v) == Some(Split::Train) {
            l[(i, g.label(v).expect("training nodes are labeled"))] = F::one();
        } else {
            l.row_mut(i).copy_from_slice(probs.row(v));
        }
    }
    l
}

/// Inner product of a non-target node's class probabilities with a target
/// node's label row.
pub fn soft_similarity<F: Scalar>(probs_row: &[F], label_row: &[F]) -> F {
    dot(probs_row, label_row)
}

/// [`soft_similarity`] for each cross-type edge id.
pub fn soft_scores<F: Scalar>(g: &HeteroGraph<F>, probs: &DenseMatrix<F>, labels: &DenseMatrix<F>, edges: &[usize]) -> Vec<F> {
    edges
        .par_iter()
        .map(|&id| {
            let (n, t) = g.cross_endpoints(id);
            soft_similarity(probs.row(n), labels.row(g.local_index(t)))
        })
        .collect()
}

/// Fraction of scores strictly greater than each score. Equal scores share a
/// percentile.
pub fn percentiles<F: Scalar>(scores: &[F]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("scores are finite"));
    let n = scores.len() as f64;
    let mut out = vec![0.0; scores.len()];
    let mut first = 0;
    for (k, &i) in order.iter().enumerate() {
        if scores[i] != scores[order[first]] {
            first = k;
        }
        out[i] = first as f64 / n;
    }
    out
}

/// One application of the recovery/removal rule.
#[derive(Debug, Clone, PartialEq)]
pub struct RefineStep {
    pub ratio: f64,
    pub e_prune: Vec<usize>,
    pub e_cand: Vec<usize>,
    pub e_rec: Vec<usize>,
    pub e_rem: Vec<usize>,
    pub e_final: Vec<usize>,
    /// Percentile per entry of the scored edge list.
    pub percentiles: Vec<f64>,
    /// `(1 - ratio)|e_prune| + ratio|e_cand|`.
    pub budget: f64,
}

/// Ranks all cross-type edges `e_tn` (ascending ids, with `scores` aligned)
/// and applies recovery (`Π ≤ ratio` among pruned-away edges) and removal
/// (`Π > 1 - ratio` among kept edges). A zero ratio is the identity.
pub fn rank_and_refine<F: Scalar>(e_tn: &[usize], scores: &[F], e_prune: &[usize], ratio: f64) -> Result<RefineStep> {
    if e_tn.len() != scores.len() {
        return Err(Error::Dimension(format!("{} scores for {} edges", scores.len(), e_tn.len())));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Numeric("non-finite edge score".into()));
    }
    if !(0.0..0.5).contains(&ratio) {
        return Err(Error::Config(format!("refinement ratio {ratio} outside [0, 0.5)")));
    }
    let mut kept = vec![false; e_tn.len()];
    for id in e_prune {
        let k = e_tn
            .binary_search(id)
            .map_err(|_| Error::Validation(format!("edge {id} is not a scored cross-type edge")))?;
        kept[k] = true;
    }
    let percentiles = percentiles(scores);
    let (mut p, mut c, mut rec, mut rem, mut fin) = (vec![], vec![], vec![], vec![], vec![]);
    for (k, &id) in e_tn.iter().enumerate() {
        let pi = percentiles[k];
        if kept[k] {
            p.push(id);
            if ratio > 0.0 && pi > 1.0 - ratio {
                rem.push(id);
            } else {
                fin.push(id);
            }
        } else {
            c.push(id);
            if ratio > 0.0 && pi <= ratio {
                rec.push(id);
                fin.push(id);
            }
        }
    }
    if rec.is_empty() && !c.is_empty() {
        info!("ratio {ratio} recovers no edges");
    }
    let budget = (1.0 - ratio) * p.len() as f64 + ratio * c.len() as f64;
    Ok(RefineStep {
        ratio,
        e_prune: p,
        e_cand: c,
        e_rec: rec,
        e_rem: rem,
        e_final: fin,
        percentiles,
        budget,
    })
}

/// One refinement round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord<F> {
    pub round: usize,
    pub step: RefineStep,
    /// Soft similarity per cross-type edge (aligned with `Phase1::e_tn`).
    pub scores: Vec<F>,
    pub confident: usize,
    pub fine_tune_loss: Option<F>,
    /// CHR of the round's final set under the initial target-info matrix.
    pub chr: F,
}

/// Full audit trail of an edit.
#[derive(Debug, Clone, PartialEq)]
pub struct EditPlan<F> {
    pub phase1: Phase1<F>,
    pub rounds: Vec<RoundRecord<F>>,
    pub tau_search: Option<TauSearch>,
}

impl<F: Scalar> EditPlan<F> {
    /// Cross-type edges kept by the edit.
    pub fn e_final(&self) -> &[usize] {
        self.rounds.last().map_or(&self.phase1.e_prune, |r| &r.step.e_final)
    }

    /// `(stage, CHR, edge count)` for phase one and each completed round,
    /// starting with the unedited edge set.
    pub fn stages(&self) -> Vec<(String, F, usize)> {
        let p = &self.phase1;
        let mut out = vec![
            ("original".to_string(), p.chr_before, p.e_tn.len()),
            ("phase1".to_string(), p.chr_after, p.e_prune.len()),
        ];
        for r in &self.rounds {
            out.push((format!("round{}", r.round + 1), r.chr, r.step.e_final.len()));
        }
        out
    }

    /// `edge_id,stage,similarity,percentile,action` for every cross-type
    /// edge at every stage. Ids refer to the input graph's edge order.
    pub fn to_csv(&self) -> String {
        let p = &self.phase1;
        let mut out = String::from("edge_id,stage,similarity,percentile,action\n");
        let mut kept = vec![false; p.e_tn.len()];
        for (k, (&id, s)) in p.e_tn.iter().zip(&p.similarities).enumerate() {
            kept[k] = p.e_prune.binary_search(&id).is_ok();
            let action = if kept[k] { "keep" } else { "prune" };
            let _ = writeln!(out, "{id},phase1,{s},,{action}");
        }
        for r in &self.rounds {
            let stage = format!("round{}", r.round + 1);
            for (k, &id) in p.e_tn.iter().enumerate() {
                let action = if r.step.e_rem.binary_search(&id).is_ok() {
                    "remove"
                } else if r.step.e_rec.binary_search(&id).is_ok() {
                    "recover"
                } else if r.step.e_prune.binary_search(&id).is_ok() {
                    "keep"
                } else {
                    "prune"
                };
                let _ = writeln!(out, "{id},{stage},{},{},{action}", r.scores[k], r.step.percentiles[k]);
            }
        }
        out
    }
}

/// Copy of `g` whose cross-type edges are exactly `cross` (sorted ids);
/// same-type edges are untouched.
pub fn with_cross_edges<F: Scalar>(g: &HeteroGraph<F>, cross: &[usize]) -> HeteroGraph<F> {
    g.retain_edges(|id| g.classify_edge(id) != EdgeClass::Cross || cross.binary_search(&id).is_ok())
}

/// Runs `rounds` rounds of pseudo-labeling, fine-tuning, soft scoring and
/// refinement starting from the phase-one edge set. `ratio(r)` gives the
/// refinement ratio of 0-based round `r`. A diverging fine-tune stops the
/// loop and keeps the rounds completed so far.
pub fn iterative_refine<F: Scalar>(
    g: &HeteroGraph<F>,
    h0: &TargetInfoMatrix<F>,
    phase1: &Phase1<F>,
    model: &mut GcnModel<F>,
    train_cfg: &TrainConfig,
    rounds: usize,
    ratio: impl Fn(usize) -> f64,
) -> Result<Vec<RoundRecord<F>>> {
    let mut out: Vec<RoundRecord<F>> = Vec::with_capacity(rounds);
    for r in 0..rounds {
        let current = out.last().map_or(&phase1.e_prune, |rec| &rec.step.e_final).clone();
        let pseudo = propagate_pseudo(g, &g.cross_view_of(&current))?;
        let g_cur = with_cross_edges(g, &current);
        let inputs = GraphInputs::from_graph(&g_cur, train_cfg.synthesize_features)?;
        let backup = model.clone();
        let fine_tune_loss = match fine_tune(model, &inputs, &pseudo.pseudo_labels, train_cfg) {
            Ok(o) => o.and_then(|o| o.final_loss()),
            Err(e @ Error::Divergence { .. }) => {
                warn!("round {}: {e}; keeping the last good plan", r + 1);
                *model = backup;
                break;
            }
            Err(e) => return Err(e),
        };
        let probs = model.predict_proba(&inputs)?;
        if !probs.is_finite() {
            warn!("round {}: non-finite predictions; keeping the last good plan", r + 1);
            *model = backup;
            break;
        }
        let labels = label_rows(g, &probs);
        let scores = soft_scores(g, &probs, &labels, &phase1.e_tn);
        let step = rank_and_refine(&phase1.e_tn, &scores, &current, ratio(r))?;
        let chr = chr_over(g, h0, &step.e_final)?.chr;
        info!(
            "round {}: ratio {:.4}, {} confident, +{} -{} edges, CHR {chr}",
            r + 1,
            step.ratio,
            pseudo.confident.len(),
            step.e_rec.len(),
            step.e_rem.len()
        );
        out.push(RoundRecord {
            round: r,
            step,
            scores,
            confident: pseudo.confident.len(),
            fine_tune_loss,
            chr,
        });
    }
    Ok(out)
}

/// Result of [`run_cthge`].
#[derive(Debug, Clone)]
pub struct CthgeOutput<F> {
    pub graph: HeteroGraph<F>,
    pub plan: EditPlan<F>,
    /// CHR of the edited graph with the target-info matrix rebuilt on the
    /// kept cross edges (same target rows as the initial measurement).
    pub chr_edited: F,
}

impl<F: Scalar> CthgeOutput<F> {
    /// `stage,chr,e_tn` rows: every plan stage plus the re-measured edit.
    pub fn report_csv(&self) -> String {
        let mut out = String::from("stage,chr,e_tn\n");
        for (stage, chr, n) in self.plan.stages() {
            let _ = writeln!(out, "{stage},{chr},{n}");
        }
        let _ = writeln!(out, "edited,{},{}", self.chr_edited, self.plan.e_final().len());
        out
    }
}

fn trained_model<F: Scalar>(g: &HeteroGraph<F>, cfg: &TrainConfig) -> Result<(GcnModel<F>, GraphInputs<F>)> {
    let inputs = GraphInputs::from_graph(g, cfg.synthesize_features)?;
    let mut model = GcnModel::new(&inputs, g.num_classes(), cfg)?;
    train_pre(&mut model, g, &inputs, cfg)?;
    Ok((model, inputs))
}

/// Trains a fresh model on `g` and scores it on `split`.
pub fn train_and_evaluate<F: Scalar>(g: &HeteroGraph<F>, cfg: &TrainConfig, split: Split) -> Result<EvalReport> {
    let (model, inputs) = trained_model(g, cfg)?;
    let pred = predict_classes(&model.forward(&inputs)?);
    evaluate_split(g, &pred, split)
}

/// Pretrain, measure, prune, refine, and assemble the edited graph.
pub fn run_cthge<F: Scalar>(
    g: &HeteroGraph<F>,
    train_cfg: &TrainConfig,
    prune_cfg: &PruneConfig,
    refine_cfg: &RefineConfig,
) -> Result<CthgeOutput<F>> {
    train_cfg.validate()?;
    prune_cfg.validate()?;
    refine_cfg.validate()?;
    let (mut model, inputs) = trained_model(g, train_cfg)?;
    let z0 = non_train_logits(g, &model.forward(&inputs)?);
    let h0 = TargetInfoMatrix::compute(g, &g.cross_view(), Some(&z0))?;

    let (tau, tau_search) = match prune_cfg.tau {
        Tau::Fixed(t) => (t, None),
        Tau::Auto => {
            if g.nodes_in_split(Split::Val).is_empty() {
                return Err(Error::Config("tau search needs a non-empty validation split".into()));
            }
            let search_cfg = TrainConfig {
                epochs: prune_cfg.search_epochs,
                ..train_cfg.clone()
            };
            let search = select_tau(g, &h0, &prune_cfg.tau_grid, |p1| {
                let pruned = with_cross_edges(g, &p1.e_prune);
                Ok(train_and_evaluate(&pruned, &search_cfg, Split::Val)?.macro_f1)
            })?;
            info!("selected tau={}", search.tau);
            (search.tau, Some(search))
        }
    };
    let phase1 = prune_phase1(g, &h0, tau)?;
    info!(
        "phase 1 at tau={tau}: kept {}/{} cross edges, CHR {} -> {}",
        phase1.e_prune.len(),
        phase1.e_tn.len(),
        phase1.chr_before,
        phase1.chr_after
    );
    let rounds = iterative_refine(g, &h0, &phase1, &mut model, train_cfg, refine_cfg.iterations, |r| {
        refine_cfg.ratio(r)
    })?;
    let plan = EditPlan {
        phase1,
        rounds,
        tau_search,
    };
    let graph = with_cross_edges(g, plan.e_final());
    let h_edit = TargetInfoMatrix::compute(g, &g.cross_view_of(plan.e_final()), Some(&z0))?;
    let chr_edited = chr_over(g, &h_edit, plan.e_final())?.chr;
    Ok(CthgeOutput {
        graph,
        plan,
        chr_edited,
    })
}

mod common;

use cthge::chr::{compute_chr, TargetInfoMatrix};
use cthge::cthge::{
    default_tau_grid, iterative_refine, label_rows, prune_phase1, propagate_pseudo, rank_and_refine, soft_scores,
};
use cthge::hetgraph::{GraphBuilder, Split};
use cthge::hgnn::{train_pre, GcnModel, GraphInputs, TrainConfig};
use cthge::linalg::DenseMatrix;
use cthge::synth::{generate, SynthConfig};
use cthge::Graph;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synth(n: usize, tn: usize, seed: u64) -> Graph {
    generate(&SynthConfig {
        n_t: n,
        n_n: n,
        tn_edges: tn,
        tt_edges: n,
        nn_edges: n,
        noise_fraction: 0.3,
        seed,
        ..Default::default()
    })
    .unwrap()
    .graph
}

fn random_logits(g: &Graph, seed: u64) -> DenseMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = cthge::chr::non_train_targets(g).len();
    let c = g.num_classes();
    DenseMatrix::from_vec(k, c, (0..k * c).map(|_| rng.random_range(-3.0..3.0)).collect())
}

#[test]
fn phase_one_matches_brute_force_filter() {
    let g = synth(120, 500, 1);
    let h = TargetInfoMatrix::compute(&g, &g.cross_view(), Some(&random_logits(&g, 1))).unwrap();
    for tau in default_tau_grid() {
        let Ok(p) = prune_phase1(&g, &h, tau) else {
            continue;
        };
        let (mut keep, mut drop) = (Vec::new(), Vec::new());
        for (id, e) in g.edges().iter().enumerate() {
            if g.is_target(e.src) == g.is_target(e.dst) {
                continue;
            }
            let (a, b) = (h.node_row(e.src), h.node_row(e.dst));
            let s: f64 = (0..a.len()).map(|k| a[k] * b[k]).sum();
            if s >= tau { keep.push(id) } else { drop.push(id) }
        }
        assert_eq!(p.e_prune, keep, "tau {tau}");
        assert_eq!(p.e_cand, drop, "tau {tau}");
    }
}

#[test]
fn confident_set_matches_brute_force() {
    let g = synth(25, 150, 2);
    assert!(g.node_count() <= 50);
    let state = propagate_pseudo(&g, &g.cross_view()).unwrap();
    let c = g.num_classes();
    let mut expect = Vec::new();
    for &n in g.nontarget_nodes() {
        let mut counts = vec![0.0; c];
        let mut unlabeled = Vec::new();
        for e in g.edges() {
            let other = if e.src == n { e.dst } else if e.dst == n { e.src } else { continue };
            if !g.is_target(other) {
                continue;
            }
            if g.split(other) == Some(Split::Train) {
                counts[g.label(other).unwrap()] += e.weight;
            } else if !unlabeled.contains(&other) {
                unlabeled.push(other);
            }
        }
        let mut sorted = counts.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        if sorted[0] - sorted[1] > unlabeled.len() as f64 {
            let best = (0..c).find(|&k| counts[k] == sorted[0]).unwrap();
            expect.push((n, best));
        }
    }
    assert_eq!(state.pseudo_labels, expect);
}

#[test]
fn soft_scores_match_scalar_loop() {
    let g = synth(60, 200, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = g.num_classes();
    let mut probs = DenseMatrix::zeros(g.node_count(), c);
    for v in 0..g.node_count() {
        let raw: Vec<f64> = (0..c).map(|_| rng.random_range(0.01..1.0)).collect();
        let s: f64 = raw.iter().sum();
        probs.row_mut(v).iter_mut().zip(&raw).for_each(|(p, r)| *p = r / s);
    }
    let edges = g.partition_edges().tn;
    assert_eq!(edges.len(), 200);
    let scores = soft_scores(&g, &probs, &label_rows(&g, &probs), &edges);
    for (&id, s) in edges.iter().zip(&scores) {
        let (n, t) = g.cross_endpoints(id);
        let label: Vec<f64> = if g.split(t) == Some(Split::Train) {
            (0..c).map(|k| if Some(k) == g.label(t) { 1.0 } else { 0.0 }).collect()
        } else {
            probs.row(t).to_vec()
        };
        let oracle: f64 = (0..c).map(|k| probs.row(n)[k] * label[k]).sum();
        assert!((s - oracle).abs() <= 1e-12);
        assert!((0.0..=1.0).contains(s));
    }
}

#[test]
fn refine_matches_sort_and_slice() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 1000;
    let mut scores: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
    scores.shuffle(&mut rng);
    let e_tn: Vec<usize> = (0..n).collect();
    let e_prune: Vec<usize> = e_tn.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
    let ratio = 0.1;
    let step = rank_and_refine(&e_tn, &scores, &e_prune, ratio).unwrap();

    let mut ranked = e_tn.clone();
    ranked.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let top = (ratio * n as f64).floor() as usize + 1;
    let bottom_start = ((1.0 - ratio) * n as f64).floor() as usize + 1;
    let mut rec: Vec<usize> = ranked[..top].iter().copied().filter(|e| !e_prune.contains(e)).collect();
    let mut rem: Vec<usize> = ranked[bottom_start..].iter().copied().filter(|e| e_prune.contains(e)).collect();
    rec.sort_unstable();
    rem.sort_unstable();
    assert_eq!(step.e_rec, rec);
    assert_eq!(step.e_rem, rem);
    let expected_budget = (1.0 - ratio) * e_prune.len() as f64 + ratio * (n - e_prune.len()) as f64;
    assert!((step.e_final.len() as f64 - expected_budget).abs() <= 0.2 * n as f64 * ratio + 1.0);
}

#[test]
fn uniform_scores_remove_nothing() {
    let e_tn: Vec<usize> = (0..50).collect();
    let step = rank_and_refine(&e_tn, &[1.0; 50], &e_tn[..30], 0.26).unwrap();
    assert!(step.e_rem.is_empty());
    assert_eq!(step.e_final, e_tn);
}

fn pretrained(g: &Graph, cfg: &TrainConfig) -> (GcnModel<f64>, TargetInfoMatrix<f64>) {
    let inputs = GraphInputs::from_graph(g, true).unwrap();
    let mut model = GcnModel::new(&inputs, g.num_classes(), cfg).unwrap();
    train_pre(&mut model, g, &inputs, cfg).unwrap();
    let z = cthge::chr::non_train_logits(g, &model.forward(&inputs).unwrap());
    let h = TargetInfoMatrix::compute(g, &g.cross_view(), Some(&z)).unwrap();
    (model, h)
}

#[test]
fn single_round_equals_one_refine_call() {
    let g = synth(80, 400, 5);
    let cfg = TrainConfig {
        epochs: 40,
        fine_tune_epochs: 20,
        ..Default::default()
    };
    let (model, h) = pretrained(&g, &cfg);
    let p1 = prune_phase1(&g, &h, 0.3).unwrap();
    let mut m = model.clone();
    let rounds = iterative_refine(&g, &h, &p1, &mut m, &cfg, 1, |_| 0.06).unwrap();
    assert_eq!(rounds.len(), 1);
    let direct = rank_and_refine(&p1.e_tn, &rounds[0].scores, &p1.e_prune, 0.06).unwrap();
    assert_eq!(rounds[0].step, direct);
}

#[test]
fn zero_threshold_and_ratio_keep_every_edge() {
    let mut b = GraphBuilder::<f64>::new();
    b.num_classes(2);
    for i in 0..8 {
        let split = if i % 2 == 0 { Split::Train } else { Split::Test };
        b.add_node(format!("t{i}"), "doc", Some(i / 4), Some(split), None).unwrap();
    }
    for j in 0..4 {
        b.add_node(format!("w{j}"), "word", None, None, None).unwrap();
        let class = j / 2;
        for i in (4 * class)..(4 * class + 4) {
            b.add_edge(format!("w{j}"), format!("t{i}"), "has", None);
        }
    }
    let g = b.build("doc").unwrap();
    let cfg = TrainConfig {
        epochs: 20,
        fine_tune_epochs: 5,
        ..Default::default()
    };
    let (mut model, h) = pretrained(&g, &cfg);
    let p1 = prune_phase1(&g, &h, 0.0).unwrap();
    assert_eq!(p1.e_prune, p1.e_tn);
    let rounds = iterative_refine(&g, &h, &p1, &mut model, &cfg, 3, |_| 0.0).unwrap();
    assert_eq!(rounds.last().unwrap().step.e_final, p1.e_tn);
    assert!(rounds.iter().all(|r| r.step.e_rec.is_empty() && r.step.e_rem.is_empty()));
}

#[test]
fn chr_is_invariant_to_node_order() {
    let (g, z) = common::random_graph(9);
    let base = compute_chr(&g, &common::info(&g, &z)).unwrap();

    let mut order: Vec<usize> = (0..g.node_count()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
    let mut b = GraphBuilder::<f64>::new();
    b.num_classes(g.num_classes());
    for &v in &order {
        let ty = &g.node_type_names()[g.node_type(v)];
        b.add_node(format!("x{}", g.node_id(v)), ty, g.label(v), g.split(v), None).unwrap();
    }
    for e in g.edges() {
        b.add_edge(format!("x{}", g.node_id(e.src)), format!("x{}", g.node_id(e.dst)), "e", None);
    }
    let shuffled = b.build(g.target_type_name()).unwrap();
    let nodes = cthge::chr::non_train_targets(&g);
    let mut z2 = DenseMatrix::zeros(nodes.len(), g.num_classes());
    for (r, &v) in cthge::chr::non_train_targets(&shuffled).iter().enumerate() {
        let orig = g.node_index(&shuffled.node_id(v)[1..]).unwrap();
        let k = nodes.iter().position(|&u| u == orig).unwrap();
        z2.row_mut(r).copy_from_slice(z.row(k));
    }
    let again = compute_chr(&shuffled, &common::info(&shuffled, &z2)).unwrap();
    assert!((base - again).abs() < 1e-12);
}

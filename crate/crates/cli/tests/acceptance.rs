//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs single-threaded.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use cthge::chr::{chr_over, compute_chr, homophily_ratio, TargetInfoMatrix};
use cthge::cthge::{default_tau_grid, prune_phase1, run_cthge, train_and_evaluate, PruneConfig, RefineConfig, Tau};
use cthge::eval::ari;
use cthge::hetgraph::{GraphBuilder, Split};
use cthge::hgnn::{gradient_check, train_targets, GcnModel, GraphInputs, TrainConfig};
use cthge::linalg::DenseMatrix;
use cthge::synth::{chr_sweep, generate, oracle_chr, sweep_correlation, SynthConfig};
use cthge::theory::{empirical_generalization_sweep, lower_bound, lower_bound_derivative, MixtureSpec, SweepOutcome};
use cthge::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Random heterogeneous graph plus logits for its non-training targets.
fn random_fixture(rng: &mut ChaCha8Rng) -> (Graph, DenseMatrix<f64>) {
    let c = rng.random_range(2..=5);
    let n_t = rng.random_range(c..=40);
    let n_n = rng.random_range(2..=40);
    let weighted = rng.random_bool(0.3);
    let mut b = GraphBuilder::new();
    b.num_classes(c);
    for i in 0..n_t {
        let split = if i < c || rng.random_bool(0.5) { Split::Train } else { Split::Test };
        b.add_node(format!("t{i}"), "item", Some(rng.random_range(0..c)), Some(split), None)
            .unwrap();
    }
    for j in 0..n_n {
        b.add_node(format!("n{j}"), "attr", None, None, None).unwrap();
    }
    let w = |rng: &mut ChaCha8Rng| weighted.then(|| rng.random_range(0.1..3.0));
    for _ in 0..rng.random_range(1..=150) {
        let (t, n) = (rng.random_range(0..n_t), rng.random_range(0..n_n));
        let wt = w(rng);
        b.add_edge(format!("n{n}"), format!("t{t}"), "has", wt);
    }
    for _ in 0..rng.random_range(0..=30) {
        let (u, v) = (rng.random_range(0..n_t), rng.random_range(0..n_t));
        let wt = w(rng);
        b.add_edge(format!("t{u}"), format!("t{v}"), "cites", wt);
    }
    let g = b.build("item").unwrap();
    let k = cthge::chr::non_train_targets(&g).len();
    let z = DenseMatrix::from_vec(k, c, (0..k * c).map(|_| rng.random_range(-4.0..4.0)).collect());
    (g, z)
}

/// CHR by explicit loops over nodes and edges, sharing no code with the
/// library beyond graph accessors.
fn scalar_chr(g: &Graph, z: &DenseMatrix<f64>) -> f64 {
    let c = g.num_classes();
    let mut rows: Vec<Vec<f64>> = vec![vec![0.0; c]; g.node_count()];
    let mut k = 0;
    for &v in g.target_nodes() {
        if g.split(v) == Some(Split::Train) {
            rows[v][g.label(v).unwrap()] = 1.0;
        } else {
            let zr = z.row(k);
            let m = zr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = zr.iter().map(|x| (x - m).exp()).collect();
            let s: f64 = e.iter().sum();
            rows[v] = e.iter().map(|x| x / s).collect();
            k += 1;
        }
    }
    let mut cross = Vec::new();
    for e in g.edges() {
        if g.is_target(e.src) != g.is_target(e.dst) {
            cross.push(*e);
        }
    }
    for &n in g.nontarget_nodes() {
        let mut p = vec![0.0; c];
        for e in &cross {
            let (nn, t) = if g.is_target(e.src) { (e.dst, e.src) } else { (e.src, e.dst) };
            if nn == n {
                for j in 0..c {
                    p[j] += e.weight * rows[t][j];
                }
            }
        }
        let s: f64 = p.iter().sum();
        if s > 0.0 {
            p.iter_mut().for_each(|x| *x /= s);
        }
        rows[n] = p;
    }
    let total: f64 = cross
        .iter()
        .map(|e| (0..c).map(|j| rows[e.src][j] * rows[e.dst][j]).sum::<f64>())
        .sum();
    total / cross.len() as f64
}

fn target_info(g: &Graph, z: &DenseMatrix<f64>) -> TargetInfoMatrix<f64> {
    TargetInfoMatrix::compute(g, &g.cross_view(), Some(z)).unwrap()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let fixtures: Vec<_> = (0..200).map(|_| random_fixture(&mut rng)).collect();
    let start = Instant::now();
    let values: Vec<f64> = fixtures
        .iter()
        .map(|(g, z)| compute_chr(g, &target_info(g, z)).unwrap())
        .collect();
    let elapsed = start.elapsed();
    let mut worst: f64 = 0.0;
    let mut in_range = true;
    for ((g, z), v) in fixtures.iter().zip(&values) {
        worst = worst.max((v - scalar_chr(g, z)).abs());
        in_range &= (0.0..=1.0).contains(v);
    }
    outcome(
        worst <= 1e-12 && in_range && elapsed < Duration::from_secs(1),
        format!("200 fixtures, max |diff| {worst:.2e}, all in [0,1]: {in_range}, {elapsed:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut exact = 0;
    for _ in 0..50 {
        let c = rng.random_range(2..=5);
        let n = rng.random_range(c..=60);
        let mut b = GraphBuilder::<f64>::new();
        b.num_classes(c);
        for i in 0..n {
            b.add_node(i.to_string(), "node", Some(rng.random_range(0..c)), Some(Split::Train), None)
                .unwrap();
        }
        for _ in 0..rng.random_range(1..=200) {
            b.add_edge(rng.random_range(0..n).to_string(), rng.random_range(0..n).to_string(), "link", None);
        }
        let g = b.build("node").unwrap();
        let h = TargetInfoMatrix::compute(&g, &g.cross_view(), None).unwrap();
        let all: Vec<usize> = (0..g.edge_count()).collect();
        let chr = chr_over(&g, &h, &all).unwrap().chr;
        if chr == homophily_ratio(&g).unwrap() {
            exact += 1;
        }
    }
    outcome(exact == 50, format!("{exact}/50 single-type graphs match the homophily ratio exactly"))
}

fn criteria_3_4() -> (Outcome, Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grid = default_tau_grid();
    let (mut checked, mut violations, mut non_monotone) = (0, 0, 0);
    for _ in 0..1000 {
        let (g, z) = random_fixture(&mut rng);
        let h = target_info(&g, &z);
        let mut prev: Option<f64> = None;
        for &tau in &grid {
            let Ok(p) = prune_phase1(&g, &h, tau) else { break };
            let distinct = p.similarities.iter().any(|&s| s != p.similarities[0]);
            if !p.e_cand.is_empty() && distinct {
                checked += 1;
                if !(p.chr_after > p.chr_before) {
                    violations += 1;
                }
            }
            if prev.is_some_and(|c| p.chr_after < c) {
                non_monotone += 1;
            }
            prev = Some(p.chr_after);
        }
    }
    (
        outcome(
            violations == 0 && checked > 0,
            format!("{checked} pruning cases over 1000 fixtures, {violations} without strict CHR increase"),
        ),
        outcome(non_monotone == 0, format!("{non_monotone} decreasing steps across the tau grid over 1000 fixtures")),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let s = generate::<f64>(&SynthConfig {
        n_t: 50,
        n_n: 50,
        tt_edges: 60,
        tn_edges: 200,
        nn_edges: 60,
        feature_dim: 8,
        ..Default::default()
    })
    .unwrap();
    let cfg = TrainConfig {
        hidden_units: 16,
        ..Default::default()
    };
    let inputs = GraphInputs::from_graph(&s.graph, true).unwrap();
    let model = GcnModel::new(&inputs, s.graph.num_classes(), &cfg).unwrap();
    let check = gradient_check(&model, &inputs, &train_targets(&s.graph), 64, 5).unwrap();
    let elapsed = start.elapsed();
    outcome(
        s.graph.node_count() <= 100 && check.probes.len() == 64 && check.max_rel_error < 1e-4 && elapsed < Duration::from_secs(30),
        format!(
            "{} nodes, {} probes, max relative error {:.2e}, {elapsed:.2?}",
            s.graph.node_count(),
            check.probes.len(),
            check.max_rel_error
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let w: Vec<Vec<f64>> = (0..3).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let base = MixtureSpec {
        mu_x0: vec![1.0, 0.5, -0.2, 0.0],
        mu_x1: vec![-0.5, 0.0, 0.4, 1.0],
        sigma: [0.8, 1.3],
        lambda: 0.3,
        q_s: 0.8,
        q_c: 1.0,
        w,
        samples: 100_000,
    };

    let mut decreasing = true;
    for q_s in [0.3, 0.6, 0.9, 1.0] {
        let grid: Vec<f64> = (1..=20).map(|i| 1.0 - q_s + q_s * i as f64 / 20.0).collect();
        let vals: Vec<f64> = grid
            .iter()
            .map(|&q_c| lower_bound(&MixtureSpec { q_s, q_c, ..base.clone() }).unwrap().1)
            .collect();
        decreasing &= vals.windows(2).all(|p| p[1] < p[0]);
    }
    ok &= decreasing;
    notes.push(format!("strictly decreasing: {decreasing}"));

    let mut worst_fd: f64 = 0.0;
    for (q_s, q_c) in [(0.9, 0.4), (0.7, 0.8), (1.0, 0.9), (0.6, 0.55)] {
        let spec = MixtureSpec { q_s, q_c, ..base.clone() };
        let h = 1e-5;
        let f = |q: f64| lower_bound(&MixtureSpec { q_c: q, ..spec.clone() }).unwrap().1;
        let fd = (f(q_c + h) - f(q_c - h)) / (2.0 * h);
        let an = lower_bound_derivative(&spec).unwrap();
        worst_fd = worst_fd.max((an - fd).abs() / an.abs());
    }
    ok &= worst_fd < 1e-6;
    notes.push(format!("derivative vs FD {worst_fd:.1e}"));

    let mut worst_scale: f64 = 0.0;
    let (_, c_ref) = lower_bound(&base).unwrap();
    for s in [0.01, 0.5, 3.0, 250.0] {
        let scaled = MixtureSpec {
            w: base.w.iter().map(|r| r.iter().map(|x| x * s).collect()).collect(),
            ..base.clone()
        };
        worst_scale = worst_scale.max((lower_bound(&scaled).unwrap().1 - c_ref).abs() / c_ref);
    }
    ok &= worst_scale <= 1e-10;
    notes.push(format!("W scaling {worst_scale:.1e}"));

    let grid: Vec<f64> = (3..=10).map(|i| i as f64 / 10.0).collect();
    let mut bound_ok = true;
    let mut min_margin = f64::INFINITY;
    for spec in [base.clone(), MixtureSpec::isotropic(4, 0.9, 1.0)] {
        for p in empirical_generalization_sweep(&spec, &grid, 6).unwrap() {
            match p.outcome {
                SweepOutcome::Point { db_index, db_std_error, c_lower, .. } => {
                    bound_ok &= db_index >= c_lower - 3.0 * db_std_error;
                    min_margin = min_margin.min(db_index - c_lower);
                }
                SweepOutcome::DomainError => bound_ok = false,
            }
        }
    }
    ok &= bound_ok;
    notes.push(format!("empirical >= bound (3 sigma): {bound_ok}, min gap {min_margin:.3}"));

    let elapsed = start.elapsed();
    ok &= elapsed < Duration::from_secs(120);
    notes.push(format!("{elapsed:.2?}"));
    outcome(ok, notes.join(", "))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let base = SynthConfig::default();
    let cfg = TrainConfig {
        hidden_units: 32,
        epochs: 100,
        ..Default::default()
    };
    let rows = chr_sweep::<f64, _>(&base, &[0.3, 0.5, 0.7, 0.9], &[0, 1, 2, 3, 4], |g, seed| {
        train_and_evaluate(g, &TrainConfig { seed, ..cfg.clone() }, Split::Test)
    })
    .unwrap();
    let rho = sweep_correlation(&rows);
    let elapsed = start.elapsed();
    let means: Vec<String> = rows
        .chunks(5)
        .map(|c| format!("{:.3}", c.iter().map(|r| r.macro_f1).sum::<f64>() / 5.0))
        .collect();
    outcome(
        rho.is_some_and(|r| r > 0.8) && elapsed < Duration::from_secs(600),
        format!(
            "Spearman {:.3} over 20 runs, mean Macro-F1 by CHR [{}], {elapsed:.2?}",
            rho.unwrap_or(f64::NAN),
            means.join(", ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let train = TrainConfig {
        epochs: 200,
        fine_tune_epochs: 100,
        learning_rate: 1e-3,
        ..Default::default()
    };
    let prune = PruneConfig {
        tau: Tau::Fixed(0.4),
        ..Default::default()
    };
    let (mut f1_wins, mut chr_ok) = (0, true);
    let mut lines = Vec::new();
    for seed in 0..5 {
        let s = generate::<f64>(&SynthConfig {
            noise_fraction: 0.3,
            target_chr: 0.7,
            tn_edges: 5000,
            class_separation: 0.5,
            seed,
            ..Default::default()
        })
        .unwrap();
        let cfg = TrainConfig { seed, ..train.clone() };
        let out = run_cthge(&s.graph, &cfg, &prune, &RefineConfig::default()).unwrap();
        let before = s.oracle_chr().unwrap();
        let after = oracle_chr(&out.graph, &s.truth).unwrap();
        let stages = out.plan.stages();
        let model_lift = stages.last().unwrap().1 - stages[0].1;
        let f0 = train_and_evaluate(&s.graph, &cfg, Split::Test).unwrap().macro_f1;
        let f1 = train_and_evaluate(&out.graph, &cfg, Split::Test).unwrap().macro_f1;
        chr_ok &= after - before >= 0.05 && model_lift >= 0.05;
        f1_wins += usize::from(f1 > f0);
        lines.push(format!("[CHR {before:.3}->{after:.3} F1 {f0:.3}->{f1:.3}]"));
    }
    let elapsed = start.elapsed();
    outcome(
        chr_ok && f1_wins >= 4 && elapsed < Duration::from_secs(900),
        format!("F1 up in {f1_wins}/5 seeds {}, {elapsed:.2?}", lines.join(" ")),
    )
}

fn criterion_9() -> Outcome {
    let origin = [20.75, 23.81, 19.84, 17.26, 17.71, 26.08, 21.31, 20.29, 20.42];
    let edited = [24.84, 24.52, 22.03, 19.47, 20.34, 26.92, 24.42, 24.60, 42.52];
    let v = 100.0 * ari(&origin, &edited).unwrap();
    outcome((v - 23.19).abs() <= 0.05, format!("ARI {v:.4}% vs expected 23.19%"))
}

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_cthge"))
        .args(args)
        .env_remove("CTHGE_THREADS")
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

fn dir_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

fn criterion_10() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let p = |s: &str| -> PathBuf { root.join(s) };
    let s = |p: &PathBuf| p.to_string_lossy().into_owned();
    std::fs::write(
        p("small.toml"),
        "[synth]\nn_t = 80\nn_n = 80\ntn_edges = 400\ntt_edges = 80\nnn_edges = 80\nnoise_fraction = 0.2\n\n[train]\nepochs = 30\nfine_tune_epochs = 15\nhidden_units = 16\n",
    )
    .unwrap();
    let graph = s(&p("graph"));
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("synth", vec!["synth".into(), "gen".into(), "--config".into(), s(&p("small.toml"))]),
        ("chr", vec!["chr".into(), "report".into(), "--graph".into(), graph.clone(), "--config".into(), s(&p("small.toml"))]),
        (
            "edit",
            vec!["edit".into(), "--graph".into(), graph.clone(), "--tau".into(), "0.3".into(), "--config".into(), s(&p("small.toml"))],
        ),
        (
            "bench",
            vec!["bench".into(), "--chr-grid".into(), "0.5,0.9".into(), "--seeds".into(), "2".into(), "--compare".into(), "--tau".into(), "0.3".into(), "--config".into(), s(&p("small.toml"))],
        ),
        ("theory", vec!["theory".into(), "sweep".into(), "--samples".into(), "4000".into()]),
        ("eval", vec!["eval".into(), "run".into(), "--graph".into(), graph.clone(), "--seeds".into(), "2".into(), "--config".into(), s(&p("small.toml"))]),
    ];
    let mut compared = 0;
    for (name, args) in runs {
        let first = if name == "synth" { p("graph") } else { p(&format!("{name}1")) };
        let second = p(&format!("{name}2"));
        let mut a: Vec<&str> = args.iter().map(String::as_str).collect();
        let (fs, ss) = (s(&first), s(&second));
        a.extend(["--seed", "7", "--out", &fs]);
        if !cli(&a) {
            return outcome(false, format!("`{name}` run failed"));
        }
        let lock = s(&first.join("config.lock"));
        let sub: Vec<&str> = match name {
            "synth" => vec!["synth", "gen"],
            "chr" => vec!["chr", "report"],
            "theory" => vec!["theory", "sweep"],
            "eval" => vec!["eval", "run"],
            other => vec![other],
        };
        let mut again = sub;
        again.extend(["--config", &lock, "--out", &ss]);
        if !cli(&again) {
            return outcome(false, format!("`{name}` rerun from lock failed"));
        }
        let (x, y) = (dir_files(&first), dir_files(&second));
        if x != y {
            return outcome(false, format!("`{name}` outputs differ between locked runs"));
        }
        compared += x.len();
    }
    outcome(true, format!("6 subcommands, {compared} files byte-identical after rerun from config.lock"))
}

fn main() {
    rayon::ThreadPoolBuilder::new().num_threads(1).build_global().unwrap();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut run = |name: &'static str, f: &dyn Fn() -> Outcome| {
        let o = f();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };
    run("1 CHR matches scalar oracle", &criterion_1);
    run("2 homogeneous specialization", &criterion_2);
    let (c3, c4) = criteria_3_4();
    run("3 pruning raises CHR strictly", &|| outcome(c3.pass, c3.detail.clone()));
    run("4 CHR monotone in tau", &|| outcome(c4.pass, c4.detail.clone()));
    run("5 gradient fidelity", &criterion_5);
    run("6 complexity lower bound", &criterion_6);
    run("7 CHR vs Macro-F1 correlation", &criterion_7);
    run("8 end-to-end editing effect", &criterion_8);
    run("9 ARI on reference F1 pairs", &criterion_9);
    run("10 locked reruns are byte-identical", &criterion_10);
    let failed = results.iter().filter(|(_, o)| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

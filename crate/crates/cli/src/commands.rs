use std::collections::HashMap;
use std::path::Path;

use cthge::chr::{chr_report as chr_of, non_train_targets, TargetInfoMatrix};
use cthge::cthge::{run_cthge, train_and_evaluate};
use cthge::eval::{ari, make_split, metrics_csv, MetricsRow};
use cthge::hetgraph::{load_graph, save_graph, Split, EDGES_FILE, NODES_FILE};
use cthge::hgnn::{train_pre, GcnModel, GraphInputs, TrainConfig};
use cthge::linalg::DenseMatrix;
use cthge::synth::{chr_sweep, generate, oracle_chr, sweep_correlation, sweep_csv, SynthConfig};
use cthge::theory::{empirical_generalization_sweep, sweep_csv as theory_csv, MixtureSpec};
use cthge::{Error, Graph, Result};
use log::info;
use rayon::prelude::*;

use crate::config::RunConfig;

pub(crate) fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Loads the configured graph, assigning a stratified split when the files
/// carry none.
fn load(cfg: &RunConfig) -> Result<Graph> {
    let dir = cfg
        .graph
        .path
        .as_ref()
        .ok_or_else(|| Error::Config("--graph <dir> is required".into()))?;
    let g: Graph = load_graph(dir.join(NODES_FILE), dir.join(EDGES_FILE), &cfg.graph.target)?;
    if g.nodes_in_split(Split::Train).is_empty() {
        info!("graph has no training split; assigning {:?}", cfg.split);
        let split = make_split(&g, cfg.split, cfg.seed)?;
        return g.with_splits(&split.splits);
    }
    Ok(g)
}

/// Reads `node_id<TAB>logit_1 ... logit_C` rows for every non-training target.
fn read_logits(path: &Path, g: &Graph) -> Result<DenseMatrix<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file = path.display().to_string();
    let mut rows: HashMap<&str, Vec<f64>> = HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let id = cols.next().unwrap_or_default();
        let vals: std::result::Result<Vec<f64>, _> = cols.map(str::parse).collect();
        let vals = vals.map_err(|e| Error::Parse {
            file: file.clone(),
            line: i + 1,
            message: format!("bad logit: {e}"),
        })?;
        if vals.len() != g.num_classes() {
            return Err(Error::Parse {
                file: file.clone(),
                line: i + 1,
                message: format!("expected {} logits, found {}", g.num_classes(), vals.len()),
            });
        }
        rows.insert(id, vals);
    }
    let nodes = non_train_targets(g);
    let mut z = DenseMatrix::zeros(nodes.len(), g.num_classes());
    for (r, &v) in nodes.iter().enumerate() {
        let vals = rows
            .get(g.node_id(v))
            .ok_or_else(|| Error::Validation(format!("{file}: no logits for node {}", g.node_id(v))))?;
        z.row_mut(r).copy_from_slice(vals);
    }
    Ok(z)
}

fn trained_logits(g: &Graph, train: &TrainConfig) -> Result<DenseMatrix<f64>> {
    let inputs = GraphInputs::from_graph(g, train.synthesize_features)?;
    let mut model = GcnModel::new(&inputs, g.num_classes(), train)?;
    train_pre(&mut model, g, &inputs, train)?;
    Ok(cthge::chr::non_train_logits(g, &model.forward(&inputs)?))
}

pub(crate) fn chr_report(cfg: &RunConfig, out: &Path) -> Result<()> {
    let g = load(cfg)?;
    let logits = match cfg.chr.logits.as_str() {
        "none" => None,
        "train" => Some(trained_logits(&g, &cfg.train)?),
        path => Some(read_logits(Path::new(path), &g)?),
    };
    let h = TargetInfoMatrix::compute(&g, &g.cross_view(), logits.as_ref())?;
    let report = chr_of(&g, &h)?;
    write(&out.join("chr.csv"), &report.to_csv(&g))?;
    println!("CHR\t{}", report.chr);
    Ok(())
}

pub(crate) fn edit(cfg: &RunConfig, out: &Path) -> Result<()> {
    let g = load(cfg)?;
    let result = run_cthge(&g, &cfg.train, &cfg.prune, &cfg.refine)?;
    save_graph(&result.graph, out)?;
    write(&out.join("plan.csv"), &result.plan.to_csv())?;
    write(&out.join("report.csv"), &result.report_csv())?;
    let p = &result.plan.phase1;
    println!("tau\t{}", p.tau);
    println!("CHR before\t{}", p.chr_before);
    println!("CHR after\t{}", result.plan.stages().last().map_or(p.chr_after, |s| s.1));
    println!("cross edges\t{} -> {}", p.e_tn.len(), result.plan.e_final().len());
    if cfg.edit.evaluate {
        let before = train_and_evaluate(&g, &cfg.train, Split::Test)?;
        let after = train_and_evaluate(&result.graph, &cfg.train, Split::Test)?;
        let csv = format!(
            "graph,macro_f1,micro_f1\noriginal,{},{}\nedited,{},{}\n",
            before.macro_f1, before.micro_f1, after.macro_f1, after.micro_f1
        );
        write(&out.join("f1.csv"), &csv)?;
        println!("Macro-F1\t{} -> {}", before.macro_f1, after.macro_f1);
    }
    Ok(())
}

fn seed_list(cfg: &RunConfig, count: u64) -> Result<Vec<u64>> {
    if count == 0 {
        return Err(Error::Config("seed count must be positive".into()));
    }
    Ok((0..count).map(|i| cfg.seed + i).collect())
}

pub(crate) fn bench(cfg: &RunConfig, out: &Path) -> Result<()> {
    if cfg.bench.chr_grid.is_empty() {
        return Err(Error::Config("bench needs a non-empty CHR grid".into()));
    }
    let seeds = seed_list(cfg, cfg.bench.seeds)?;
    let train = |s: u64| TrainConfig { seed: s, ..cfg.train.clone() };
    let rows = chr_sweep::<f64, _>(&cfg.synth, &cfg.bench.chr_grid, &seeds, |g, s| {
        train_and_evaluate(g, &train(s), Split::Test)
    })?;
    write(&out.join("sweep.csv"), &sweep_csv(&rows))?;
    let graph_name = |c: f64| format!("chr={c}");
    let mut metrics: Vec<MetricsRow> = rows
        .iter()
        .map(|r| MetricsRow {
            model: "gcn".into(),
            graph: graph_name(r.target_chr),
            seed: r.seed,
            chr: Some(r.measured_chr),
            macro_f1: r.macro_f1,
            micro_f1: r.micro_f1,
        })
        .collect();
    let rho = sweep_correlation(&rows);
    let mut extra = vec![(
        "spearman_chr_macro_f1".to_string(),
        rho.map_or("undefined".to_string(), |v| v.to_string()),
    )];
    if cfg.bench.compare {
        let edited: Vec<MetricsRow> = rows
            .par_iter()
            .map(|r| {
                let s = generate::<f64>(&SynthConfig {
                    target_chr: r.target_chr,
                    seed: r.seed,
                    ..cfg.synth.clone()
                })?;
                let t = train(r.seed);
                let res = run_cthge(&s.graph, &t, &cfg.prune, &cfg.refine)?;
                let rep = train_and_evaluate(&res.graph, &t, Split::Test)?;
                Ok(MetricsRow {
                    model: "gcn+cthge".into(),
                    graph: graph_name(r.target_chr),
                    seed: r.seed,
                    chr: Some(oracle_chr(&res.graph, &s.truth)?),
                    macro_f1: rep.macro_f1,
                    micro_f1: rep.micro_f1,
                })
            })
            .collect::<Result<_>>()?;
        let col = |rs: &[MetricsRow], f: fn(&MetricsRow) -> f64| rs.iter().map(f).collect::<Vec<_>>();
        let ari_macro = ari(&col(&metrics, |r| r.macro_f1), &col(&edited, |r| r.macro_f1))?;
        let ari_micro = ari(&col(&metrics, |r| r.micro_f1), &col(&edited, |r| r.micro_f1))?;
        extra.push(("ari_macro_f1".into(), ari_macro.to_string()));
        extra.push(("ari_micro_f1".into(), ari_micro.to_string()));
        println!("ARI Macro-F1\t{ari_macro}");
        metrics.extend(edited);
    }
    write(&out.join("metrics.csv"), &metrics_csv(&metrics, &extra))?;
    match rho {
        Some(v) => println!("Spearman(CHR, Macro-F1)\t{v}"),
        None => println!("Spearman(CHR, Macro-F1)\tundefined"),
    }
    Ok(())
}

pub(crate) fn theory_sweep(cfg: &RunConfig, out: &Path) -> Result<()> {
    let t = &cfg.theory;
    if t.q_c_grid.is_empty() || t.dim == 0 {
        return Err(Error::Config("theory sweep needs a non-empty q_c grid and dim > 0".into()));
    }
    let spec = MixtureSpec {
        samples: t.samples,
        ..MixtureSpec::isotropic(t.dim, t.q_s, 1.0)
    };
    let points = empirical_generalization_sweep(&spec, &t.q_c_grid, cfg.seed)?;
    let csv = theory_csv(&points);
    write(&out.join("theory.csv"), &csv)?;
    print!("{csv}");
    Ok(())
}

pub(crate) fn synth_gen(cfg: &RunConfig, out: &Path) -> Result<()> {
    let s = generate::<f64>(&cfg.synth)?;
    s.save(out)?;
    println!("oracle CHR\t{}", s.oracle_chr()?);
    Ok(())
}

pub(crate) fn eval_run(cfg: &RunConfig, out: &Path) -> Result<()> {
    let g = load(cfg)?;
    let name = cfg
        .graph
        .path
        .as_ref()
        .and_then(|p| p.file_name())
        .map_or("graph".to_string(), |n| n.to_string_lossy().into_owned());
    let rows = seed_list(cfg, cfg.eval.seeds)?
        .into_iter()
        .map(|s| {
            let r = train_and_evaluate(&g, &TrainConfig { seed: s, ..cfg.train.clone() }, Split::Test)?;
            Ok(MetricsRow {
                model: "gcn".into(),
                graph: name.clone(),
                seed: s,
                chr: None,
                macro_f1: r.macro_f1,
                micro_f1: r.micro_f1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let csv = metrics_csv(&rows, &[]);
    write(&out.join("metrics.csv"), &csv)?;
    for r in &rows {
        println!("seed {}\tMacro-F1 {}\tMicro-F1 {}", r.seed, r.macro_f1, r.micro_f1);
    }
    Ok(())
}

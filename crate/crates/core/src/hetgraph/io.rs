//! TSV ingestion and canonical serialization.
//!
//! nodes: `node_id<TAB>type<TAB>label|-<TAB>split|-[<TAB>f0,f1,...]`
//! edges: `src<TAB>dst<TAB>edge_type[<TAB>weight]`
//!
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{GraphBuilder, HeteroGraph, Split};

pub const NODES_FILE: &str = "nodes.tsv";
pub const EDGES_FILE: &str = "edges.tsv";

pub fn load_graph<F: Scalar>(
    nodes_path: impl AsRef<Path>,
    edges_path: impl AsRef<Path>,
    target_type: &str,
) -> Result<HeteroGraph<F>> {
    let (np, ep) = (nodes_path.as_ref(), edges_path.as_ref());
    let nodes = fs::read_to_string(np).map_err(|e| Error::io(np, e))?;
    let edges = fs::read_to_string(ep).map_err(|e| Error::io(ep, e))?;
    parse_graph_named(&nodes, &np.display().to_string(), &edges, &ep.display().to_string(), target_type)
}

/// Parses in-memory TSV contents.
pub fn parse_graph<F: Scalar>(nodes: &str, edges: &str, target_type: &str) -> Result<HeteroGraph<F>> {
    parse_graph_named(nodes, NODES_FILE, edges, EDGES_FILE, target_type)
}

fn parse_graph_named<F: Scalar>(
    nodes: &str,
    nodes_name: &str,
    edges: &str,
    edges_name: &str,
    target_type: &str,
) -> Result<HeteroGraph<F>> {
    let mut b = GraphBuilder::new();
    for (lineno, line) in content_lines(nodes) {
        let err = |message: String| Error::Parse {
            file: nodes_name.to_string(),
            line: lineno,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if !(4..=5).contains(&cols.len()) {
            return Err(err(format!("expected 4 or 5 tab-separated columns, found {}", cols.len())));
        }
        let label = match cols[2] {
            "-" => None,
            s => Some(s.parse::<usize>().map_err(|_| err(format!("bad label {s:?}")))?),
        };
        let split = match cols[3] {
            "-" => None,
            s => Some(Split::parse(s).ok_or_else(|| err(format!("bad split {s:?}")))?),
        };
        let features = match cols.get(4) {
            None | Some(&"-") | Some(&"") => None,
            Some(s) => Some(
                s.split(',')
                    .map(|x| parse_real::<F>(x).ok_or_else(|| err(format!("bad feature value {x:?}"))))
                    .collect::<Result<Vec<F>>>()?,
            ),
        };
        if cols[0].is_empty() || cols[1].is_empty() {
            return Err(err("empty node id or type".into()));
        }
        b.add_node(cols[0], cols[1], label, split, features)
            .map_err(|e| err(e.to_string()))?;
    }
    for (lineno, line) in content_lines(edges) {
        let err = |message: String| Error::Parse {
            file: edges_name.to_string(),
            line: lineno,
            message,
        };
        let cols: Vec<&str> = line.split('\t').collect();
        if !(3..=4).contains(&cols.len()) {
            return Err(err(format!("expected 3 or 4 tab-separated columns, found {}", cols.len())));
        }
        let weight = match cols.get(3) {
            None => None,
            Some(s) => Some(parse_real::<F>(s).ok_or_else(|| err(format!("bad weight {s:?}")))?),
        };
        b.add_edge(cols[0], cols[1], cols[2], weight);
    }
    b.build(target_type)
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_real<F: Scalar>(s: &str) -> Option<F> {
    s.trim().parse::<f64>().ok().filter(|x| x.is_finite()).map(F::lit)
}

pub fn write_nodes_tsv<F: Scalar>(g: &HeteroGraph<F>) -> String {
    let mut out = String::new();
    for n in 0..g.node_count() {
        let label = g.label(n).map_or("-".to_string(), |y| y.to_string());
        let split = g.split(n).map_or("-", Split::as_str);
        let _ = write!(out, "{}\t{}\t{}\t{}", g.node_id(n), g.node_type_names()[g.node_type(n)], label, split);
        if let Some(f) = g.features(n) {
            out.push('\t');
            for (k, x) in f.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{x}");
            }
        }
        out.push('\n');
    }
    out
}

pub fn write_edges_tsv<F: Scalar>(g: &HeteroGraph<F>) -> String {
    let mut out = String::new();
    for e in g.edges() {
        let _ = write!(
            out,
            "{}\t{}\t{}",
            g.node_id(e.src),
            g.node_id(e.dst),
            g.edge_type_names()[e.edge_type]
        );
        if g.is_weighted() {
            let _ = write!(out, "\t{}", e.weight);
        }
        out.push('\n');
    }
    out
}

/// Writes `nodes.tsv` and `edges.tsv` into `dir` (created if missing).
pub fn save_graph<F: Scalar>(g: &HeteroGraph<F>, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let np = dir.join(NODES_FILE);
    fs::write(&np, write_nodes_tsv(g)).map_err(|e| Error::io(&np, e))?;
    let ep = dir.join(EDGES_FILE);
    fs::write(&ep, write_edges_tsv(g)).map_err(|e| Error::io(&ep, e))?;
    Ok(())
}

//! Resolved run configuration, persisted as `config.lock`.

use std::path::{Path, PathBuf};

use cthge::cthge::{PruneConfig, RefineConfig};
use cthge::eval::SplitRatios;
use cthge::hgnn::TrainConfig;
use cthge::synth::SynthConfig;
use cthge::{Error, Result};
use serde::{Deserialize, Serialize};

pub const LOCK_FILE: &str = "config.lock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    /// Directory holding `nodes.tsv` and `edges.tsv`.
    pub path: Option<PathBuf>,
    pub target: String,
}

impl Default for GraphSection {
    fn default() -> Self {
        Self {
            path: None,
            target: "target".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChrSection {
    /// `train`, `none`, or a TSV of logits (`node_id` then one column per class).
    pub logits: String,
}

impl Default for ChrSection {
    fn default() -> Self {
        Self { logits: "train".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EditSection {
    /// Train fresh models on the original and edited graph and report test F1.
    pub evaluate: bool,
}

impl Default for EditSection {
    fn default() -> Self {
        Self { evaluate: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub chr_grid: Vec<f64>,
    /// Number of seeds, counted up from the run seed.
    pub seeds: u64,
    /// Also run the editor on every generated graph.
    pub compare: bool,
}

impl Default for BenchSection {
    fn default() -> Self {
        Self {
            chr_grid: vec![0.3, 0.5, 0.7, 0.9],
            seeds: 5,
            compare: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TheorySection {
    pub q_s: f64,
    pub q_c_grid: Vec<f64>,
    pub samples: usize,
    pub dim: usize,
}

impl Default for TheorySection {
    fn default() -> Self {
        Self {
            q_s: 0.9,
            q_c_grid: (2..=10).map(|i| i as f64 / 10.0).collect(),
            samples: 100_000,
            dim: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub seeds: u64,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { seeds: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub seed: u64,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    pub graph: GraphSection,
    pub split: SplitRatios,
    pub train: TrainConfig,
    pub prune: PruneConfig,
    pub refine: RefineConfig,
    pub synth: SynthConfig,
    pub theory: TheorySection,
    pub bench: BenchSection,
    pub chr: ChrSection,
    pub edit: EditSection,
    pub eval: EvalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: String::new(),
            seed: 0,
            threads: 0,
            graph: GraphSection::default(),
            split: SplitRatios::default(),
            train: TrainConfig::default(),
            prune: PruneConfig::default(),
            refine: RefineConfig::default(),
            synth: SynthConfig::default(),
            theory: TheorySection::default(),
            bench: BenchSection::default(),
            chr: ChrSection::default(),
            edit: EditSection::default(),
            eval: EvalSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    /// Propagates the run seed into every section and checks all values.
    pub fn finalize(&mut self) -> Result<()> {
        self.train.seed = self.seed;
        self.synth.seed = self.seed;
        self.synth.split = self.split;
        self.split.validate()?;
        self.train.validate()?;
        self.prune.validate()?;
        self.refine.validate()
    }
}

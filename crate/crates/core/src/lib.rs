//! Cross-type homophily for heterogeneous graphs: measurement (CHR),
//! homophily-guided graph editing, a relation-aware GCN backbone, the
//! complexity lower bound, synthetic benchmarks and evaluation.
//!
//! Numeric code is generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the common choices.

pub mod chr;
pub mod cthge;
pub mod error;
pub mod eval;
pub mod hetgraph;
pub mod hgnn;
pub mod linalg;
pub mod scalar;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};

pub type Graph = hetgraph::HeteroGraph<f64>;
pub type Graph32 = hetgraph::HeteroGraph<f32>;
pub type Model = hgnn::GcnModel<f64>;
pub type Model32 = hgnn::GcnModel<f32>;
pub type TargetInfo = chr::TargetInfoMatrix<f64>;
pub type Plan = cthge::EditPlan<f64>;

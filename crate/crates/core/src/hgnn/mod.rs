//! Built-in relation-aware graph convolution backbone with hand-derived
//! gradients.
//!
//! Architecture:
//!
//! ```text
//! H0[v] = x_v · W_in[type(v)] + b_in[type(v)]
//! Z_l   = H_l · W_self + Σ_r (Â_r H_l) · W_r + b        l = 0, 1
//! H_l+1 = act(Z_l)
//! out   = H_2 · W_cls + b_cls
//! ```
//!
//! where `Â_r` is the symmetric-normalized adjacency of edge type `r`.

mod checkpoint;
mod gradcheck;
mod inputs;
mod train;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::{softmax_row, Scalar};

pub use gradcheck::{gradient_check, probe_indices, GradCheck, Probe, FD_STEP};
pub use inputs::{degree_bucket, GraphInputs, DEGREE_BUCKETS};
pub use train::{fine_tune, train_on, train_pre, train_targets, TrainOutcome};

pub const NUM_CONV_LAYERS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub fine_tune_epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub hidden_units: usize,
    pub seed: u64,
    pub activation: Activation,
    /// Synthesize degree-bucket features for node types without features.
    pub synthesize_features: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 400,
            fine_tune_epochs: 200,
            learning_rate: 5e-4,
            weight_decay: 1e-4,
            hidden_units: 64,
            seed: 0,
            activation: Activation::Relu,
            synthesize_features: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.hidden_units == 0 {
            return Err(Error::Config("hidden_units must be positive".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight decay must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Dimensions that fix the parameter layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub feature_dims: Vec<usize>,
    pub relations: usize,
    pub hidden: usize,
    pub classes: usize,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy)]
struct ConvIds {
    self_w: usize,
    rel_w: usize,
    bias: usize,
}

#[derive(Debug, Clone)]
struct Layout {
    tensors: Vec<TensorSpec>,
    in_w: Vec<usize>,
    in_b: Vec<usize>,
    conv: [ConvIds; NUM_CONV_LAYERS],
    cls_w: usize,
    cls_b: usize,
    total: usize,
}

impl Layout {
    fn new(shape: &ModelShape) -> Self {
        let mut tensors = Vec::new();
        let mut offset = 0;
        let mut push = |name: String, rows: usize, cols: usize| {
            tensors.push(TensorSpec { name, rows, cols, offset });
            offset += rows * cols;
            tensors.len() - 1
        };
        let h = shape.hidden;
        let mut in_w = Vec::new();
        let mut in_b = Vec::new();
        for (t, &d) in shape.feature_dims.iter().enumerate() {
            in_w.push(push(format!("input.{t}.weight"), d, h));
            in_b.push(push(format!("input.{t}.bias"), 1, h));
        }
        let mut conv = [ConvIds { self_w: 0, rel_w: 0, bias: 0 }; NUM_CONV_LAYERS];
        for (l, ids) in conv.iter_mut().enumerate() {
            ids.self_w = push(format!("conv{l}.self"), h, h);
            ids.rel_w = usize::MAX;
            for r in 0..shape.relations {
                let id = push(format!("conv{l}.rel{r}"), h, h);
                if r == 0 {
                    ids.rel_w = id;
                }
            }
            ids.bias = push(format!("conv{l}.bias"), 1, h);
        }
        let cls_w = push("classifier.weight".into(), h, shape.classes);
        let cls_b = push("classifier.bias".into(), 1, shape.classes);
        Layout {
            tensors,
            in_w,
            in_b,
            conv,
            cls_w,
            cls_b,
            total: offset,
        }
    }
}

/// Parameters plus adaptive-moment optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel<F> {
    shape: ModelShape,
    layout_tensors: Vec<TensorSpec>,
    params: Vec<F>,
    moment1: Vec<F>,
    moment2: Vec<F>,
    step: u64,
    seed: u64,
    config: TrainConfig,
}

/// Intermediate values kept for the backward pass.
pub(crate) struct ForwardCache<F> {
    /// `H_0, H_1, H_2`.
    hidden: Vec<DenseMatrix<F>>,
    /// Pre-activations `Z_0, Z_1`.
    pre: Vec<DenseMatrix<F>>,
    /// `Â_r H_l` per layer and relation.
    messages: Vec<Vec<DenseMatrix<F>>>,
    pub(crate) logits: DenseMatrix<F>,
}

impl<F: Scalar> GcnModel<F> {
    /// Fresh model sized for `inputs` with Glorot-uniform weights and zero biases.
    pub fn new(inputs: &GraphInputs<F>, classes: usize, config: &TrainConfig) -> Result<Self> {
        config.validate()?;
        let shape = ModelShape {
            feature_dims: inputs.feature_dims(),
            relations: inputs.num_relations(),
            hidden: config.hidden_units,
            classes,
            activation: config.activation,
        };
        let layout = Layout::new(&shape);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = vec![F::zero(); layout.total];
        for t in &layout.tensors {
            if t.rows == 1 {
                continue;
            }
            let limit = (6.0 / (t.rows + t.cols) as f64).sqrt();
            for p in &mut params[t.offset..t.offset + t.len()] {
                *p = F::lit(rng.random_range(-limit..limit));
            }
        }
        Ok(Self::from_parts(shape, params, config.seed, config.clone()))
    }

    pub(crate) fn from_parts(shape: ModelShape, params: Vec<F>, seed: u64, config: TrainConfig) -> Self {
        let layout = Layout::new(&shape);
        assert_eq!(params.len(), layout.total, "parameter count does not match shape");
        let n = params.len();
        Self {
            shape,
            layout_tensors: layout.tensors,
            params,
            moment1: vec![F::zero(); n],
            moment2: vec![F::zero(); n],
            step: 0,
            seed,
            config,
        }
    }

    pub fn shape(&self) -> &ModelShape {
        &self.shape
    }

    pub fn tensors(&self) -> &[TensorSpec] {
        &self.layout_tensors
    }

    pub fn params(&self) -> &[F] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [F] {
        &mut self.params
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn optimizer_steps(&self) -> u64 {
        self.step
    }

    pub fn tensor(&self, name: &str) -> Option<DenseMatrix<F>> {
        let t = self.layout_tensors.iter().find(|t| t.name == name)?;
        Some(self.mat(t))
    }

    pub fn set_tensor(&mut self, name: &str, value: &DenseMatrix<F>) -> Result<()> {
        let t = self
            .layout_tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Config(format!("no tensor named {name}")))?
            .clone();
        if (value.rows(), value.cols()) != (t.rows, t.cols) {
            return Err(Error::Dimension(format!(
                "tensor {name} is {}x{}, got {}x{}",
                t.rows,
                t.cols,
                value.rows(),
                value.cols()
            )));
        }
        self.params[t.offset..t.offset + t.len()].copy_from_slice(value.as_slice());
        Ok(())
    }

    fn mat(&self, t: &TensorSpec) -> DenseMatrix<F> {
        DenseMatrix::from_vec(t.rows, t.cols, self.params[t.offset..t.offset + t.len()].to_vec())
    }

    fn mat_id(&self, id: usize) -> DenseMatrix<F> {
        self.mat(&self.layout_tensors[id])
    }

    fn layout(&self) -> Layout {
        Layout::new(&self.shape)
    }

    fn check_inputs(&self, inputs: &GraphInputs<F>) -> Result<()> {
        if inputs.feature_dims() != self.shape.feature_dims || inputs.num_relations() != self.shape.relations {
            return Err(Error::Dimension(format!(
                "model expects feature dims {:?} and {} relations, graph provides {:?} and {}",
                self.shape.feature_dims,
                self.shape.relations,
                inputs.feature_dims(),
                inputs.num_relations()
            )));
        }
        Ok(())
    }

    fn activate(&self, z: &DenseMatrix<F>) -> DenseMatrix<F> {
        match self.shape.activation {
            Activation::Identity => z.clone(),
            Activation::Relu => {
                let mut h = z.clone();
                h.as_mut_slice().iter_mut().for_each(|x| *x = x.max(F::zero()));
                h
            }
        }
    }

    /// `N × C` logits.
    pub fn forward(&self, inputs: &GraphInputs<F>) -> Result<DenseMatrix<F>> {
        Ok(self.forward_cached(inputs)?.logits)
    }

    /// Row-wise softmax of [`Self::forward`].
    pub fn predict_proba(&self, inputs: &GraphInputs<F>) -> Result<DenseMatrix<F>> {
        let logits = self.forward(inputs)?;
        let mut p = DenseMatrix::zeros(logits.rows(), logits.cols());
        for i in 0..logits.rows() {
            softmax_row(logits.row(i), p.row_mut(i));
        }
        Ok(p)
    }

    pub(crate) fn forward_cached(&self, inputs: &GraphInputs<F>) -> Result<ForwardCache<F>> {
        self.check_inputs(inputs)?;
        let layout = self.layout();
        let hdim = self.shape.hidden;
        let mut h0 = DenseMatrix::zeros(inputs.node_count, hdim);
        for (t, nodes) in inputs.type_nodes.iter().enumerate() {
            let proj = inputs.features[t].matmul(&self.mat_id(layout.in_w[t]));
            let bias = self.mat_id(layout.in_b[t]);
            for (r, &v) in nodes.iter().enumerate() {
                for ((o, &p), &b) in h0.row_mut(v).iter_mut().zip(proj.row(r)).zip(bias.as_slice()) {
                    *o = p + b;
                }
            }
        }

        let mut hidden = vec![h0];
        let mut pre = Vec::with_capacity(NUM_CONV_LAYERS);
        let mut messages = Vec::with_capacity(NUM_CONV_LAYERS);
        for ids in &layout.conv {
            let h = hidden.last().expect("input layer");
            let mut z = h.matmul(&self.mat_id(ids.self_w));
            let mut layer_msgs = Vec::with_capacity(self.shape.relations);
            for (r, adj) in inputs.adjacency.iter().enumerate() {
                let m = adj.matmul_dense(h);
                z.add_assign(&m.matmul(&self.mat_id(ids.rel_w + r)));
                layer_msgs.push(m);
            }
            add_row_bias(&mut z, &self.mat_id(ids.bias));
            let next = self.activate(&z);
            pre.push(z);
            messages.push(layer_msgs);
            hidden.push(next);
        }
        let mut logits = hidden.last().expect("conv output").matmul(&self.mat_id(layout.cls_w));
        add_row_bias(&mut logits, &self.mat_id(layout.cls_b));
        Ok(ForwardCache {
            hidden,
            pre,
            messages,
            logits,
        })
    }

    /// Gradient of the loss with respect to every parameter, given
    /// `d loss / d logits`.
    pub(crate) fn backward(&self, inputs: &GraphInputs<F>, cache: &ForwardCache<F>, d_logits: &DenseMatrix<F>) -> Vec<F> {
        let layout = self.layout();
        let mut grad = vec![F::zero(); self.params.len()];
        let top = &cache.hidden[NUM_CONV_LAYERS];
        write_grad(&mut grad, &layout.tensors[layout.cls_w], &top.t_matmul(d_logits));
        write_grad(&mut grad, &layout.tensors[layout.cls_b], &col_sums(d_logits));
        let mut d_h = d_logits.matmul_t(&self.mat_id(layout.cls_w));

        for l in (0..NUM_CONV_LAYERS).rev() {
            let ids = layout.conv[l];
            let mut d_z = d_h;
            if self.shape.activation == Activation::Relu {
                for (d, &z) in d_z.as_mut_slice().iter_mut().zip(cache.pre[l].as_slice()) {
                    if z <= F::zero() {
                        *d = F::zero();
                    }
                }
            }
            let h_in = &cache.hidden[l];
            write_grad(&mut grad, &layout.tensors[ids.self_w], &h_in.t_matmul(&d_z));
            write_grad(&mut grad, &layout.tensors[ids.bias], &col_sums(&d_z));
            let mut d_in = d_z.matmul_t(&self.mat_id(ids.self_w));
            for (r, adj) in inputs.adjacency.iter().enumerate() {
                write_grad(&mut grad, &layout.tensors[ids.rel_w + r], &cache.messages[l][r].t_matmul(&d_z));
                // Â_r is symmetric, so Â_rᵀ · (dZ W_rᵀ) = Â_r · (dZ W_rᵀ).
                d_in.add_assign(&adj.matmul_dense(&d_z.matmul_t(&self.mat_id(ids.rel_w + r))));
            }
            d_h = d_in;
        }

        for (t, nodes) in inputs.type_nodes.iter().enumerate() {
            let mut d_block = DenseMatrix::zeros(nodes.len(), self.shape.hidden);
            for (r, &v) in nodes.iter().enumerate() {
                d_block.row_mut(r).copy_from_slice(d_h.row(v));
            }
            write_grad(&mut grad, &layout.tensors[layout.in_w[t]], &inputs.features[t].t_matmul(&d_block));
            write_grad(&mut grad, &layout.tensors[layout.in_b[t]], &col_sums(&d_block));
        }
        grad
    }
}

fn add_row_bias<F: Scalar>(m: &mut DenseMatrix<F>, bias: &DenseMatrix<F>) {
    for i in 0..m.rows() {
        for (x, &b) in m.row_mut(i).iter_mut().zip(bias.as_slice()) {
            *x = *x + b;
        }
    }
}

fn col_sums<F: Scalar>(m: &DenseMatrix<F>) -> DenseMatrix<F> {
    let mut s = DenseMatrix::zeros(1, m.cols());
    for i in 0..m.rows() {
        for (o, &x) in s.as_mut_slice().iter_mut().zip(m.row(i)) {
            *o = *o + x;
        }
    }
    s
}

fn write_grad<F: Scalar>(grad: &mut [F], t: &TensorSpec, value: &DenseMatrix<F>) {
    debug_assert_eq!((value.rows(), value.cols()), (t.rows, t.cols));
    grad[t.offset..t.offset + t.len()].copy_from_slice(value.as_slice());
}

/// Mean cross-entropy over `(node, class)` targets and its gradient with
/// respect to the logits.
pub fn cross_entropy<F: Scalar>(logits: &DenseMatrix<F>, targets: &[(usize, usize)]) -> (F, DenseMatrix<F>) {
    let mut d = DenseMatrix::zeros(logits.rows(), logits.cols());
    if targets.is_empty() {
        return (F::zero(), d);
    }
    let scale = F::one() / F::from_count(targets.len());
    let mut probs = vec![F::zero(); logits.cols()];
    let mut terms = Vec::with_capacity(targets.len());
    for &(v, y) in targets {
        let row = logits.row(v);
        softmax_row(row, &mut probs);
        let max = row.iter().fold(F::neg_infinity(), |m, &x| m.max(x));
        let lse = max + row.iter().fold(F::zero(), |s, &x| s + (x - max).exp()).ln();
        terms.push(lse - row[y]);
        for (k, (o, &p)) in d.row_mut(v).iter_mut().zip(&probs).enumerate() {
            let onehot = if k == y { F::one() } else { F::zero() };
            *o = *o + (p - onehot) * scale;
        }
    }
    (crate::scalar::pairwise_sum(&terms) * scale, d)
}

/// Argmax class per node.
pub fn predict_classes<F: Scalar>(logits: &DenseMatrix<F>) -> Vec<usize> {
    (0..logits.rows()).map(|i| crate::scalar::argmax(logits.row(i))).collect()
}

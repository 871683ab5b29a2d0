use log::warn;

use crate::error::{Error, Result};
use crate::hetgraph::{HeteroGraph, Split};
use crate::scalar::Scalar;

use super::{cross_entropy, GcnModel, GraphInputs, TrainConfig};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<F> {
    /// Loss evaluated before each update.
    pub losses: Vec<F>,
}

impl<F: Scalar> TrainOutcome<F> {
    pub fn final_loss(&self) -> Option<F> {
        self.losses.last().copied()
    }
}

impl<F: Scalar> GcnModel<F> {
    pub fn reset_optimizer(&mut self) {
        self.moment1.iter_mut().for_each(|m| *m = F::zero());
        self.moment2.iter_mut().for_each(|m| *m = F::zero());
        self.step = 0;
    }

    /// One adaptive-moment update with L2 weight decay folded into the gradient.
    pub(crate) fn adam_step(&mut self, grad: &[F], lr: f64, weight_decay: f64) {
        self.step += 1;
        let (b1, b2) = (F::lit(BETA1), F::lit(BETA2));
        let wd = F::lit(weight_decay);
        let lr = F::lit(lr);
        let eps = F::lit(EPSILON);
        let bias1 = F::one() - b1.powi(self.step as i32);
        let bias2 = F::one() - b2.powi(self.step as i32);
        for i in 0..self.params.len() {
            let g = grad[i] + wd * self.params[i];
            self.moment1[i] = b1 * self.moment1[i] + (F::one() - b1) * g;
            self.moment2[i] = b2 * self.moment2[i] + (F::one() - b2) * g * g;
            let m_hat = self.moment1[i] / bias1;
            let v_hat = self.moment2[i] / bias2;
            self.params[i] = self.params[i] - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }

    /// Loss and parameter gradient for a fixed target set.
    pub fn loss_and_grad(&self, inputs: &GraphInputs<F>, targets: &[(usize, usize)]) -> Result<(F, Vec<F>)> {
        let cache = self.forward_cached(inputs)?;
        let (loss, d_logits) = cross_entropy(&cache.logits, targets);
        Ok((loss, self.backward(inputs, &cache, &d_logits)))
    }

    pub fn loss(&self, inputs: &GraphInputs<F>, targets: &[(usize, usize)]) -> Result<F> {
        let logits = self.forward(inputs)?;
        Ok(cross_entropy(&logits, targets).0)
    }
}

/// Full-batch training on `(node, class)` targets for `epochs` updates.
pub fn train_on<F: Scalar>(
    model: &mut GcnModel<F>,
    inputs: &GraphInputs<F>,
    targets: &[(usize, usize)],
    epochs: usize,
    learning_rate: f64,
    weight_decay: f64,
) -> Result<TrainOutcome<F>> {
    let mut losses = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let (loss, grad) = model.loss_and_grad(inputs, targets)?;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence {
                epoch,
                loss: loss.as_f64(),
            });
        }
        losses.push(loss);
        model.adam_step(&grad, learning_rate, weight_decay);
        if model.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Divergence {
                epoch,
                loss: loss.as_f64(),
            });
        }
    }
    Ok(TrainOutcome { losses })
}

/// Labeled training-split target nodes as `(node, class)` pairs.
pub fn train_targets<F: Scalar>(g: &HeteroGraph<F>) -> Vec<(usize, usize)> {
    g.nodes_in_split(Split::Train)
        .into_iter()
        .map(|v| (v, g.label(v).expect("training nodes are labeled")))
        .collect()
}

/// Supervised pretraining on the training split for `cfg.epochs` updates.
pub fn train_pre<F: Scalar>(
    model: &mut GcnModel<F>,
    g: &HeteroGraph<F>,
    inputs: &GraphInputs<F>,
    cfg: &TrainConfig,
) -> Result<TrainOutcome<F>> {
    let targets = train_targets(g);
    if targets.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    model.reset_optimizer();
    train_on(model, inputs, &targets, cfg.epochs, cfg.learning_rate, cfg.weight_decay)
}

/// Fine-tunes on pseudo-labeled non-target nodes for `cfg.fine_tune_epochs`
/// updates. An empty pseudo-label set leaves the model untouched and
/// returns `None`.
pub fn fine_tune<F: Scalar>(
    model: &mut GcnModel<F>,
    inputs: &GraphInputs<F>,
    pseudo: &[(usize, usize)],
    cfg: &TrainConfig,
) -> Result<Option<TrainOutcome<F>>> {
    if pseudo.is_empty() {
        warn!("no confident pseudo-labels; skipping fine-tuning");
        return Ok(None);
    }
    model.reset_optimizer();
    train_on(model, inputs, pseudo, cfg.fine_tune_epochs, cfg.learning_rate, cfg.weight_decay).map(Some)
}

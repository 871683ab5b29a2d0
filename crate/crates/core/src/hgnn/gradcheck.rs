use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::scalar::Scalar;

use super::{GcnModel, GraphInputs};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-5;

/// Denominator floor for relative error; keeps gradients that are zero up to
/// finite-difference noise from being reported as large relative errors.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub probes: Vec<Probe>,
    pub max_rel_error: f64,
}

/// Compares analytic gradients with central finite differences at
/// `probe_count` distinct parameters chosen by `seed`.
pub fn gradient_check<F: Scalar>(
    model: &GcnModel<F>,
    inputs: &GraphInputs<F>,
    targets: &[(usize, usize)],
    probe_count: usize,
    seed: u64,
) -> Result<GradCheck> {
    let n = model.params.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, probe_count.min(n)).into_vec();
    idx.sort_unstable();
    probe_indices(model, inputs, targets, &idx)
}

/// Same as [`gradient_check`] for explicitly chosen parameter indices.
pub fn probe_indices<F: Scalar>(
    model: &GcnModel<F>,
    inputs: &GraphInputs<F>,
    targets: &[(usize, usize)],
    indices: &[usize],
) -> Result<GradCheck> {
    let (_, grad) = model.loss_and_grad(inputs, targets)?;
    let mut work = model.clone();
    let h = F::lit(FD_STEP);
    let mut probes = Vec::with_capacity(indices.len());
    for &i in indices {
        let orig = work.params[i];
        work.params[i] = orig + h;
        let up = work.loss(inputs, targets)?;
        work.params[i] = orig - h;
        let down = work.loss(inputs, targets)?;
        work.params[i] = orig;
        let numeric = ((up - down) / (h + h)).as_f64();
        let analytic = grad[i].as_f64();
        let rel_error = (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(REL_ERROR_FLOOR);
        probes.push(Probe {
            index: i,
            analytic,
            numeric,
            rel_error,
        });
    }
    let max_rel_error = probes.iter().map(|p| p.rel_error).fold(0.0, f64::max);
    Ok(GradCheck { probes, max_rel_error })
}

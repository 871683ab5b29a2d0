//! Davies–Bouldin complexity of class representations and the closed-form
//! lower bound `C_lower = C0 / (2 q_s + 2 q_c - 2)^2` for a two-class
//! mixture aggregated by one linear layer, with a Monte-Carlo check.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Intra/inter-class distances and both forms of the index.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityReport<F> {
    /// `S_i`: p-th root of the mean p-th power distance to the centroid.
    pub intra: Vec<F>,
    /// `T_i^2`: mean squared Euclidean distance to the centroid.
    pub intra_sq: Vec<F>,
    /// `M_ij`: p-norm distance between centroids.
    pub inter: DenseMatrix<F>,
    pub db_index: F,
    pub squared_form: F,
}

fn centroid<F: Scalar>(x: &DenseMatrix<F>) -> Vec<F> {
    let mut mu = vec![F::zero(); x.cols()];
    for i in 0..x.rows() {
        for (m, &v) in mu.iter_mut().zip(x.row(i)) {
            *m = *m + v;
        }
    }
    let n = F::from_count(x.rows());
    mu.iter_mut().for_each(|m| *m = *m / n);
    mu
}

fn p_norm<F: Scalar>(a: &[F], b: &[F], p: F) -> F {
    a.iter()
        .zip(b)
        .fold(F::zero(), |s, (&x, &y)| s + (x - y).abs().powf(p))
        .powf(F::one() / p)
}

/// Computes every quantity of the Davies–Bouldin index for per-class
/// representation sets (one row per instance).
pub fn complexity<F: Scalar>(classes: &[DenseMatrix<F>], p: f64) -> Result<ComplexityReport<F>> {
    let k = classes.len();
    if k < 2 {
        return Err(Error::Domain(format!("need at least 2 classes, got {k}")));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Domain(format!("norm order {p} must be a finite value >= 1")));
    }
    let dim = classes[0].cols();
    if let Some((i, _)) = classes.iter().enumerate().find(|(_, c)| c.rows() == 0 || c.cols() != dim) {
        return Err(Error::Dimension(format!("class {i} is empty or has the wrong width")));
    }
    let pf = F::lit(p);
    let two = F::lit(2.0);
    let mus: Vec<Vec<F>> = classes.iter().map(centroid).collect();
    let mut intra = Vec::with_capacity(k);
    let mut intra_sq = Vec::with_capacity(k);
    for (x, mu) in classes.iter().zip(&mus) {
        let n = F::from_count(x.rows());
        let (mut sp, mut s2) = (F::zero(), F::zero());
        for i in 0..x.rows() {
            sp = sp + p_norm(x.row(i), mu, pf).powf(pf);
            s2 = s2 + p_norm(x.row(i), mu, two).powi(2);
        }
        intra.push((sp / n).powf(F::one() / pf));
        intra_sq.push(s2 / n);
    }
    let mut inter = DenseMatrix::zeros(k, k);
    for i in 0..k {
        for j in i + 1..k {
            let m = p_norm(&mus[i], &mus[j], pf);
            if m == F::zero() {
                return Err(Error::CoincidentCentroids(i, j));
            }
            inter[(i, j)] = m;
            inter[(j, i)] = m;
        }
    }
    let (mut db, mut sq) = (F::zero(), F::zero());
    for i in 0..k {
        let (mut best, mut best_sq) = (F::neg_infinity(), F::neg_infinity());
        for j in (0..k).filter(|&j| j != i) {
            best = best.max((intra[i] + intra[j]) / inter[(i, j)]);
            let m2 = p_norm(&mus[i], &mus[j], two).powi(2);
            best_sq = best_sq.max((intra_sq[i] + intra_sq[j]) / m2);
        }
        db = db + best;
        sq = sq + best_sq;
    }
    let kf = F::from_count(k);
    Ok(ComplexityReport {
        intra,
        intra_sq,
        inter,
        db_index: db / kf,
        squared_form: sq / kf,
    })
}

pub fn db_index<F: Scalar>(classes: &[DenseMatrix<F>], p: f64) -> Result<F> {
    Ok(complexity(classes, p)?.db_index)
}

/// `(1/k) Σ_t max_{s≠t} (T_t² + T_s²) / M_ts²` with Euclidean distances.
pub fn db_index_squared<F: Scalar>(classes: &[DenseMatrix<F>]) -> Result<F> {
    Ok(complexity(classes, 2.0)?.squared_form)
}

/// Two Gaussian classes `X_i ~ N(mu_i, sigma_i² I)` aggregated by `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureSpec {
    pub mu_x0: Vec<f64>,
    pub mu_x1: Vec<f64>,
    /// Per-class standard deviation.
    pub sigma: [f64; 2],
    /// Mixing weight of non-target means; does not enter the bound.
    pub lambda: f64,
    pub q_s: f64,
    pub q_c: f64,
    /// `out × dim` aggregation weight, row-major.
    pub w: Vec<Vec<f64>>,
    pub samples: usize,
}

impl MixtureSpec {
    /// Unit-variance classes at `±e_1` in `dim` dimensions with `W = I`.
    pub fn isotropic(dim: usize, q_s: f64, q_c: f64) -> Self {
        let mut mu_x0 = vec![0.0; dim];
        let mut mu_x1 = vec![0.0; dim];
        mu_x0[0] = 1.0;
        mu_x1[0] = -1.0;
        let w = (0..dim).map(|i| (0..dim).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        Self {
            mu_x0,
            mu_x1,
            sigma: [1.0, 1.0],
            lambda: 0.5,
            q_s,
            q_c,
            w,
            samples: 100_000,
        }
    }

    pub fn w_matrix(&self) -> DenseMatrix<f64> {
        DenseMatrix::from_rows(&self.w)
    }

    fn check_shape(&self) -> Result<()> {
        let d = self.mu_x0.len();
        if d == 0 || self.mu_x1.len() != d || self.w.is_empty() || self.w.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension("means and W columns must share a positive dimension".into()));
        }
        if self.sigma.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) || !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Domain("sigma must be non-negative and lambda in [0, 1]".into()));
        }
        if ![self.q_s, self.q_c].iter().all(|q| (0.0..=1.0).contains(q)) {
            return Err(Error::Domain(format!("q_s={} and q_c={} must lie in [0, 1]", self.q_s, self.q_c)));
        }
        Ok(())
    }

    /// `2 q_s + 2 q_c - 2`, positive on the valid domain.
    pub fn gap(&self) -> Result<f64> {
        self.check_shape()?;
        if self.q_s + self.q_c <= 1.0 {
            return Err(Error::Domain(format!(
                "q_s + q_c = {} must exceed 1 for the bound to exist",
                self.q_s + self.q_c
            )));
        }
        Ok(2.0 * self.q_s + 2.0 * self.q_c - 2.0)
    }

    /// `C0 = 2 (σ0² + σ1²) tr(WᵀW) / ‖W(μ0 − μ1)‖²`.
    pub fn c0(&self) -> Result<f64> {
        self.check_shape()?;
        let w = self.w_matrix();
        let trace: f64 = w.as_slice().iter().map(|x| x * x).sum();
        let diff: Vec<f64> = self.mu_x0.iter().zip(&self.mu_x1).map(|(a, b)| a - b).collect();
        let sep: f64 = (0..w.rows())
            .map(|i| w.row(i).iter().zip(&diff).map(|(a, b)| a * b).sum::<f64>().powi(2))
            .sum();
        if sep == 0.0 {
            return Err(Error::CoincidentCentroids(0, 1));
        }
        let [s0, s1] = self.sigma;
        Ok(2.0 * (s0 * s0 + s1 * s1) * trace / sep)
    }
}

/// `(C0, C_lower)`.
pub fn lower_bound(spec: &MixtureSpec) -> Result<(f64, f64)> {
    let gap = spec.gap()?;
    let c0 = spec.c0()?;
    Ok((c0, c0 / (gap * gap)))
}

/// `∂C_lower/∂q_c = -4 C0 / (2 q_s + 2 q_c - 2)^3`.
pub fn lower_bound_derivative(spec: &MixtureSpec) -> Result<f64> {
    let gap = spec.gap()?;
    Ok(-4.0 * spec.c0()? / gap.powi(3))
}

fn sample_class(mu: &[f64], sigma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    mu.iter().map(|&m| m + sigma * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Monte-Carlo estimate of `C0` from `samples` draws of each class.
pub fn c0_monte_carlo(spec: &MixtureSpec, samples: usize, seed: u64) -> Result<f64> {
    spec.check_shape()?;
    let w = spec.w_matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut quad = 0.0;
    for _ in 0..samples {
        for (mu, s) in [(&spec.mu_x0, spec.sigma[0]), (&spec.mu_x1, spec.sigma[1])] {
            let x = sample_class(mu, s, &mut rng);
            let dx: Vec<f64> = x.iter().zip(mu.iter()).map(|(a, b)| a - b).collect();
            quad += (0..w.rows())
                .map(|i| w.row(i).iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>().powi(2))
                .sum::<f64>();
        }
    }
    let diff: Vec<f64> = spec.mu_x0.iter().zip(&spec.mu_x1).map(|(a, b)| a - b).collect();
    let sep: f64 = (0..w.rows())
        .map(|i| w.row(i).iter().zip(&diff).map(|(a, b)| a * b).sum::<f64>().powi(2))
        .sum();
    if sep == 0.0 {
        return Err(Error::CoincidentCentroids(0, 1));
    }
    Ok(2.0 * quad / samples as f64 / sep)
}

/// Draws aggregated representations of both target classes:
/// `O_0 = W((q_s+q_c) X_0 + (2-q_s-q_c) X_1)` and the mirror for `O_1`.
pub fn sample_representations(spec: &MixtureSpec, samples: usize, rng: &mut ChaCha8Rng) -> Result<[DenseMatrix<f64>; 2]> {
    spec.check_shape()?;
    let w = spec.w_matrix();
    let a = spec.q_s + spec.q_c;
    let b = 2.0 - a;
    let mut o = [DenseMatrix::zeros(samples, w.rows()), DenseMatrix::zeros(samples, w.rows())];
    for t in 0..samples {
        let x0 = sample_class(&spec.mu_x0, spec.sigma[0], rng);
        let x1 = sample_class(&spec.mu_x1, spec.sigma[1], rng);
        for (cls, (p, q)) in [(&x0, &x1), (&x1, &x0)].into_iter().enumerate() {
            let mix: Vec<f64> = p.iter().zip(q.iter()).map(|(u, v)| a * u + b * v).collect();
            for i in 0..w.rows() {
                o[cls][(t, i)] = w.row(i).iter().zip(&mix).map(|(u, v)| u * v).sum();
            }
        }
    }
    Ok(o)
}

/// Batches used for the Monte-Carlo standard error.
pub const MC_BATCHES: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub enum SweepOutcome {
    Point {
        /// Empirical squared Davies–Bouldin index.
        db_index: f64,
        /// Standard error of `db_index` from batch means.
        db_std_error: f64,
        c_lower: f64,
        c0: f64,
    },
    DomainError,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub q_c: f64,
    pub outcome: SweepOutcome,
}

/// For each `q_c`, samples `template.samples` aggregated representations per
/// class and compares their squared index to the bound. Points outside the
/// bound's domain are flagged rather than failing the sweep.
pub fn empirical_generalization_sweep(template: &MixtureSpec, q_c_grid: &[f64], seed: u64) -> Result<Vec<SweepPoint>> {
    template.check_shape()?;
    if template.samples < 2 * MC_BATCHES {
        return Err(Error::Config(format!("need at least {} samples", 2 * MC_BATCHES)));
    }
    q_c_grid
        .par_iter()
        .enumerate()
        .map(|(i, &q_c)| {
            let spec = MixtureSpec { q_c, ..template.clone() };
            let (c0, c_lower) = match lower_bound(&spec) {
                Ok(v) => v,
                Err(Error::Domain(_)) => return Ok(SweepPoint { q_c, outcome: SweepOutcome::DomainError }),
                Err(e) => return Err(e),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let [o0, o1] = sample_representations(&spec, spec.samples, &mut rng)?;
            let db_index = db_index_squared(&[o0.clone(), o1.clone()])?;
            let per = spec.samples / MC_BATCHES;
            let batch: Vec<f64> = (0..MC_BATCHES)
                .map(|b| {
                    let take = |o: &DenseMatrix<f64>| {
                        DenseMatrix::from_vec(per, o.cols(), o.as_slice()[b * per * o.cols()..(b + 1) * per * o.cols()].to_vec())
                    };
                    db_index_squared(&[take(&o0), take(&o1)])
                })
                .collect::<Result<_>>()?;
            let m = batch.iter().sum::<f64>() / MC_BATCHES as f64;
            let var = batch.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (MC_BATCHES - 1) as f64;
            Ok(SweepPoint {
                q_c,
                outcome: SweepOutcome::Point {
                    db_index,
                    db_std_error: (var / MC_BATCHES as f64).sqrt(),
                    c_lower,
                    c0,
                },
            })
        })
        .collect()
}

/// `q_c,db_index,c_lower,c0`; out-of-domain rows carry `domain_error`.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("q_c,db_index,c_lower,c0\n");
    for p in points {
        match &p.outcome {
            SweepOutcome::Point { db_index, c_lower, c0, .. } => {
                let _ = writeln!(out, "{},{db_index},{c_lower},{c0}", p.q_c);
            }
            SweepOutcome::DomainError => {
                let _ = writeln!(out, "{},domain_error,domain_error,domain_error", p.q_c);
            }
        }
    }
    out
}

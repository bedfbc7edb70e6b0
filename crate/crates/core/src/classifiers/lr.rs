use rayon::prelude::*;

use crate::classifiers::{Classifier, Distribution};
use crate::error::{Error, Result};
use crate::features::{LabeledDataset, SparseCountVector};

const ARMIJO_SLOPE: f64 = 1e-4;
const STEP_SHRINK: f64 = 0.5;
const MIN_STEP: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrConfig {
    /// L2 penalty on the weights (not the intercept).
    pub l2_strength: f64,
    pub max_iters: usize,
    /// Stop once the gradient norm falls below this.
    pub tolerance: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            l2_strength: 1e-3,
            max_iters: 200,
            tolerance: 1e-6,
        }
    }
}

impl LrConfig {
    fn validate(&self) -> Result<()> {
        if !(self.l2_strength >= 0.0 && self.l2_strength.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "l2 strength must be >= 0, got {}",
                self.l2_strength
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        Ok(())
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// One class-vs-rest problem: mean logistic loss plus `(l2/2)·‖w‖²`.
pub struct BinaryProblem<'a> {
    rows: &'a [SparseCountVector],
    targets: Vec<f64>,
    l2: f64,
    dimension: usize,
}

impl<'a> BinaryProblem<'a> {
    pub fn new(data: &'a LabeledDataset, positive_class: usize, l2: f64) -> Self {
        BinaryProblem {
            rows: data.rows(),
            targets: data
                .labels()
                .iter()
                .map(|&l| if l == positive_class { 1.0 } else { 0.0 })
                .collect(),
            l2,
            dimension: data.dimension(),
        }
    }

    fn margins(&self, w: &[f64], b: f64) -> Vec<f64> {
        self.rows.iter().map(|x| x.dot(w) + b).collect()
    }

    fn loss_from_margins(&self, z: &[f64]) -> f64 {
        let sum: f64 = z
            .iter()
            .zip(&self.targets)
            .map(|(&z, &y)| softplus(z) - y * z)
            .sum();
        sum / self.rows.len() as f64
    }

    pub fn objective(&self, w: &[f64], b: f64) -> f64 {
        let reg = 0.5 * self.l2 * w.iter().map(|x| x * x).sum::<f64>();
        self.loss_from_margins(&self.margins(w, b)) + reg
    }

    fn gradient_from_margins(&self, w: &[f64], z: &[f64]) -> (Vec<f64>, f64) {
        let n = self.rows.len() as f64;
        let mut g: Vec<f64> = w.iter().map(|&wi| self.l2 * wi).collect();
        let mut gb = 0.0;
        for ((x, &z), &y) in self.rows.iter().zip(z).zip(&self.targets) {
            let r = (sigmoid(z) - y) / n;
            gb += r;
            for &(f, v) in x.entries() {
                g[f] += r * v;
            }
        }
        (g, gb)
    }

    /// Gradient with respect to `(w, b)`.
    pub fn gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        self.gradient_from_margins(w, &self.margins(w, b))
    }

    fn initial_intercept(&self) -> f64 {
        let p = self.targets.iter().sum::<f64>() / self.targets.len() as f64;
        if p > 0.0 && p < 1.0 {
            (p / (1.0 - p)).ln()
        } else {
            0.0
        }
    }

    /// Gradient descent with Armijo backtracking from zero weights and the
    /// base-rate intercept.
    fn solve(&self, cfg: &LrConfig) -> (Vec<f64>, f64) {
        let mut w = vec![0.0; self.dimension];
        let mut b = self.initial_intercept();
        let mut z = self.margins(&w, b);
        let mut w_sq = 0.0;
        let mut f = self.loss_from_margins(&z);
        let mut step = 1.0;

        for _ in 0..cfg.max_iters {
            let (g, gb) = self.gradient_from_margins(&w, &z);
            let g_sq = g.iter().map(|x| x * x).sum::<f64>() + gb * gb;
            if g_sq.sqrt() < cfg.tolerance {
                break;
            }
            // Margin change per unit step, and pieces of ‖w - t·g‖².
            let dz: Vec<f64> = self.rows.iter().map(|x| x.dot(&g) + gb).collect();
            let w_dot_g: f64 = w.iter().zip(&g).map(|(a, b)| a * b).sum();
            let gw_sq = g_sq - gb * gb;

            let mut t = step;
            let accepted = loop {
                let trial_z: Vec<f64> = z.iter().zip(&dz).map(|(z, d)| z - t * d).collect();
                let trial_w_sq = w_sq - 2.0 * t * w_dot_g + t * t * gw_sq;
                let trial_f = self.loss_from_margins(&trial_z) + 0.5 * self.l2 * trial_w_sq;
                if trial_f <= f - ARMIJO_SLOPE * t * g_sq {
                    break Some((trial_z, trial_f));
                }
                t *= STEP_SHRINK;
                if t < MIN_STEP {
                    break None;
                }
            };
            let Some((new_z, new_f)) = accepted else {
                break;
            };
            for (wi, gi) in w.iter_mut().zip(&g) {
                *wi -= t * gi;
            }
            b -= t * gb;
            // Recompute exactly to avoid drift in the incremental pieces.
            w_sq = w.iter().map(|x| x * x).sum();
            z = new_z;
            f = new_f;
            step = t * 2.0;
        }
        (w, b)
    }
}

/// One-vs-rest logistic regression.
#[derive(Debug, Clone, PartialEq)]
pub struct LrModel {
    weights: Vec<Vec<f64>>,
    intercepts: Vec<f64>,
    dimension: usize,
}

/// Fits one regularized binary problem per class, in parallel.
pub fn lr_fit(data: &LabeledDataset, cfg: &LrConfig) -> Result<LrModel> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("logistic regression training set".into()));
    }
    let present = data.class_counts().iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::InvalidArgument(
            "logistic regression needs at least two distinct labels".into(),
        ));
    }
    let (weights, intercepts) = (0..data.num_classes())
        .into_par_iter()
        .map(|c| BinaryProblem::new(data, c, cfg.l2_strength).solve(cfg))
        .unzip();
    Ok(LrModel {
        weights,
        intercepts,
        dimension: data.dimension(),
    })
}

impl LrModel {
    pub fn from_parts(weights: Vec<Vec<f64>>, intercepts: Vec<f64>, dimension: usize) -> Result<Self> {
        if weights.is_empty() || weights.len() != intercepts.len() {
            return Err(Error::Malformed("logistic regression class count mismatch".into()));
        }
        if weights.iter().any(|w| w.len() != dimension) {
            return Err(Error::Malformed("logistic regression weight dimension mismatch".into()));
        }
        Ok(LrModel {
            weights,
            intercepts,
            dimension,
        })
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    /// Per-class sigmoid scores before normalization.
    pub fn scores(&self, x: &SparseCountVector) -> Result<Vec<f64>> {
        x.check_dimension(self.dimension)?;
        Ok(self
            .weights
            .iter()
            .zip(&self.intercepts)
            .map(|(w, b)| sigmoid(x.dot(w) + b))
            .collect())
    }
}

impl Classifier for LrModel {
    fn num_classes(&self) -> usize {
        self.weights.len()
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    /// Normalized OvR scores, computed from `log σ(z) = -softplus(-z)` so
    /// that very negative margins cannot underflow the sum to zero.
    fn predict_proba(&self, x: &SparseCountVector) -> Result<Distribution> {
        x.check_dimension(self.dimension)?;
        let log_scores: Vec<f64> = self
            .weights
            .iter()
            .zip(&self.intercepts)
            .map(|(w, b)| -softplus(-(x.dot(w) + b)))
            .collect();
        Ok(Distribution::from_log_scores(&log_scores))
    }
}

use crate::classifiers::{Classifier, Distribution};
use crate::error::{Error, Result};
use crate::features::{LabeledDataset, SparseCountVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MnbConfig {
    /// Additive smoothing added to every feature count.
    pub alpha: f64,
}

impl Default for MnbConfig {
    fn default() -> Self {
        MnbConfig { alpha: 0.5 }
    }
}

/// Multinomial naive Bayes with additive smoothing.
#[derive(Debug, Clone, PartialEq)]
pub struct MnbModel {
    log_priors: Vec<f64>,
    /// `log_likelihoods[c][f] = log P(f | c)`
    log_likelihoods: Vec<Vec<f64>>,
    dimension: usize,
}

/// Fits class priors and smoothed feature likelihoods. Counts may be
/// fractional; a class without rows gets prior 0 (log prior -inf).
pub fn mnb_fit(data: &LabeledDataset, cfg: &MnbConfig) -> Result<MnbModel> {
    if !(cfg.alpha > 0.0 && cfg.alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "smoothing alpha must be positive, got {}",
            cfg.alpha
        )));
    }
    if data.is_empty() {
        return Err(Error::Empty("naive Bayes training set".into()));
    }
    let k = data.num_classes();
    let v = data.dimension();
    let mut feature_counts = vec![vec![0.0; v]; k];
    for (row, &label) in data.rows().iter().zip(data.labels()) {
        for &(f, x) in row.entries() {
            feature_counts[label][f] += x;
        }
    }
    let n = data.len() as f64;
    let log_priors = data
        .class_counts()
        .iter()
        .map(|&c| (c as f64 / n).ln())
        .collect();
    let log_likelihoods = feature_counts
        .into_iter()
        .map(|counts| {
            let denom = counts.iter().sum::<f64>() + cfg.alpha * v as f64;
            counts
                .into_iter()
                .map(|c| ((c + cfg.alpha) / denom).ln())
                .collect()
        })
        .collect();
    Ok(MnbModel {
        log_priors,
        log_likelihoods,
        dimension: v,
    })
}

impl MnbModel {
    pub fn from_parts(log_priors: Vec<f64>, log_likelihoods: Vec<Vec<f64>>, dimension: usize) -> Result<Self> {
        if log_priors.is_empty() || log_priors.len() != log_likelihoods.len() {
            return Err(Error::Malformed("naive Bayes class count mismatch".into()));
        }
        if !log_priors.iter().any(|p| p.is_finite()) {
            return Err(Error::Malformed("naive Bayes has no class with a finite prior".into()));
        }
        if log_likelihoods.iter().any(|row| row.len() != dimension) {
            return Err(Error::Malformed("naive Bayes likelihood dimension mismatch".into()));
        }
        Ok(MnbModel {
            log_priors,
            log_likelihoods,
            dimension,
        })
    }

    pub fn log_priors(&self) -> &[f64] {
        &self.log_priors
    }

    pub fn log_likelihoods(&self) -> &[Vec<f64>] {
        &self.log_likelihoods
    }
}

impl Classifier for MnbModel {
    fn num_classes(&self) -> usize {
        self.log_priors.len()
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn predict_proba(&self, x: &SparseCountVector) -> Result<Distribution> {
        x.check_dimension(self.dimension)?;
        let scores: Vec<f64> = self
            .log_priors
            .iter()
            .zip(&self.log_likelihoods)
            .map(|(&prior, ll)| {
                if prior == f64::NEG_INFINITY {
                    prior
                } else {
                    prior + x.dot(ll)
                }
            })
            .collect();
        Ok(Distribution::from_log_scores(&scores))
    }
}

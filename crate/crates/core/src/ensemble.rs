//! Weighted soft voting: a base ensemble over (MNB, LR, RF) and a meta
//! ensemble over two base ensembles, one trained on the original data and
//! one on SMOTE-resampled data.

use std::str::FromStr;

use crate::classifiers::{
    lr_fit, mnb_fit, rf_fit, Classifier, Distribution, LrConfig, LrModel, MnbConfig, MnbModel, RfConfig,
    RfModel,
};
use crate::error::{Error, Result};
use crate::features::{LabeledDataset, SparseCountVector};
use crate::resample::{smote, SmoteConfig};

/// Combines member distributions as `Σ ŵ_i·P_i` with `ŵ = w / Σw`.
///
/// Each combined probability is clamped into the range spanned by the
/// members, which the exact weighted mean always satisfies.
pub fn vote_proba(weights: &[f64], member_probs: &[Distribution]) -> Result<Distribution> {
    if weights.is_empty() || weights.len() != member_probs.len() {
        return Err(Error::InvalidArgument(format!(
            "{} weights for {} member distributions",
            weights.len(),
            member_probs.len()
        )));
    }
    validate_weights(weights)?;
    let k = member_probs[0].len();
    if let Some(d) = member_probs.iter().find(|d| d.len() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: d.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    let combined = (0..k)
        .map(|j| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut acc = 0.0;
            for (w, d) in weights.iter().zip(member_probs) {
                let p = d.probs()[j];
                lo = lo.min(p);
                hi = hi.max(p);
                acc += (w / total) * p;
            }
            acc.clamp(lo, hi)
        })
        .collect();
    Ok(Distribution::from_probs_unchecked(combined))
}

fn validate_weights(weights: &[f64]) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "ensemble weights must be positive and finite, got {w}"
        )));
    }
    Ok(())
}

/// Any trained classifier in the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Mnb(MnbModel),
    Lr(LrModel),
    Rf(RfModel),
    Ensemble(EnsembleSpec),
    Meta(Box<MetaSpec>),
}

impl Classifier for TrainedModel {
    fn num_classes(&self) -> usize {
        match self {
            TrainedModel::Mnb(m) => m.num_classes(),
            TrainedModel::Lr(m) => m.num_classes(),
            TrainedModel::Rf(m) => m.num_classes(),
            TrainedModel::Ensemble(m) => m.num_classes(),
            TrainedModel::Meta(m) => m.num_classes(),
        }
    }

    fn dimension(&self) -> usize {
        match self {
            TrainedModel::Mnb(m) => m.dimension(),
            TrainedModel::Lr(m) => m.dimension(),
            TrainedModel::Rf(m) => m.dimension(),
            TrainedModel::Ensemble(m) => m.dimension(),
            TrainedModel::Meta(m) => m.dimension(),
        }
    }

    fn predict_proba(&self, x: &SparseCountVector) -> Result<Distribution> {
        match self {
            TrainedModel::Mnb(m) => m.predict_proba(x),
            TrainedModel::Lr(m) => m.predict_proba(x),
            TrainedModel::Rf(m) => m.predict_proba(x),
            TrainedModel::Ensemble(m) => m.predict_proba(x),
            TrainedModel::Meta(m) => m.predict_proba(x),
        }
    }
}

/// Members with positive voting weights. All members share `k` and `V`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    members: Vec<TrainedModel>,
    weights: Vec<f64>,
}

impl EnsembleSpec {
    pub fn new(members: Vec<TrainedModel>, weights: Vec<f64>) -> Result<Self> {
        if members.is_empty() || members.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} weights for {} members",
                weights.len(),
                members.len()
            )));
        }
        validate_weights(&weights)?;
        let (k, v) = (members[0].num_classes(), members[0].dimension());
        for m in &members[1..] {
            if m.num_classes() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    actual: m.num_classes(),
                });
            }
            if m.dimension() != v {
                return Err(Error::DimensionMismatch {
                    expected: v,
                    actual: m.dimension(),
                });
            }
        }
        Ok(EnsembleSpec { members, weights })
    }

    pub fn members(&self) -> &[TrainedModel] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Per-member distributions for one input, in member order.
    pub fn member_probas(&self, x: &SparseCountVector) -> Result<Vec<Distribution>> {
        self.members.iter().map(|m| m.predict_proba(x)).collect()
    }
}

impl Classifier for EnsembleSpec {
    fn num_classes(&self) -> usize {
        self.members[0].num_classes()
    }

    fn dimension(&self) -> usize {
        self.members[0].dimension()
    }

    fn predict_proba(&self, x: &SparseCountVector) -> Result<Distribution> {
        vote_proba(&self.weights, &self.member_probas(x)?)
    }
}

/// Soft vote of the original-data ensemble and the resampled-data ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct MetaSpec {
    ensemble1: EnsembleSpec,
    ensemble2: EnsembleSpec,
    weights: [f64; 2],
}

impl MetaSpec {
    pub fn new(ensemble1: EnsembleSpec, ensemble2: EnsembleSpec, weights: [f64; 2]) -> Result<Self> {
        validate_weights(&weights)?;
        if ensemble1.num_classes() != ensemble2.num_classes() {
            return Err(Error::DimensionMismatch {
                expected: ensemble1.num_classes(),
                actual: ensemble2.num_classes(),
            });
        }
        if ensemble1.dimension() != ensemble2.dimension() {
            return Err(Error::DimensionMismatch {
                expected: ensemble1.dimension(),
                actual: ensemble2.dimension(),
            });
        }
        Ok(MetaSpec {
            ensemble1,
            ensemble2,
            weights,
        })
    }

    pub fn ensemble1(&self) -> &EnsembleSpec {
        &self.ensemble1
    }

    pub fn ensemble2(&self) -> &EnsembleSpec {
        &self.ensemble2
    }

    pub fn weights(&self) -> [f64; 2] {
        self.weights
    }
}

impl Classifier for MetaSpec {
    fn num_classes(&self) -> usize {
        self.ensemble1.num_classes()
    }

    fn dimension(&self) -> usize {
        self.ensemble1.dimension()
    }

    fn predict_proba(&self, x: &SparseCountVector) -> Result<Distribution> {
        let members = [self.ensemble1.predict_proba(x)?, self.ensemble2.predict_proba(x)?];
        vote_proba(&self.weights, &members)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassifierConfigs {
    pub mnb: MnbConfig,
    pub lr: LrConfig,
    pub rf: RfConfig,
}

/// Weight presets, member order (MNB, LR, RF) for the base level and
/// (Ensemble1, Ensemble2) for the meta level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Language {
    English,
    Spanish,
}

impl Language {
    pub fn base_weights(self) -> [f64; 3] {
        match self {
            Language::English => [1.5, 6.0, 1.0],
            Language::Spanish => [1.1, 1.0, 1.0],
        }
    }

    pub fn meta_weights(self) -> [f64; 2] {
        match self {
            Language::English => [4.0, 1.0],
            Language::Spanish => [3.0, 1.0],
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Language::English => "en",
            Language::Spanish => "es",
        }
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "en" => Ok(Language::English),
            "es" => Ok(Language::Spanish),
            other => Err(Error::InvalidArgument(format!(
                "unknown language {other:?} (expected en or es)"
            ))),
        }
    }
}

/// Fits MNB, LR and RF on `data` and wraps them with `weights`.
pub fn build_base_ensemble(
    data: &LabeledDataset,
    weights: [f64; 3],
    cfgs: &ClassifierConfigs,
) -> Result<EnsembleSpec> {
    validate_weights(&weights)?;
    let members = vec![
        TrainedModel::Mnb(mnb_fit(data, &cfgs.mnb)?),
        TrainedModel::Lr(lr_fit(data, &cfgs.lr)?),
        TrainedModel::Rf(rf_fit(data, &cfgs.rf)?),
    ];
    EnsembleSpec::new(members, weights.to_vec())
}

/// Ensemble1 on `data`, Ensemble2 on `smote(data)`, combined with
/// `meta_weights`. Both base ensembles use the same configs and weights.
pub fn build_meta(
    data: &LabeledDataset,
    smote_cfg: &SmoteConfig,
    meta_weights: [f64; 2],
    base_weights: [f64; 3],
    cfgs: &ClassifierConfigs,
) -> Result<MetaSpec> {
    validate_weights(&meta_weights)?;
    let ensemble1 = build_base_ensemble(data, base_weights, cfgs)?;
    let resampled = smote(data, smote_cfg)?;
    let ensemble2 = build_base_ensemble(&resampled, base_weights, cfgs)?;
    MetaSpec::new(ensemble1, ensemble2, meta_weights)
}

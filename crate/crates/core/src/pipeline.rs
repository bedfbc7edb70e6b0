//! End-to-end training and prediction over raw tweet text.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::classifiers::{Classifier, Distribution};
use crate::corpus::RawCorpus;
use crate::ensemble::{build_meta, ClassifierConfigs, EnsembleSpec, Language, MetaSpec};
use crate::error::{Error, Result};
use crate::features::{vectorize, vectorize_corpus, FeatureConfig, SparseCountVector, Vocabulary};
use crate::preprocess::{text_to_ngrams, AsciiPolicy};
use crate::resample::{ResamplePlan, SmoteConfig};

/// Everything needed to train a meta ensemble from a corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub language: Language,
    pub ascii_policy: AsciiPolicy,
    pub features: FeatureConfig,
    pub classifiers: ClassifierConfigs,
    pub base_weights: [f64; 3],
    pub meta_weights: [f64; 2],
    pub smote: SmoteConfig,
}

impl TrainConfig {
    /// Library defaults with the language's weight presets.
    pub fn for_language(language: Language) -> Self {
        TrainConfig {
            language,
            ascii_policy: AsciiPolicy::KeepMost,
            features: FeatureConfig::default(),
            classifiers: ClassifierConfigs::default(),
            base_weights: language.base_weights(),
            meta_weights: language.meta_weights(),
            smote: SmoteConfig::default(),
        }
    }

    /// Seeds both the random forests and SMOTE.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.classifiers.rf.seed = seed;
        self.smote.seed = seed;
        self
    }

    pub fn seed(&self) -> u64 {
        self.classifiers.rf.seed
    }
}

/// Which trained model answers a prediction. The single classifiers are
/// the members of Ensemble1, i.e. trained on the original data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selector {
    Mnb,
    Lr,
    Rf,
    Ensemble1,
    Ensemble2,
    Meta,
}

impl Selector {
    pub const ALL: [Selector; 6] = [
        Selector::Mnb,
        Selector::Lr,
        Selector::Rf,
        Selector::Ensemble1,
        Selector::Ensemble2,
        Selector::Meta,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Selector::Mnb => "mnb",
            Selector::Lr => "lr",
            Selector::Rf => "rf",
            Selector::Ensemble1 => "ensemble1",
            Selector::Ensemble2 => "ensemble2",
            Selector::Meta => "meta",
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Selector::ALL
            .into_iter()
            .find(|sel| sel.as_str() == s)
            .ok_or_else(|| {
                let valid: Vec<&str> = Selector::ALL.iter().map(|s| s.as_str()).collect();
                Error::InvalidArgument(format!(
                    "unknown selector {s:?}; valid options: {}",
                    valid.join(", ")
                ))
            })
    }
}

/// Facts about a training run, stored alongside the model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub train_rows: u64,
    pub resampled_rows: u64,
    pub num_classes: u32,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

/// A trained meta ensemble together with the text pipeline that feeds it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPipeline {
    pub language: Language,
    pub ascii_policy: AsciiPolicy,
    pub vocabulary: Vocabulary,
    pub meta: MetaSpec,
    pub metadata: TrainingMetadata,
}

impl TrainedPipeline {
    pub fn ensemble(&self, which: Selector) -> Option<&EnsembleSpec> {
        match which {
            Selector::Ensemble1 => Some(self.meta.ensemble1()),
            Selector::Ensemble2 => Some(self.meta.ensemble2()),
            _ => None,
        }
    }

    pub fn model(&self, which: Selector) -> &(dyn Classifier + Sync) {
        let members = self.meta.ensemble1().members();
        match which {
            Selector::Mnb => &members[0],
            Selector::Lr => &members[1],
            Selector::Rf => &members[2],
            Selector::Ensemble1 => self.meta.ensemble1(),
            Selector::Ensemble2 => self.meta.ensemble2(),
            Selector::Meta => &self.meta,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.meta.num_classes()
    }

    pub fn base_weights(&self) -> &[f64] {
        self.meta.ensemble1().weights()
    }

    pub fn vectorize_text(&self, text: &str) -> SparseCountVector {
        vectorize(&text_to_ngrams(text, self.ascii_policy), &self.vocabulary)
    }

    pub fn predict_proba_texts(&self, texts: &[String], which: Selector) -> Result<Vec<Distribution>> {
        let model = self.model(which);
        texts
            .par_iter()
            .map(|t| model.predict_proba(&self.vectorize_text(t)))
            .collect()
    }

    pub fn predict_texts(&self, texts: &[String], which: Selector) -> Result<Vec<usize>> {
        Ok(self
            .predict_proba_texts(texts, which)?
            .iter()
            .map(Distribution::argmax)
            .collect())
    }
}

/// Vectorizes the corpus and builds the meta ensemble.
pub fn train(corpus: &RawCorpus, cfg: &TrainConfig) -> Result<TrainedPipeline> {
    let (vocabulary, data) = vectorize_corpus(corpus, cfg.ascii_policy, &cfg.features)?;
    let plan = ResamplePlan::from_counts(&data.class_counts())?;
    let meta = build_meta(&data, &cfg.smote, cfg.meta_weights, cfg.base_weights, &cfg.classifiers)?;
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(TrainedPipeline {
        language: cfg.language,
        ascii_policy: cfg.ascii_policy,
        vocabulary,
        meta,
        metadata: TrainingMetadata {
            seed: cfg.seed(),
            train_rows: data.len() as u64,
            resampled_rows: plan.total() as u64,
            num_classes: data.num_classes() as u32,
            timestamp,
        },
    })
}

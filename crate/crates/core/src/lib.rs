//! Emoji prediction for tweets.
//!
//! The pipeline normalizes and tokenizes tweet text ([`preprocess`]), turns
//! it into unigram/bigram count vectors with a document-frequency cutoff
//! ([`features`]), trains multinomial naive Bayes, one-vs-rest logistic
//! regression and a random forest ([`classifiers`]), optionally oversamples
//! minority classes with SMOTE ([`resample`]), and combines everything with
//! weighted soft voting ([`ensemble`]). [`metrics`] scores predictions with
//! per-class and macro-averaged F1.

pub mod archive;
pub mod classifiers;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod features;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod resample;
pub mod synthetic;

pub use classifiers::{Classifier, Distribution};
pub use corpus::{LabelMapping, RawCorpus};
pub use ensemble::{EnsembleSpec, Language, MetaSpec, TrainedModel};
pub use error::{Error, Result};
pub use features::{FeatureConfig, LabeledDataset, SparseCountVector, Vocabulary};
pub use metrics::{ConfusionMatrix, EvalReport};
pub use pipeline::{Selector, TrainConfig, TrainedPipeline};
pub use preprocess::AsciiPolicy;

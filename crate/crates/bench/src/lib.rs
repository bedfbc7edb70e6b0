//! Shared fixtures for the benchmarks.

use emopred::features::{vectorize_corpus, FeatureConfig, LabeledDataset, Vocabulary};
use emopred::synthetic::{skewed_corpus, SkewedCorpusSpec};
use emopred::{AsciiPolicy, RawCorpus};

/// Seeded skewed corpus of `num_tweets` tweets over five classes.
pub fn corpus(num_tweets: usize) -> RawCorpus {
    skewed_corpus(&SkewedCorpusSpec { num_tweets, seed: 17, ..Default::default() }).expect("valid spec")
}

/// `corpus(num_tweets)` vectorized with the default feature settings.
pub fn dataset(num_tweets: usize) -> (Vocabulary, LabeledDataset) {
    vectorize_corpus(&corpus(num_tweets), AsciiPolicy::KeepMost, &FeatureConfig::default()).expect("vectorizes")
}

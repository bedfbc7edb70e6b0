//! Bag-of-n-grams features: vocabulary with a document-frequency cutoff,
//! sparse count vectors and labeled datasets.

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::corpus::RawCorpus;
use crate::error::{Error, Result};
use crate::preprocess::{text_to_ngrams, AsciiPolicy, NgramBag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    /// Minimum number of distinct tweets a feature must occur in.
    pub min_df: usize,
    pub use_unigrams: bool,
    pub use_bigrams: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            min_df: 5,
            use_unigrams: true,
            use_bigrams: true,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_df == 0 {
            return Err(Error::InvalidArgument("min_df must be at least 1".into()));
        }
        Ok(())
    }
}

/// Feature strings indexed in byte-wise lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    features: Vec<String>,
    num_unigrams: usize,
    num_bigrams: usize,
}

fn is_bigram(feature: &str) -> bool {
    feature.contains(' ')
}

impl Vocabulary {
    /// Builds a vocabulary from already-selected features. They are sorted
    /// and deduplicated.
    pub fn from_features(mut features: Vec<String>) -> Self {
        features.sort_unstable();
        features.dedup();
        let num_bigrams = features.iter().filter(|f| is_bigram(f)).count();
        let index = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
        Vocabulary {
            index,
            num_unigrams: features.len() - num_bigrams,
            num_bigrams,
            features,
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn num_unigrams(&self) -> usize {
        self.num_unigrams
    }

    pub fn num_bigrams(&self) -> usize {
        self.num_bigrams
    }

    pub fn get(&self, feature: &str) -> Option<usize> {
        self.index.get(feature).copied()
    }

    pub fn feature(&self, index: usize) -> &str {
        &self.features[index]
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }
}

/// Document frequency of every candidate feature admitted by `cfg`'s
/// unigram/bigram flags.
pub fn document_frequencies<'a>(
    bags: impl IntoIterator<Item = &'a NgramBag>,
    cfg: &FeatureConfig,
) -> HashMap<String, usize> {
    let mut df: HashMap<String, usize> = HashMap::new();
    for bag in bags {
        let mut seen: HashSet<&str> = HashSet::new();
        if cfg.use_unigrams {
            seen.extend(bag.unigrams.iter().map(String::as_str));
        }
        if cfg.use_bigrams {
            seen.extend(bag.bigrams.iter().map(String::as_str));
        }
        for f in seen {
            match df.get_mut(f) {
                Some(n) => *n += 1,
                None => {
                    df.insert(f.to_owned(), 1);
                }
            }
        }
    }
    df
}

pub fn build_vocabulary<'a>(
    bags: impl IntoIterator<Item = &'a NgramBag>,
    cfg: &FeatureConfig,
) -> Vocabulary {
    let retained = document_frequencies(bags, cfg)
        .into_iter()
        .filter(|&(_, n)| n >= cfg.min_df)
        .map(|(f, _)| f)
        .collect();
    Vocabulary::from_features(retained)
}

/// Sparse row: strictly increasing feature indices with nonzero values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseCountVector {
    entries: Vec<(usize, f64)>,
    dimension: usize,
}

impl SparseCountVector {
    /// Sorts entries, merges duplicate indices and drops zeros.
    pub fn new(mut entries: Vec<(usize, f64)>, dimension: usize) -> Result<Self> {
        entries.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            if i >= dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    actual: i + 1,
                });
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "feature {i} has invalid count {v}"
                )));
            }
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|&(_, v)| v != 0.0);
        Ok(SparseCountVector {
            entries: merged,
            dimension,
        })
    }

    pub fn empty(dimension: usize) -> Self {
        SparseCountVector {
            entries: Vec::new(),
            dimension,
        }
    }

    pub fn from_dense(values: &[f64]) -> Result<Self> {
        Self::new(
            values.iter().copied().enumerate().filter(|&(_, v)| v != 0.0).collect(),
            values.len(),
        )
    }

    // Caller guarantees sorted, in-range, nonzero entries.
    pub(crate) fn from_sorted_unchecked(entries: Vec<(usize, f64)>, dimension: usize) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|&(i, v)| i < dimension && v != 0.0));
        SparseCountVector { entries, dimension }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn squared_distance(&self, other: &SparseCountVector) -> f64 {
        let (a, b) = (&self.entries, &other.entries);
        let (mut i, mut j) = (0, 0);
        let mut acc = 0.0;
        while i < a.len() || j < b.len() {
            let d = match (a.get(i), b.get(j)) {
                (Some(&(ia, va)), Some(&(ib, vb))) if ia == ib => {
                    i += 1;
                    j += 1;
                    va - vb
                }
                (Some(&(ia, va)), Some(&(ib, _))) if ia < ib => {
                    i += 1;
                    va
                }
                (Some(&(_, va)), None) => {
                    i += 1;
                    va
                }
                (_, Some(&(_, vb))) => {
                    j += 1;
                    vb
                }
                (None, None) => unreachable!(),
            };
            acc += d * d;
        }
        acc
    }

    pub(crate) fn check_dimension(&self, expected: usize) -> Result<()> {
        if self.dimension != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: self.dimension,
            });
        }
        Ok(())
    }
}

/// Counts the in-vocabulary grams of `bag`. Out-of-vocabulary grams are ignored.
pub fn vectorize(bag: &NgramBag, vocab: &Vocabulary) -> SparseCountVector {
    let mut indices: Vec<usize> = bag.iter().filter_map(|g| vocab.get(g)).collect();
    indices.sort_unstable();
    let mut entries: Vec<(usize, f64)> = Vec::new();
    for i in indices {
        match entries.last_mut() {
            Some((j, n)) if *j == i => *n += 1.0,
            _ => entries.push((i, 1.0)),
        }
    }
    SparseCountVector::from_sorted_unchecked(entries, vocab.len())
}

/// Rows of count vectors with parallel class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    rows: Vec<SparseCountVector>,
    labels: Vec<usize>,
    num_classes: usize,
    dimension: usize,
}

impl LabeledDataset {
    pub fn new(
        rows: Vec<SparseCountVector>,
        labels: Vec<usize>,
        num_classes: usize,
        dimension: usize,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if num_classes == 0 {
            return Err(Error::InvalidArgument("num_classes must be positive".into()));
        }
        for r in &rows {
            r.check_dimension(dimension)?;
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidArgument(format!(
                "label {l} out of range for k={num_classes}"
            )));
        }
        Ok(LabeledDataset {
            rows,
            labels,
            num_classes,
            dimension,
        })
    }

    pub fn rows(&self) -> &[SparseCountVector] {
        &self.rows
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        crate::corpus::class_counts(&self.labels, self.num_classes)
    }
}

/// Runs the full text-to-features pipeline over a corpus. The vocabulary is
/// built from the corpus itself.
pub fn vectorize_corpus(
    corpus: &RawCorpus,
    policy: AsciiPolicy,
    cfg: &FeatureConfig,
) -> Result<(Vocabulary, LabeledDataset)> {
    cfg.validate()?;
    let bags: Vec<NgramBag> = corpus
        .texts()
        .par_iter()
        .map(|t| text_to_ngrams(t, policy))
        .collect();
    let vocab = build_vocabulary(&bags, cfg);
    let rows = bags.par_iter().map(|b| vectorize(b, &vocab)).collect();
    let data = LabeledDataset::new(rows, corpus.labels().to_vec(), corpus.num_classes(), vocab.len())?;
    Ok((vocab, data))
}

/// Vectorizes texts against an existing vocabulary.
pub fn vectorize_texts(texts: &[String], policy: AsciiPolicy, vocab: &Vocabulary) -> Vec<SparseCountVector> {
    texts
        .par_iter()
        .map(|t| vectorize(&text_to_ngrams(t, policy), vocab))
        .collect()
}

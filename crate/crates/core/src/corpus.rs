//! Tweet corpora: line-based text/label files, label-to-display mappings,
//! class-distribution statistics and stratified splits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Tweets and their class labels, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCorpus {
    texts: Vec<String>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl RawCorpus {
    pub fn new(texts: Vec<String>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "a corpus needs at least 2 classes, got {num_classes}"
            )));
        }
        if texts.len() != labels.len() {
            return Err(Error::LineCountMismatch {
                texts: texts.len(),
                labels: labels.len(),
            });
        }
        if let Some(pos) = labels.iter().position(|&l| l >= num_classes) {
            return Err(Error::Parse {
                line: pos + 1,
                message: format!("label {} out of range for k={num_classes}", labels[pos]),
            });
        }
        if let Some(pos) = texts.iter().position(|t| t.contains(['\n', '\r'])) {
            return Err(Error::Parse {
                line: pos + 1,
                message: "tweet contains a line break".into(),
            });
        }
        Ok(RawCorpus {
            texts,
            labels,
            num_classes,
        })
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    /// Corpus restricted to the given row indices, in that order.
    pub fn subset(&self, rows: &[usize]) -> RawCorpus {
        RawCorpus {
            texts: rows.iter().map(|&i| self.texts[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    /// Writes the corpus as a pair of parallel line files.
    pub fn write(&self, text_path: &Path, label_path: &Path) -> Result<()> {
        let mut texts = String::new();
        let mut labels = String::new();
        for (t, l) in self.texts.iter().zip(&self.labels) {
            texts.push_str(t);
            texts.push('\n');
            writeln!(labels, "{l}").expect("writing to a String cannot fail");
        }
        fs::write(text_path, texts).map_err(|e| Error::io(text_path, e))?;
        fs::write(label_path, labels).map_err(|e| Error::io(label_path, e))?;
        Ok(())
    }
}

/// Splits file content into LF-terminated lines. A final line without a
/// terminator still counts; CR anywhere is rejected.
pub(crate) fn split_lines(content: &str) -> Result<Vec<&str>> {
    if content.is_empty() {
        return Ok(Vec::new());
    }
    let body = content.strip_suffix('\n').unwrap_or(content);
    body.split('\n')
        .enumerate()
        .map(|(i, line)| {
            if line.contains('\r') {
                Err(Error::Parse {
                    line: i + 1,
                    message: "carriage return inside line".into(),
                })
            } else {
                Ok(line)
            }
        })
        .collect()
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Parses one class index per line, each `< k`.
pub fn parse_labels(content: &str, k: usize) -> Result<Vec<usize>> {
    split_lines(content)?
        .into_iter()
        .enumerate()
        .map(|(i, line)| {
            let label: usize = line.trim().parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("cannot parse label {:?}", line.trim()),
            })?;
            if label >= k {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("label {label} out of range for k={k}"),
                });
            }
            Ok(label)
        })
        .collect()
}

/// Reads one text file with one tweet per line.
pub fn load_texts(path: &Path) -> Result<Vec<String>> {
    let content = read_file(path)?;
    Ok(split_lines(&content)?
        .into_iter()
        .map(str::to_owned)
        .collect())
}

pub fn load_labels(path: &Path, k: usize) -> Result<Vec<usize>> {
    parse_labels(&read_file(path)?, k)
}

/// Loads a tweet file and its parallel label file.
pub fn load_corpus(text_path: &Path, label_path: &Path, k: usize) -> Result<RawCorpus> {
    let texts = load_texts(text_path)?;
    let labels = load_labels(label_path, k)?;
    if texts.len() != labels.len() {
        return Err(Error::LineCountMismatch {
            texts: texts.len(),
            labels: labels.len(),
        });
    }
    RawCorpus::new(texts, labels, k)
}

/// Display strings for each class, indexed by class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMapping {
    names: Vec<String>,
}

impl LabelMapping {
    /// Builds a mapping from `(class, display)` pairs. Classes must be exactly
    /// `0..k`, each once, and display strings non-empty.
    pub fn new(entries: Vec<(usize, String)>) -> Result<Self> {
        let k = entries.len();
        let mut names: Vec<Option<String>> = vec![None; k];
        for (class, name) in entries {
            if class >= k {
                return Err(Error::InvalidArgument(format!(
                    "mapping class {class} out of range for {k} entries"
                )));
            }
            if name.trim().is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "empty display string for class {class}"
                )));
            }
            if names[class].replace(name).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "class {class} mapped twice"
                )));
            }
        }
        Ok(LabelMapping {
            names: names.into_iter().map(|n| n.expect("all slots filled")).collect(),
        })
    }

    /// Mapping that displays every class as its index.
    pub fn numeric(k: usize) -> Self {
        LabelMapping {
            names: (0..k).map(|c| c.to_string()).collect(),
        }
    }

    /// Parses `<index>\t<display string>` lines.
    pub fn parse(content: &str) -> Result<Self> {
        let entries = split_lines(content)?
            .into_iter()
            .enumerate()
            .map(|(i, line)| {
                let (idx, name) = line.split_once('\t').ok_or_else(|| Error::Parse {
                    line: i + 1,
                    message: "expected <index>\\t<display>".into(),
                })?;
                let idx = idx.trim().parse().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("cannot parse class index {idx:?}"),
                })?;
                Ok((idx, name.to_owned()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_file(path)?)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, class: usize) -> &str {
        &self.names[class]
    }
}

/// Per-class counts and fractions of a labeled corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDistribution {
    pub counts: Vec<usize>,
    pub fractions: Vec<f64>,
}

impl ClassDistribution {
    pub fn from_counts(counts: Vec<usize>) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return Err(Error::Empty("class distribution of an empty corpus".into()));
        }
        let fractions = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(ClassDistribution { counts, fractions })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Classes sorted by descending count, ties by ascending index.
    pub fn ranked(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.counts.len()).collect();
        order.sort_by(|&a, &b| self.counts[b].cmp(&self.counts[a]).then(a.cmp(&b)));
        order
    }
}

pub fn class_counts(labels: &[usize], k: usize) -> Vec<usize> {
    let mut counts = vec![0; k];
    for &l in labels {
        counts[l] += 1;
    }
    counts
}

pub fn class_distribution(corpus: &RawCorpus) -> Result<ClassDistribution> {
    ClassDistribution::from_counts(class_counts(corpus.labels(), corpus.num_classes()))
}

/// Index of the largest count; the smallest index wins ties.
pub fn majority_class(counts: &[usize]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 && best.is_none_or(|b| c > counts[b]) {
            best = Some(i);
        }
    }
    best.ok_or_else(|| Error::Empty("all class counts are zero".into()))
}

/// Stratified split: within every class, a `test_fraction` share (rounded)
/// of a seeded shuffle goes to the test side. Returns (train, test) rows,
/// each in ascending order.
pub fn stratified_split(
    labels: &[usize],
    k: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in [0, 1), got {test_fraction}"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for rows in &mut by_class {
        rows.shuffle(&mut rng);
        let n_test = ((rows.len() as f64 * test_fraction).round() as usize).min(rows.len().saturating_sub(1));
        test.extend_from_slice(&rows[..n_test]);
        train.extend_from_slice(&rows[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

//! Random forest of CART trees grown with Gini impurity on bootstrap samples.
//!
//! At every node the candidate features are visited in a random order and
//! the search stops once `max_features` features that are not constant on
//! the node's samples have been evaluated. Features absent from every
//! sample at the node are constant (all zero) and are skipped outright.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::classifiers::{Classifier, Distribution};
use crate::error::{Error, Result};
use crate::features::{LabeledDataset, SparseCountVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RfConfig {
    pub n_trees: usize,
    /// Split candidates per node; `None` means `⌈√V⌉`.
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RfConfig {
    fn default() -> Self {
        RfConfig {
            n_trees: 20,
            max_features: None,
            min_samples_leaf: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl RfConfig {
    fn resolved_max_features(&self, dimension: usize) -> Result<usize> {
        match self.max_features {
            None => Ok(((dimension as f64).sqrt().ceil() as usize).max(1)),
            Some(m) if m >= 1 && m <= dimension.max(1) => Ok(m),
            Some(m) => Err(Error::InvalidArgument(format!(
                "max_features must lie in 1..={dimension}, got {m}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class counts of the training rows that reached this leaf.
    Leaf { counts: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    /// Validates that children point forward, features are `< dimension`
    /// and leaves have `num_classes` counts with a positive total.
    pub fn from_nodes(nodes: Vec<Node>, num_classes: usize, dimension: usize) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Malformed("tree without nodes".into()));
        }
        for (i, node) in nodes.iter().enumerate() {
            match node {
                Node::Split {
                    feature,
                    left,
                    right,
                    threshold,
                } => {
                    if *feature >= dimension
                        || *left <= i
                        || *right <= i
                        || *left >= nodes.len()
                        || *right >= nodes.len()
                        || threshold.is_nan()
                    {
                        return Err(Error::Malformed(format!("invalid split node {i}")));
                    }
                }
                Node::Leaf { counts } => {
                    if counts.len() != num_classes || counts.iter().all(|&c| c == 0) {
                        return Err(Error::Malformed(format!("invalid leaf node {i}")));
                    }
                }
            }
        }
        Ok(DecisionTree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// Index of the leaf `x` falls into.
    pub fn leaf_index(&self, x: &SparseCountVector) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x.get(*feature) <= *threshold { *left } else { *right },
                Node::Leaf { .. } => return i,
            }
        }
    }

    pub fn leaf_counts(&self, x: &SparseCountVector) -> &[u32] {
        match &self.nodes[self.leaf_index(x)] {
            Node::Leaf { counts } => counts,
            Node::Split { .. } => unreachable!("leaf_index returns leaves"),
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
}

struct TreeBuilder<'a> {
    data: &'a LabeledDataset,
    max_features: usize,
    min_samples_leaf: usize,
    rng: ChaCha8Rng,
}

impl TreeBuilder<'_> {
    fn class_counts(&self, samples: &[usize]) -> Vec<u32> {
        let mut counts = vec![0u32; self.data.num_classes()];
        for &s in samples {
            counts[self.data.labels()[s]] += 1;
        }
        counts
    }

    fn build(mut self, samples: Vec<usize>) -> DecisionTree {
        let mut nodes: Vec<Node> = vec![Node::Leaf { counts: Vec::new() }];
        let mut pending = vec![(0usize, samples)];
        while let Some((id, samples)) = pending.pop() {
            let counts = self.class_counts(&samples);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let split = if pure || samples.len() < 2 * self.min_samples_leaf {
                None
            } else {
                self.best_split(&samples)
            };
            match split {
                None => nodes[id] = Node::Leaf { counts },
                Some(SplitChoice { feature, threshold }) => {
                    let (left, right): (Vec<usize>, Vec<usize>) = samples
                        .iter()
                        .partition(|&&s| self.data.rows()[s].get(feature) <= threshold);
                    let left_id = nodes.len();
                    let right_id = left_id + 1;
                    nodes.push(Node::Leaf { counts: Vec::new() });
                    nodes.push(Node::Leaf { counts: Vec::new() });
                    nodes[id] = Node::Split {
                        feature,
                        threshold,
                        left: left_id,
                        right: right_id,
                    };
                    pending.push((right_id, right));
                    pending.push((left_id, left));
                }
            }
        }
        DecisionTree { nodes }
    }

    fn best_split(&mut self, samples: &[usize]) -> Option<SplitChoice> {
        let rows = self.data.rows();
        let mut candidates: Vec<usize> = samples
            .iter()
            .flat_map(|&s| rows[s].entries().iter().map(|&(f, _)| f))
            .collect();
        candidates.sort_unstable();
        candidates.dedup();

        let k = self.data.num_classes();
        let mut best: Option<(f64, SplitChoice)> = None;
        let mut evaluated = 0;
        let mut values: Vec<(f64, usize)> = Vec::with_capacity(samples.len());
        for i in 0..candidates.len() {
            if evaluated == self.max_features {
                break;
            }
            let j = self.rng.random_range(i..candidates.len());
            candidates.swap(i, j);
            let feature = candidates[i];

            values.clear();
            values.extend(samples.iter().map(|&s| (rows[s].get(feature), self.data.labels()[s])));
            values.sort_by(|a, b| a.0.total_cmp(&b.0));
            if values[0].0 == values[values.len() - 1].0 {
                continue;
            }
            evaluated += 1;
            if let Some((score, threshold)) = sweep(&values, k, self.min_samples_leaf) {
                if best.as_ref().is_none_or(|(b, _)| score > *b) {
                    best = Some((score, SplitChoice { feature, threshold }));
                }
            }
        }
        best.map(|(_, c)| c)
    }
}

/// Best threshold for sorted `(value, label)` pairs. The score is
/// `Σ_side Σ_c n_c² / n_side`, which is maximal where the weighted Gini
/// impurity of the children is minimal.
fn sweep(values: &[(f64, usize)], k: usize, min_leaf: usize) -> Option<(f64, f64)> {
    let n = values.len();
    let mut left = vec![0.0f64; k];
    let mut right = vec![0.0f64; k];
    for &(_, l) in values {
        right[l] += 1.0;
    }
    let mut left_sq = 0.0;
    let mut right_sq: f64 = right.iter().map(|c| c * c).sum();
    let mut best: Option<(f64, f64)> = None;
    for i in 0..n - 1 {
        let l = values[i].1;
        left_sq += 2.0 * left[l] + 1.0;
        left[l] += 1.0;
        right_sq -= 2.0 * right[l] - 1.0;
        right[l] -= 1.0;
        let (lo, hi) = (values[i].0, values[i + 1].0);
        let n_left = i + 1;
        if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
            continue;
        }
        let score = left_sq / n_left as f64 + right_sq / (n - n_left) as f64;
        if best.is_none_or(|(b, _)| score > b) {
            let mid = lo + (hi - lo) / 2.0;
            let threshold = if mid < hi { mid } else { lo };
            best = Some((score, threshold));
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfModel {
    trees: Vec<DecisionTree>,
    num_classes: usize,
    dimension: usize,
}

/// Grows `n_trees` trees in parallel. Tree `i` draws from its own ChaCha
/// stream `(seed, i)`, so the forest does not depend on thread scheduling.
pub fn rf_fit(data: &LabeledDataset, cfg: &RfConfig) -> Result<RfModel> {
    if data.is_empty() {
        return Err(Error::Empty("random forest training set".into()));
    }
    if cfg.n_trees == 0 {
        return Err(Error::InvalidArgument("n_trees must be at least 1".into()));
    }
    if cfg.min_samples_leaf == 0 {
        return Err(Error::InvalidArgument("min_samples_leaf must be at least 1".into()));
    }
    let max_features = cfg.resolved_max_features(data.dimension())?;
    let n = data.len();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            let samples: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            TreeBuilder {
                data,
                max_features,
                min_samples_leaf: cfg.min_samples_leaf,
                rng,
            }
            .build(samples)
        })
        .collect();
    Ok(RfModel {
        trees,
        num_classes: data.num_classes(),
        dimension: data.dimension(),
    })
}

impl RfModel {
    pub fn from_trees(trees: Vec<DecisionTree>, num_classes: usize, dimension: usize) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::Malformed("forest without trees".into()));
        }
        for t in &trees {
            DecisionTree::from_nodes(t.nodes.clone(), num_classes, dimension)?;
        }
        Ok(RfModel {
            trees,
            num_classes,
            dimension,
        })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }
}

impl Classifier for RfModel {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    /// Mean of the per-tree leaf class frequencies.
    fn predict_proba(&self, x: &SparseCountVector) -> Result<Distribution> {
        x.check_dimension(self.dimension)?;
        let mut acc = vec![0.0; self.num_classes];
        for tree in &self.trees {
            let counts = tree.leaf_counts(x);
            let total: u32 = counts.iter().sum();
            for (a, &c) in acc.iter_mut().zip(counts) {
                *a += f64::from(c) / f64::from(total);
            }
        }
        Ok(Distribution::from_weights(acc))
    }
}

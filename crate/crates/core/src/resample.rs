//! SMOTE oversampling to the majority-class count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{LabeledDataset, SparseCountVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoteConfig {
    pub k_neighbors: usize,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k_neighbors: 5,
            seed: 0,
        }
    }
}

/// Per-class original and synthetic counts; every class ends at `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResamplePlan {
    pub original: Vec<usize>,
    pub target: usize,
}

impl ResamplePlan {
    /// Plan for the given per-class counts. Every class needs at least one
    /// instance.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidArgument("no classes to resample".into()));
        }
        if let Some(class) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyClass { class });
        }
        Ok(ResamplePlan {
            original: counts.to_vec(),
            target: *counts.iter().max().expect("non-empty"),
        })
    }

    /// Plan where `k` classes all end at `majority` rows.
    pub fn uniform_target(k: usize, majority: usize) -> Self {
        ResamplePlan {
            original: vec![majority; k],
            target: majority,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.original.len()
    }

    pub fn synthetic(&self, class: usize) -> usize {
        self.target - self.original[class]
    }

    pub fn total_synthetic(&self) -> usize {
        (0..self.num_classes()).map(|c| self.synthetic(c)).sum()
    }

    /// Rows after resampling: `k · target`.
    pub fn total(&self) -> usize {
        self.num_classes() * self.target
    }
}

pub fn plan_resample(data: &LabeledDataset) -> Result<ResamplePlan> {
    ResamplePlan::from_counts(&data.class_counts())
}

/// For each point, the indices of its `k` nearest other points by Euclidean
/// distance, nearest first, ties broken by lower index.
pub fn nearest_neighbors(points: &[&SparseCountVector], k: usize) -> Vec<Vec<usize>> {
    points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut dists: Vec<(f64, usize)> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, q)| (p.squared_distance(q), j))
                .collect();
            let take = k.min(dists.len());
            let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if take > 0 && take < dists.len() {
                dists.select_nth_unstable_by(take - 1, by_dist);
            }
            dists.truncate(take);
            dists.sort_by(by_dist);
            dists.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

/// `x + gap·(nn − x)`, clamped per entry into `[min, max]` of the two
/// endpoints; entries that come out exactly zero are dropped.
pub fn interpolate(x: &SparseCountVector, nn: &SparseCountVector, gap: f64) -> SparseCountVector {
    let (a, b) = (x.entries(), nn.entries());
    let mut out = Vec::with_capacity(a.len().max(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let (f, xv, nv) = match (a.get(i), b.get(j)) {
            (Some(&(fa, va)), Some(&(fb, vb))) if fa == fb => {
                i += 1;
                j += 1;
                (fa, va, vb)
            }
            (Some(&(fa, va)), Some(&(fb, _))) if fa < fb => {
                i += 1;
                (fa, va, 0.0)
            }
            (Some(&(fa, va)), None) => {
                i += 1;
                (fa, va, 0.0)
            }
            (_, Some(&(fb, vb))) => {
                j += 1;
                (fb, 0.0, vb)
            }
            (None, None) => unreachable!(),
        };
        let v = (xv + gap * (nv - xv)).clamp(xv.min(nv), xv.max(nv));
        if v != 0.0 {
            out.push((f, v));
        }
    }
    SparseCountVector::from_sorted_unchecked(out, x.dimension())
}

/// Where a synthetic row came from: indices of its parent and of the
/// neighbor it was interpolated towards, both into the input dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticOrigin {
    pub parent: usize,
    pub neighbor: usize,
}

fn synthesize_class(
    data: &LabeledDataset,
    members: &[usize],
    quota: usize,
    k_neighbors: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(SparseCountVector, SyntheticOrigin)> {
    if quota == 0 {
        return Vec::new();
    }
    let points: Vec<&SparseCountVector> = members.iter().map(|&i| &data.rows()[i]).collect();
    if points.len() == 1 {
        let origin = SyntheticOrigin {
            parent: members[0],
            neighbor: members[0],
        };
        return vec![(points[0].clone(), origin); quota];
    }
    let neighbors = nearest_neighbors(&points, k_neighbors.min(points.len() - 1));
    (0..quota)
        .map(|i| {
            let parent = i % points.len();
            let nn = neighbors[parent][rng.random_range(0..neighbors[parent].len())];
            let gap: f64 = rng.random_range(0.0..=1.0);
            let origin = SyntheticOrigin {
                parent: members[parent],
                neighbor: members[nn],
            };
            (interpolate(points[parent], points[nn], gap), origin)
        })
        .collect()
}

/// Oversamples every class to the majority count. Output rows are the
/// originals in order, followed by synthetic rows grouped by class.
pub fn smote(data: &LabeledDataset, cfg: &SmoteConfig) -> Result<LabeledDataset> {
    smote_traced(data, cfg).map(|(d, _)| d)
}

/// [`smote`], also returning the origin of each synthetic row in output
/// order (the `i`-th origin belongs to output row `data.len() + i`).
pub fn smote_traced(data: &LabeledDataset, cfg: &SmoteConfig) -> Result<(LabeledDataset, Vec<SyntheticOrigin>)> {
    if cfg.k_neighbors == 0 {
        return Err(Error::InvalidArgument("k_neighbors must be at least 1".into()));
    }
    let plan = plan_resample(data)?;
    let k = data.num_classes();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in data.labels().iter().enumerate() {
        members[l].push(i);
    }
    let synthetic: Vec<Vec<(SparseCountVector, SyntheticOrigin)>> = (0..k)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(c as u64);
            synthesize_class(data, &members[c], plan.synthetic(c), cfg.k_neighbors, &mut rng)
        })
        .collect();

    let mut rows = data.rows().to_vec();
    let mut labels = data.labels().to_vec();
    let mut origins = Vec::with_capacity(plan.total_synthetic());
    rows.reserve(plan.total_synthetic());
    labels.reserve(plan.total_synthetic());
    for (c, batch) in synthetic.into_iter().enumerate() {
        for (row, origin) in batch {
            rows.push(row);
            labels.push(c);
            origins.push(origin);
        }
    }
    Ok((LabeledDataset::new(rows, labels, k, data.dimension())?, origins))
}

//! Independent reference computations used by the integration and
//! acceptance suites. Nothing here calls into the code paths it checks.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

/// All multisets of at most `max_len` tokens over `vocab` tokens, as dense
/// count vectors (the empty document included).
pub fn all_small_documents(vocab: usize, max_len: usize) -> Vec<Vec<u32>> {
    fn go(pos: usize, remaining: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == cur.len() {
            out.push(cur.clone());
            return;
        }
        for c in 0..=remaining as u32 {
            cur[pos] = c;
            go(pos + 1, remaining - c as usize, cur, out);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    go(0, max_len, &mut vec![0; vocab], &mut out);
    out
}

/// Posterior of a multinomial naive Bayes model by direct arithmetic:
/// `P(c) · Π_f θ_cf^x_f`, normalized, with θ the smoothed relative counts.
pub fn bayes_posterior(train: &[(Vec<u32>, usize)], k: usize, alpha: f64, x: &[u32]) -> Vec<f64> {
    let v = x.len();
    let n = train.len() as f64;
    let joint: Vec<f64> = (0..k)
        .map(|c| {
            let docs: Vec<&Vec<u32>> = train.iter().filter(|(_, y)| *y == c).map(|(d, _)| d).collect();
            let prior = docs.len() as f64 / n;
            let totals: Vec<f64> = (0..v).map(|f| docs.iter().map(|d| d[f] as f64).sum()).collect();
            let all: f64 = totals.iter().sum();
            let mut p = prior;
            for f in 0..v {
                let theta = (totals[f] + alpha) / (all + alpha * v as f64);
                p *= theta.powi(x[f] as i32);
            }
            p
        })
        .collect();
    let z: f64 = joint.iter().sum();
    joint.iter().map(|p| p / z).collect()
}

/// Per-class (precision, recall, f1) plus (macro P, macro R, macro F1,
/// accuracy), computed by expanding the matrix into individual instances.
pub fn direct_metrics(rows: &[Vec<u64>]) -> (Vec<(f64, f64, f64)>, [f64; 4]) {
    let k = rows.len();
    let mut instances = Vec::new();
    for (g, row) in rows.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            for _ in 0..n {
                instances.push((g, p));
            }
        }
    }
    let per: Vec<(f64, f64, f64)> = (0..k)
        .map(|c| {
            let tp = instances.iter().filter(|&&(g, p)| g == c && p == c).count() as f64;
            let fp = instances.iter().filter(|&&(g, p)| g != c && p == c).count() as f64;
            let fn_ = instances.iter().filter(|&&(g, p)| g == c && p != c).count() as f64;
            let precision = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
            let recall = if tp + fn_ == 0.0 { 0.0 } else { tp / (tp + fn_) };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            (precision, recall, f1)
        })
        .collect();
    let kf = k as f64;
    let correct = instances.iter().filter(|(g, p)| g == p).count() as f64;
    let macros = [
        per.iter().map(|m| m.0).sum::<f64>() / kf,
        per.iter().map(|m| m.1).sum::<f64>() / kf,
        per.iter().map(|m| m.2).sum::<f64>() / kf,
        correct / instances.len() as f64,
    ];
    (per, macros)
}

/// Brute-force k nearest neighbors over dense points, ties by lower index.
pub fn brute_force_knn(points: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    (0..points.len())
        .map(|i| {
            let mut d: Vec<(f64, usize)> = (0..points.len())
                .filter(|&j| j != i)
                .map(|j| {
                    let dist: f64 = points[i]
                        .iter()
                        .zip(&points[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (dist, j)
                })
                .collect();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            d.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect()
}

/// Document frequency of every unigram and bigram, by scanning each tweet's
/// token list directly.
pub fn brute_force_df(token_lists: &[Vec<String>]) -> BTreeMap<String, usize> {
    let mut df = BTreeMap::new();
    for tokens in token_lists {
        let mut seen = BTreeSet::new();
        for (i, t) in tokens.iter().enumerate() {
            seen.insert(t.clone());
            if i + 1 < tokens.len() {
                seen.insert(format!("{} {}", t, tokens[i + 1]));
            }
        }
        for f in seen {
            *df.entry(f).or_insert(0) += 1;
        }
    }
    df
}

/// Central finite-difference gradient of `f` at `x`.
pub fn finite_difference<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], h: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut plus = x.to_vec();
            let mut minus = x.to_vec();
            plus[i] += h;
            minus[i] -= h;
            (f(&plus) - f(&minus)) / (2.0 * h)
        })
        .collect()
}

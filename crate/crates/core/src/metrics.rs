//! Confusion matrices and precision/recall/F1 with macro averaging.

use std::fmt::Write as _;

use crate::corpus::LabelMapping;
use crate::error::{Error, Result};

/// `k × k` counts; rows are gold classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        ConfusionMatrix {
            k,
            counts: vec![0; k * k],
        }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidArgument("confusion matrix must be square".into()));
        }
        Ok(ConfusionMatrix {
            k,
            counts: rows.concat(),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn get(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold * self.k + pred]
    }

    pub fn add(&mut self, gold: usize, pred: usize) {
        self.counts[gold * self.k + pred] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|i| self.get(i, i)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.k.max(1)).map(<[u64]>::to_vec).collect()
    }
}

pub fn confusion(gold: &[usize], pred: &[usize], k: usize) -> Result<ConfusionMatrix> {
    if gold.len() != pred.len() {
        return Err(Error::InvalidArgument(format!(
            "{} gold labels but {} predictions",
            gold.len(),
            pred.len()
        )));
    }
    let mut m = ConfusionMatrix::zeros(k);
    for (i, (&g, &p)) in gold.iter().zip(pred).enumerate() {
        if g >= k || p >= k {
            return Err(Error::InvalidArgument(format!(
                "instance {i}: label out of range for k={k} (gold {g}, predicted {p})"
            )));
        }
        m.add(g, p);
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Gold instances of the class.
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class and macro metrics. Undefined ratios (0/0) count as 0, and the
/// macro means divide by `k` including classes absent from the data.
pub fn evaluate(m: &ConfusionMatrix) -> Result<EvalReport> {
    let k = m.num_classes();
    if k == 0 {
        return Err(Error::InvalidArgument("evaluation needs at least one class".into()));
    }
    let total = m.total();
    if total == 0 {
        return Err(Error::Empty("confusion matrix has no instances".into()));
    }
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let tp = m.get(c, c);
            let predicted: u64 = (0..k).map(|g| m.get(g, c)).sum();
            let support: u64 = (0..k).map(|p| m.get(c, p)).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k as f64;
    Ok(EvalReport {
        macro_precision: mean(|c| c.precision),
        macro_recall: mean(|c| c.recall),
        macro_f1: mean(|c| c.f1),
        accuracy: ratio(m.trace(), total),
        confusion: m.clone(),
        per_class,
    })
}

/// Human-readable metrics table plus the confusion matrix as CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedReport {
    pub text: String,
    pub matrix_csv: String,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Renders scores as percentages with two decimals. The macro line lists
/// F1, P, R and Acc. in that order.
pub fn report_render(report: &EvalReport, mapping: &LabelMapping) -> Result<RenderedReport> {
    let k = report.confusion.num_classes();
    if mapping.len() != k {
        return Err(Error::InvalidArgument(format!(
            "label mapping has {} entries for {k} classes",
            mapping.len()
        )));
    }
    let pct = |x: f64| format!("{:.2}", 100.0 * x);

    let mut text = String::from("class\tF1\tP\tR\tsupport\n");
    for (c, m) in report.per_class.iter().enumerate() {
        writeln!(
            text,
            "{}\t{}\t{}\t{}\t{}",
            mapping.name(c),
            pct(m.f1),
            pct(m.precision),
            pct(m.recall),
            m.support
        )
        .expect("writing to a String cannot fail");
    }
    writeln!(
        text,
        "macro\tF1 {}\tP {}\tR {}\tAcc. {}",
        pct(report.macro_f1),
        pct(report.macro_precision),
        pct(report.macro_recall),
        pct(report.accuracy)
    )
    .expect("writing to a String cannot fail");

    let mut csv = String::from("gold\\predicted");
    for c in 0..k {
        csv.push(',');
        csv.push_str(&csv_field(mapping.name(c)));
    }
    csv.push('\n');
    for g in 0..k {
        csv.push_str(&csv_field(mapping.name(g)));
        for p in 0..k {
            write!(csv, ",{}", report.confusion.get(g, p)).expect("writing to a String cannot fail");
        }
        csv.push('\n');
    }
    Ok(RenderedReport { text, matrix_csv: csv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn confusion_examples() {
        let m = confusion(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert_eq!(m.rows(), vec![vec![1, 1], vec![0, 1]]);
        let m = confusion(&[2, 0, 1], &[2, 0, 1], 3).unwrap();
        assert_eq!(m.trace(), 3);
        assert_eq!(confusion(&[], &[], 3).unwrap(), ConfusionMatrix::zeros(3));
        assert!(confusion(&[0], &[], 2).is_err());
        assert!(confusion(&[0], &[2], 2).is_err());
    }

    #[test]
    fn hand_example() {
        let m = ConfusionMatrix::from_rows(&[vec![2, 1], vec![0, 3]]).unwrap();
        let r = evaluate(&m).unwrap();
        assert_relative_eq!(r.per_class[0].precision, 1.0);
        assert_relative_eq!(r.per_class[0].recall, 2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(r.per_class[0].f1, 0.8, epsilon = 1e-15);
        assert_relative_eq!(r.per_class[1].precision, 0.75);
        assert_relative_eq!(r.per_class[1].recall, 1.0);
        assert_relative_eq!(r.per_class[1].f1, 6.0 / 7.0, epsilon = 1e-15);
        assert_relative_eq!(r.macro_f1, (0.8 + 6.0 / 7.0) / 2.0, epsilon = 1e-15);
        assert!((r.macro_f1 - 0.8286).abs() < 1e-4);
        assert_relative_eq!(r.accuracy, 5.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn perfect_and_absent_classes() {
        let r = evaluate(&confusion(&[0, 1, 1], &[0, 1, 1], 2).unwrap()).unwrap();
        assert_eq!((r.macro_f1, r.macro_precision, r.macro_recall, r.accuracy), (1.0, 1.0, 1.0, 1.0));
        let r = evaluate(&confusion(&[0, 1, 1], &[0, 1, 1], 3).unwrap()).unwrap();
        assert_eq!(r.per_class[2], ClassMetrics { precision: 0.0, recall: 0.0, f1: 0.0, support: 0 });
        assert_relative_eq!(r.macro_f1, 2.0 / 3.0, epsilon = 1e-15);
        assert!(evaluate(&ConfusionMatrix::zeros(2)).is_err());
    }

    #[test]
    fn single_class() {
        let r = evaluate(&confusion(&[0, 0], &[0, 0], 1).unwrap()).unwrap();
        assert_eq!(r.macro_f1, 1.0);
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn render_shape() {
        let m = ConfusionMatrix::from_rows(&[vec![2, 1], vec![0, 3]]).unwrap();
        let r = evaluate(&m).unwrap();
        let mapping = LabelMapping::new(vec![(0, "❤".into()), (1, "a,b".into())]).unwrap();
        let out = report_render(&r, &mapping).unwrap();
        let lines: Vec<&str> = out.text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "❤\t80.00\t100.00\t66.67\t3");
        assert_eq!(lines[3], "macro\tF1 82.86\tP 87.50\tR 83.33\tAcc. 83.33");
        assert_eq!(out.matrix_csv, "gold\\predicted,❤,\"a,b\"\n❤,2,1\n\"a,b\",0,3\n");
        assert!(report_render(&r, &LabelMapping::numeric(3)).is_err());
    }
}

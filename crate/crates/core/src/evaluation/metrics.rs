//! Confusion matrices and support-weighted one-vs-rest metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `q x q` counts; rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    q: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(q: usize) -> Self {
        Self { q, counts: vec![0; q * q] }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let q = rows.len();
        assert!(rows.iter().all(|r| r.len() == q), "confusion matrix must be square");
        Self { q, counts: rows.concat() }
    }

    pub fn from_predictions(truth: &[u32], predicted: &[u32], q: usize) -> Self {
        let mut m = Self::new(q);
        for (&t, &p) in truth.iter().zip(predicted) {
            m.record(t, p);
        }
        m
    }

    pub fn record(&mut self, truth: u32, predicted: u32) {
        self.counts[truth as usize * self.q + predicted as usize] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.q, other.q);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn n_classes(&self) -> usize {
        self.q
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.q + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.q).map(|c| self.get(c, c)).sum()
    }

    /// True-instance count of `class`.
    pub fn support(&self, class: usize) -> u64 {
        (0..self.q).map(|p| self.get(class, p)).sum()
    }

    pub fn one_vs_rest(&self, class: usize) -> BinaryCounts {
        let tp = self.get(class, class);
        let support = self.support(class);
        let predicted = (0..self.q).map(|t| self.get(t, class)).sum::<u64>();
        let fp = predicted - tp;
        let fn_ = support - tp;
        BinaryCounts { tp, fp, fn_, tn: self.total() - tp - fp - fn_ }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BinaryCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl BinaryCounts {
    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.tp + self.fp + self.fn_ + self.tn)
    }
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
    pub fn fpr(&self) -> f64 {
        ratio(self.fp, self.fp + self.tn)
    }
    pub fn fnr(&self) -> f64 {
        ratio(self.fn_, self.fn_ + self.tp)
    }
}

/// Fractions in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub f1: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub fpr: f64,
    pub fnr: f64,
}

pub const METRIC_NAMES: [&str; 6] = ["F1", "Accuracy", "Precision", "Recall", "FPR", "FNR"];

impl MetricsReport {
    /// Values in [`METRIC_NAMES`] order.
    pub fn values(&self) -> [f64; 6] {
        [self.f1, self.accuracy, self.precision, self.recall, self.fpr, self.fnr]
    }

    /// Percentages rounded to two decimals.
    pub fn percent(&self) -> [f64; 6] {
        self.values().map(|v| (v * 10_000.0).round() / 100.0)
    }
}

/// Per-class one-vs-rest metrics averaged with weights equal to class support;
/// accuracy is `trace / total`. Undefined per-class ratios count as 0.
pub fn weighted_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Metrics("confusion matrix is empty".into()));
    }
    let n = total as f64;
    let mut acc = [0.0f64; 5];
    for c in 0..cm.n_classes() {
        let support = cm.support(c);
        if support == 0 {
            continue;
        }
        let b = cm.one_vs_rest(c);
        let w = support as f64;
        for (a, v) in acc.iter_mut().zip([b.f1(), b.precision(), b.recall(), b.fpr(), b.fnr()]) {
            *a += w * v;
        }
    }
    Ok(MetricsReport {
        f1: acc[0] / n,
        accuracy: cm.trace() as f64 / n,
        precision: acc[1] / n,
        recall: acc[2] / n,
        fpr: acc[3] / n,
        fnr: acc[4] / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binary_arithmetic() {
        let b = BinaryCounts { tp: 9, fp: 1, fn_: 1, tn: 89 };
        assert!((b.precision() - 0.9).abs() < 1e-15);
        assert!((b.recall() - 0.9).abs() < 1e-15);
        assert!((b.f1() - 0.9).abs() < 1e-15);
        assert!((b.fpr() - 1.0 / 90.0).abs() < 1e-15);
        assert!((b.fnr() - 0.1).abs() < 1e-15);
        assert!((b.accuracy() - 0.98).abs() < 1e-15);
    }

    #[test]
    fn perfect_diagonal() {
        let cm = ConfusionMatrix::from_rows(&[vec![3, 0, 0], vec![0, 5, 0], vec![0, 0, 2]]);
        let m = weighted_metrics(&cm).unwrap();
        assert_eq!((m.accuracy, m.recall, m.precision, m.f1), (1.0, 1.0, 1.0, 1.0));
        assert_eq!((m.fpr, m.fnr), (0.0, 0.0));
    }

    #[test]
    fn three_class_hand_count() {
        // Rows truth, columns prediction.
        let cm = ConfusionMatrix::from_rows(&[vec![2, 1, 0], vec![0, 3, 0], vec![1, 0, 3]]);
        // Hand count: class 0 tp2 fp1 fn1 tn6; class 1 tp3 fp1 fn0 tn6; class 2 tp3 fp0 fn1 tn6.
        assert_eq!(cm.one_vs_rest(0), BinaryCounts { tp: 2, fp: 1, fn_: 1, tn: 6 });
        assert_eq!(cm.one_vs_rest(1), BinaryCounts { tp: 3, fp: 1, fn_: 0, tn: 6 });
        assert_eq!(cm.one_vs_rest(2), BinaryCounts { tp: 3, fp: 0, fn_: 1, tn: 6 });
        let m = weighted_metrics(&cm).unwrap();
        let (w0, w1, w2) = (3.0 / 10.0, 3.0 / 10.0, 4.0 / 10.0);
        let p = w0 * (2.0 / 3.0) + w1 * (3.0 / 4.0) + w2 * 1.0;
        let r = w0 * (2.0 / 3.0) + w1 * 1.0 + w2 * (3.0 / 4.0);
        let f1 = w0 * (2.0 / 3.0) + w1 * (6.0 / 7.0) + w2 * (6.0 / 7.0);
        let fpr = w0 * (1.0 / 7.0) + w1 * (1.0 / 7.0) + w2 * 0.0;
        let fnr = w0 * (1.0 / 3.0) + w1 * 0.0 + w2 * (1.0 / 4.0);
        for (got, want) in [(m.precision, p), (m.recall, r), (m.f1, f1), (m.fpr, fpr), (m.fnr, fnr), (m.accuracy, 0.8)] {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn absent_class_contributes_nothing() {
        // Class 2 never occurs but is predicted once.
        let cm = ConfusionMatrix::from_rows(&[vec![4, 0, 1], vec![0, 5, 0], vec![0, 0, 0]]);
        let m = weighted_metrics(&cm).unwrap();
        assert!((m.accuracy - 0.9).abs() < 1e-15);
        assert!((m.recall - m.accuracy).abs() < 1e-15);
    }

    #[test]
    fn empty_matrix_errors() {
        assert!(weighted_metrics(&ConfusionMatrix::new(3)).is_err());
    }

    #[test]
    fn percent_rounding() {
        let m = MetricsReport { f1: 0.99424, accuracy: 0.99426, precision: 1.0, recall: 0.0, fpr: 1e-4, fnr: 0.000049 };
        assert_eq!(m.percent(), [99.42, 99.43, 100.0, 0.0, 0.01, 0.0]);
    }

    fn matrices() -> impl Strategy<Value = ConfusionMatrix> {
        (1usize..6).prop_flat_map(|q| {
            prop::collection::vec(prop::collection::vec(0u64..50, q), q)
                .prop_filter("non-empty", |rows| rows.iter().flatten().sum::<u64>() > 0)
                .prop_map(|rows| ConfusionMatrix::from_rows(&rows))
        })
    }

    proptest! {
        #[test]
        fn weighted_recall_is_accuracy(cm in matrices()) {
            let m = weighted_metrics(&cm).unwrap();
            prop_assert!((m.recall - m.accuracy).abs() < 1e-12);
            prop_assert!((m.fnr - (1.0 - m.accuracy)).abs() < 1e-12);
            for v in m.values() {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
        }

        #[test]
        fn per_class_f1_between_precision_and_recall(cm in matrices()) {
            for c in 0..cm.n_classes() {
                let b = cm.one_vs_rest(c);
                let (lo, hi) = if b.precision() < b.recall() { (b.precision(), b.recall()) } else { (b.recall(), b.precision()) };
                prop_assert!(b.f1() >= lo - 1e-12 && b.f1() <= hi + 1e-12);
                prop_assert_eq!(b.tp + b.fp + b.fn_ + b.tn, cm.total());
            }
        }
    }
}

//! Node split search on Gini impurity.
//!
//! Class counts are integer (bootstrap multiplicities act as weights), so
//! candidate splits are compared as exact rationals: identical data always
//! yields the identical split, independent of evaluation order.

use std::cmp::Ordering;

use rand::Rng;

/// Read-only view of a training table.
#[derive(Debug, Clone, Copy)]
pub struct TrainingData<'a> {
    /// Row-major, `n_features` values per row.
    pub x: &'a [f64],
    pub n_features: usize,
    /// Encoded class per row, each `< n_classes`.
    pub y: &'a [u32],
    pub n_classes: usize,
}

impl<'a> TrainingData<'a> {
    pub fn new(x: &'a [f64], n_features: usize, y: &'a [u32], n_classes: usize) -> Self {
        debug_assert_eq!(x.len(), y.len() * n_features);
        Self { x, n_features, y, n_classes }
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.x[row * self.n_features + feature]
    }
}

/// A chosen split: rows with `value <= threshold` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// Weighted Gini impurity decrease, always > 0.
    pub gain: f64,
}

/// Weighted class counts of a node or of one side of a split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct ClassCounts {
    pub counts: Vec<u64>,
    pub total: u64,
    /// Sum of squared counts.
    pub sumsq: u64,
}

impl ClassCounts {
    pub fn zeros(n_classes: usize) -> Self {
        Self { counts: vec![0; n_classes], total: 0, sumsq: 0 }
    }

    pub fn of_rows(data: &TrainingData, rows: &[usize], weights: &[u32]) -> Self {
        let mut c = Self::zeros(data.n_classes);
        for &r in rows {
            c.add(data.y[r] as usize, weights[r] as u64);
        }
        c
    }

    #[inline]
    pub fn add(&mut self, class: usize, w: u64) {
        let before = self.counts[class];
        self.sumsq += 2 * before * w + w * w;
        self.counts[class] = before + w;
        self.total += w;
    }

    #[inline]
    pub fn remove(&mut self, class: usize, w: u64) {
        let before = self.counts[class];
        self.sumsq = self.sumsq + w * w - 2 * before * w;
        self.counts[class] = before - w;
        self.total -= w;
    }

    pub fn is_pure(&self) -> bool {
        self.counts.iter().filter(|&&c| c > 0).count() <= 1
    }
}

/// `sumsq_l / w_l + sumsq_r / w_r` held as an exact fraction.
/// Larger is better: it is `W * (1 - weighted child Gini)`.
#[derive(Debug, Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn of(left: &ClassCounts, right: &ClassCounts) -> Self {
        let (sl, wl) = (left.sumsq as u128, left.total as u128);
        let (sr, wr) = (right.sumsq as u128, right.total as u128);
        Self { num: sl * wr + sr * wl, den: wl * wr }
    }

    fn cmp(&self, other: &Score) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }

    /// True when the split strictly lowers impurity below the parent's.
    fn improves(&self, parent: &ClassCounts) -> bool {
        self.num * parent.total as u128 > parent.sumsq as u128 * self.den
    }

    fn gain(&self, parent: &ClassCounts) -> f64 {
        let w = parent.total as f64;
        (self.num as f64 / self.den as f64 - parent.sumsq as f64 / w) / w
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    score: Score,
}

impl Candidate {
    /// Higher score wins; ties go to the lower feature index, then the lower threshold.
    fn beats(&self, other: &Candidate) -> bool {
        match self.score.cmp(&other.score) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => {
                self.feature < other.feature
                    || (self.feature == other.feature && self.threshold < other.threshold)
            }
        }
    }
}

fn offer(best: &mut Option<Candidate>, c: Candidate) {
    if best.as_ref().is_none_or(|b| c.beats(b)) {
        *best = Some(c);
    }
}

fn finish(best: Option<Candidate>, parent: &ClassCounts) -> Option<Split> {
    best.filter(|c| c.score.improves(parent)).map(|c| Split {
        feature: c.feature,
        threshold: c.threshold,
        gain: c.score.gain(parent),
    })
}

/// Midpoint of two consecutive distinct values, kept strictly below `hi`.
fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid < hi {
        mid
    } else {
        lo
    }
}

/// Reusable buffers for split search within one tree.
pub(crate) struct Splitter {
    sorted: Vec<(f64, u32, u32)>,
    left: ClassCounts,
    right: ClassCounts,
    order: Vec<usize>,
}

/// How candidate features are chosen at each node.
#[derive(Debug, Clone, Copy)]
pub(crate) struct FeatureSampling {
    /// Stop after this many non-constant features have been scored.
    pub max_features: usize,
    /// Visit features in a fresh random order per node.
    pub shuffle: bool,
}

impl Splitter {
    pub fn new(n_features: usize, n_classes: usize) -> Self {
        Self {
            sorted: Vec::new(),
            left: ClassCounts::zeros(n_classes),
            right: ClassCounts::zeros(n_classes),
            order: (0..n_features).collect(),
        }
    }

    /// Best threshold of one feature by exhaustive sweep; `None` if the
    /// feature is constant in the node.
    fn best_threshold(
        &mut self,
        data: &TrainingData,
        rows: &[usize],
        weights: &[u32],
        parent: &ClassCounts,
        feature: usize,
    ) -> Option<Option<Candidate>> {
        self.sorted.clear();
        self.sorted
            .extend(rows.iter().map(|&r| (data.value(r, feature), data.y[r], weights[r])));
        self.sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        if self.sorted.first()?.0 == self.sorted.last()?.0 {
            return None;
        }
        self.left.counts.fill(0);
        self.left.total = 0;
        self.left.sumsq = 0;
        self.right.clone_from(parent);
        let mut best = None;
        for k in 0..self.sorted.len() - 1 {
            let (v, class, w) = self.sorted[k];
            self.left.add(class as usize, w as u64);
            self.right.remove(class as usize, w as u64);
            let next = self.sorted[k + 1].0;
            if v < next {
                offer(
                    &mut best,
                    Candidate {
                        feature,
                        threshold: midpoint(v, next),
                        score: Score::of(&self.left, &self.right),
                    },
                );
            }
        }
        Some(best)
    }

    /// One uniformly drawn threshold strictly inside the node-local range;
    /// `None` if the feature is constant in the node.
    fn random_threshold(
        &mut self,
        data: &TrainingData,
        rows: &[usize],
        weights: &[u32],
        parent: &ClassCounts,
        feature: usize,
        rng: &mut impl Rng,
    ) -> Option<Candidate> {
        let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            let v = data.value(r, feature);
            (lo.min(v), hi.max(v))
        });
        if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return None;
        }
        let mut threshold = rng.random_range(lo..hi);
        while threshold <= lo {
            threshold = rng.random_range(lo..hi);
        }
        self.left.counts.fill(0);
        self.left.total = 0;
        self.left.sumsq = 0;
        for &r in rows {
            if data.value(r, feature) <= threshold {
                self.left.add(data.y[r] as usize, weights[r] as u64);
            }
        }
        self.right.clone_from(parent);
        for (c, &n) in self.left.counts.iter().enumerate() {
            if n > 0 {
                self.right.remove(c, n);
            }
        }
        Some(Candidate { feature, threshold, score: Score::of(&self.left, &self.right) })
    }

    /// Scores features in sampling order until `max_features` non-constant
    /// ones have been seen, keeping the best.
    #[allow(clippy::too_many_arguments)]
    pub fn split_node(
        &mut self,
        data: &TrainingData,
        rows: &[usize],
        weights: &[u32],
        parent: &ClassCounts,
        sampling: FeatureSampling,
        random_thresholds: bool,
        rng: &mut impl Rng,
    ) -> Option<Split> {
        let n = data.n_features;
        for (k, slot) in self.order.iter_mut().enumerate() {
            *slot = k;
        }
        let mut best = None;
        let mut scored = 0;
        for k in 0..n {
            if scored >= sampling.max_features {
                break;
            }
            if sampling.shuffle {
                let j = rng.random_range(k..n);
                self.order.swap(k, j);
            }
            let feature = self.order[k];
            if random_thresholds {
                if let Some(c) = self.random_threshold(data, rows, weights, parent, feature, rng) {
                    scored += 1;
                    offer(&mut best, c);
                }
            } else if let Some(c) = self.best_threshold(data, rows, weights, parent, feature) {
                scored += 1;
                if let Some(c) = c {
                    offer(&mut best, c);
                }
            }
        }
        finish(best, parent)
    }
}

fn unit_weights(data: &TrainingData) -> Vec<u32> {
    vec![1; data.n_rows()]
}

/// Exhaustive Gini split over `features` for the rows in `rows` (unit weights).
///
/// Returns `None` when the node is pure or no threshold lowers impurity.
pub fn find_optimal_split(data: &TrainingData, rows: &[usize], features: &[usize]) -> Option<Split> {
    let weights = unit_weights(data);
    let parent = ClassCounts::of_rows(data, rows, &weights);
    if parent.is_pure() {
        return None;
    }
    let mut splitter = Splitter::new(data.n_features, data.n_classes);
    let mut best = None;
    for &f in features {
        if let Some(Some(c)) = splitter.best_threshold(data, rows, &weights, &parent, f) {
            offer(&mut best, c);
        }
    }
    finish(best, &parent)
}

/// One random threshold per feature in `features`, best one kept (unit weights).
pub fn find_random_split(
    data: &TrainingData,
    rows: &[usize],
    features: &[usize],
    rng: &mut impl Rng,
) -> Option<Split> {
    let weights = unit_weights(data);
    let parent = ClassCounts::of_rows(data, rows, &weights);
    if parent.is_pure() {
        return None;
    }
    let mut splitter = Splitter::new(data.n_features, data.n_classes);
    let mut best = None;
    for &f in features {
        if let Some(c) = splitter.random_threshold(data, rows, &weights, &parent, f, rng) {
            offer(&mut best, c);
        }
    }
    finish(best, &parent)
}

/// `n` row positions drawn uniformly with replacement.
pub fn bootstrap_sample(n: usize, rng: &mut impl Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gini(labels: &[u32], q: usize) -> f64 {
        if labels.is_empty() {
            return 0.0;
        }
        let n = labels.len() as f64;
        let mut counts = vec![0.0; q];
        for &l in labels {
            counts[l as usize] += 1.0;
        }
        1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>()
    }

    /// Every (feature, threshold) pair scored from scratch.
    fn brute_force(x: &[f64], nf: usize, y: &[u32], q: usize) -> (usize, f64, f64) {
        let n = y.len();
        let parent = gini(y, q);
        let mut best = (usize::MAX, f64::NAN, f64::NEG_INFINITY);
        for f in 0..nf {
            let mut vals: Vec<f64> = (0..n).map(|r| x[r * nf + f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for w in vals.windows(2) {
                let t = (w[0] + w[1]) / 2.0;
                let (l, r): (Vec<u32>, Vec<u32>) = {
                    let mut l = vec![];
                    let mut r = vec![];
                    for row in 0..n {
                        if x[row * nf + f] <= t { l.push(y[row]) } else { r.push(y[row]) }
                    }
                    (l, r)
                };
                let g = parent
                    - l.len() as f64 / n as f64 * gini(&l, q)
                    - r.len() as f64 / n as f64 * gini(&r, q);
                if g > best.2 + 1e-12 {
                    best = (f, t, g);
                }
            }
        }
        best
    }

    #[test]
    fn perfect_separator() {
        let x = [0.0, 0.0, 1.0, 1.0];
        let y = [0, 0, 1, 1];
        let data = TrainingData::new(&x, 1, &y, 2);
        let s = find_optimal_split(&data, &[0, 1, 2, 3], &[0]).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 0.5);
        assert!((s.gain - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pure_node_has_no_split() {
        let x = [0.0, 1.0, 2.0];
        let y = [1, 1, 1];
        let data = TrainingData::new(&x, 1, &y, 2);
        assert!(find_optimal_split(&data, &[0, 1, 2], &[0]).is_none());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(find_random_split(&data, &[0, 1, 2], &[0], &mut rng).is_none());
    }

    #[test]
    fn zero_gain_cut_is_rejected() {
        // Every cut leaves both sides with the parent's class mix or worse.
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0, 1, 1, 0];
        let data = TrainingData::new(&x, 1, &y, 2);
        let s = find_optimal_split(&data, &[0, 1, 2, 3], &[0]).unwrap();
        // Cutting off one end does lower Gini here; gain must be positive.
        assert!(s.gain > 0.0);
        let y = [0, 1, 0, 1];
        let x = [0.0, 0.0, 1.0, 1.0];
        let data = TrainingData::new(&x, 1, &y, 2);
        assert!(find_optimal_split(&data, &[0, 1, 2, 3], &[0]).is_none());
    }

    #[test]
    fn matches_brute_force_on_toy_table() {
        // Two features, six rows; the oracle enumerates every cut.
        let x = [
            2.0, 7.0, //
            3.5, 1.0, //
            1.0, 4.0, //
            4.0, 6.5, //
            5.0, 2.0, //
            2.5, 5.0,
        ];
        let y = [0, 1, 0, 0, 1, 1];
        let data = TrainingData::new(&x, 2, &y, 2);
        let rows: Vec<usize> = (0..6).collect();
        let got = find_optimal_split(&data, &rows, &[0, 1]).unwrap();
        let (f, t, g) = brute_force(&x, 2, &y, 2);
        assert_eq!((got.feature, got.threshold), (f, t));
        assert!((got.gain - g).abs() < 1e-12);
    }

    #[test]
    fn matches_brute_force_on_random_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(2..30);
            let nf = rng.random_range(1..4);
            let q = rng.random_range(2..4);
            let x: Vec<f64> = (0..n * nf).map(|_| rng.random_range(0..8) as f64).collect();
            let y: Vec<u32> = (0..n).map(|_| rng.random_range(0..q) as u32).collect();
            let data = TrainingData::new(&x, nf, &y, q);
            let rows: Vec<usize> = (0..n).collect();
            let feats: Vec<usize> = (0..nf).collect();
            let got = find_optimal_split(&data, &rows, &feats);
            let (_, _, g) = brute_force(&x, nf, &y, q);
            match got {
                Some(s) => assert!((s.gain - g).abs() < 1e-12, "{} vs {g}", s.gain),
                None => assert!(g <= 1e-12 || g == f64::NEG_INFINITY, "missed gain {g}"),
            }
        }
    }

    #[test]
    fn ties_prefer_lower_feature_then_lower_threshold() {
        // Feature 1 duplicates feature 0: same gain, feature 0 must win.
        let x = [0.0, 0.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        let y = [0, 0, 1, 1];
        let data = TrainingData::new(&x, 2, &y, 2);
        let s = find_optimal_split(&data, &[0, 1, 2, 3], &[1, 0]).unwrap();
        assert_eq!(s.feature, 0);
        // Symmetric labels: cuts at 0.5 and 2.5 tie; the lower one is kept.
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [0, 1, 1, 0];
        let data = TrainingData::new(&x, 1, &y, 2);
        let s = find_optimal_split(&data, &[0, 1, 2, 3], &[0]).unwrap();
        assert_eq!(s.threshold, 0.5);
    }

    #[test]
    fn random_threshold_within_node_range() {
        let x = [2.0, 4.0, 3.0, 2.5];
        let y = [0, 1, 1, 0];
        let data = TrainingData::new(&x, 1, &y, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            if let Some(s) = find_random_split(&data, &[0, 1, 2, 3], &[0], &mut rng) {
                assert!(s.threshold > 2.0 && s.threshold < 4.0);
            }
        }
    }

    #[test]
    fn random_split_skips_constant_feature() {
        let x = [1.0, 0.0, 1.0, 5.0, 1.0, 9.0];
        let y = [0, 1, 0];
        let data = TrainingData::new(&x, 2, &y, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(find_random_split(&data, &[0, 1, 2], &[0], &mut rng).is_none());
        let s = find_random_split(&data, &[0, 1, 2], &[0, 1], &mut rng).unwrap();
        assert_eq!(s.feature, 1);
    }

    #[test]
    fn random_split_is_reproducible() {
        let x: Vec<f64> = (0..40).map(|i| ((i * 7) % 13) as f64).collect();
        let y: Vec<u32> = (0..20).map(|i| (i % 3) as u32).collect();
        let data = TrainingData::new(&x, 2, &y, 3);
        let rows: Vec<usize> = (0..20).collect();
        let a = find_random_split(&data, &rows, &[0, 1], &mut ChaCha8Rng::seed_from_u64(9));
        let b = find_random_split(&data, &rows, &[0, 1], &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn bootstrap_range_and_determinism() {
        let d = bootstrap_sample(5, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(d.len(), 5);
        assert!(d.iter().all(|&p| p < 5));
        assert_eq!(d, bootstrap_sample(5, &mut ChaCha8Rng::seed_from_u64(1)));
    }

    #[test]
    fn bootstrap_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut freq = [0usize; 10];
        let draws = 1000;
        for _ in 0..draws {
            for p in bootstrap_sample(10, &mut rng) {
                freq[p] += 1;
            }
        }
        for f in freq {
            let share = f as f64 / (draws * 10) as f64;
            assert!((0.05..=0.15).contains(&share), "{share}");
        }
    }

    #[test]
    fn midpoint_stays_below_upper_value() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let m = midpoint(lo, hi);
        assert!(m >= lo && m < hi);
        assert_eq!(midpoint(1.0, 2.0), 1.5);
    }

    #[test]
    fn class_counts_incremental_sumsq() {
        let mut c = ClassCounts::zeros(3);
        c.add(0, 2);
        c.add(1, 3);
        c.add(0, 1);
        assert_eq!(c.sumsq, 9 + 9);
        c.remove(1, 2);
        assert_eq!(c.sumsq, 9 + 1);
        assert_eq!(c.total, 4);
    }
}

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Fold index of every row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub seed: u64,
    pub folds: Vec<usize>,
    /// One message per class with fewer rows than folds.
    pub warnings: Vec<String>,
}

impl FoldAssignment {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&r| self.folds[r] == fold).collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&r| self.folds[r] != fold).collect()
    }

    /// `counts[class][fold]`.
    pub fn class_fold_counts(&self, codes: &[u32], n_classes: usize) -> Vec<Vec<usize>> {
        let mut counts = vec![vec![0; self.k]; n_classes];
        for (&c, &f) in codes.iter().zip(&self.folds) {
            counts[c as usize][f] += 1;
        }
        counts
    }
}

/// Stratified k-fold assignment.
///
/// Rows are shuffled with `seed`, then each class's rows are dealt
/// round-robin over the folds. Each class starts where the previous class
/// stopped, so fold sizes stay balanced overall as well as per class.
pub fn stratified_folds(codes: &[u32], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    let n_classes = codes.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
    let mut sizes = vec![0usize; n_classes];
    for &c in codes {
        sizes[c as usize] += 1;
    }
    let mut next = Vec::with_capacity(n_classes);
    let mut offset = 0;
    let mut warnings = Vec::new();
    for (c, &m) in sizes.iter().enumerate() {
        next.push(offset % k);
        offset += m;
        if m > 0 && m < k {
            let msg = format!("class {c} has {m} rows; {} of {k} folds will not contain it", k - m);
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    let mut order: Vec<usize> = (0..codes.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut folds = vec![0; codes.len()];
    for r in order {
        let c = codes[r] as usize;
        folds[r] = next[c];
        next[c] = (next[c] + 1) % k;
    }
    Ok(FoldAssignment { k, seed, folds, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn exact_division() {
        let codes: Vec<u32> = [vec![0; 8], vec![1; 4]].concat();
        let a = stratified_folds(&codes, 4, 1).unwrap();
        for f in 0..4 {
            let test = a.test_rows(f);
            assert_eq!(test.iter().filter(|&&r| codes[r] == 0).count(), 2);
            assert_eq!(test.iter().filter(|&&r| codes[r] == 1).count(), 1);
        }
        assert!(a.warnings.is_empty());
    }

    #[test]
    fn small_class_spreads_over_distinct_folds() {
        let codes: Vec<u32> = [vec![0; 50], vec![1; 3]].concat();
        let a = stratified_folds(&codes, 10, 7).unwrap();
        let mut folds: Vec<usize> = (50..53).map(|r| a.folds[r]).collect();
        folds.sort_unstable();
        folds.dedup();
        assert_eq!(folds.len(), 3);
        assert_eq!(a.warnings.len(), 1);
        assert!(a.warnings[0].contains("7 of 10"));
    }

    #[test]
    fn seeded() {
        let codes: Vec<u32> = (0..100).map(|i| (i % 7) as u32).collect();
        assert_eq!(stratified_folds(&codes, 5, 3).unwrap(), stratified_folds(&codes, 5, 3).unwrap());
        assert_ne!(stratified_folds(&codes, 5, 3).unwrap().folds, stratified_folds(&codes, 5, 4).unwrap().folds);
    }

    #[test]
    fn rejects_single_fold() {
        assert!(stratified_folds(&[0, 1], 1, 0).is_err());
        assert!(stratified_folds(&[0, 1], 0, 0).is_err());
    }

    #[test]
    fn train_and_test_are_complements() {
        let codes: Vec<u32> = (0..30).map(|i| (i % 4) as u32).collect();
        let a = stratified_folds(&codes, 3, 0).unwrap();
        for f in 0..3 {
            let mut all = [a.test_rows(f), a.train_rows(f)].concat();
            all.sort_unstable();
            assert_eq!(all, (0..30).collect::<Vec<_>>());
        }
    }

    proptest! {
        #[test]
        fn balanced_partition(codes in prop::collection::vec(0u32..6, 1..300), k in 2usize..12, seed: u64) {
            let a = stratified_folds(&codes, k, seed).unwrap();
            prop_assert_eq!(a.folds.len(), codes.len());
            prop_assert!(a.folds.iter().all(|&f| f < k));
            for per_fold in a.class_fold_counts(&codes, 6) {
                let lo = per_fold.iter().min().unwrap();
                let hi = per_fold.iter().max().unwrap();
                prop_assert!(hi - lo <= 1);
            }
        }
    }
}

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalSplit {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    #[serde(default)]
    pub stratify: bool,
}

impl Default for FractionalSplit {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
            stratify: false,
        }
    }
}

impl FractionalSplit {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|f| !(*f >= 0.0)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions must be non-negative and sum to 1, got {parts:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    pub fn apply(&self, ds: &Dataset) -> (Dataset, Dataset, Dataset) {
        (ds.subset(&self.train), ds.subset(&self.val), ds.subset(&self.test))
    }
}

fn cut(idx: &[usize], spec: &FractionalSplit, out: &mut SplitIndices) {
    let n = idx.len() as f64;
    let n_train = ((n * spec.train).round() as usize).min(idx.len());
    let n_val = ((n * spec.val).round() as usize).min(idx.len() - n_train);
    out.train.extend_from_slice(&idx[..n_train]);
    out.val.extend_from_slice(&idx[n_train..n_train + n_val]);
    out.test.extend_from_slice(&idx[n_train + n_val..]);
}

/// Seeded permutation followed by contiguous cuts (per class when
/// stratified). Train and validation sizes are rounded; the test split gets
/// the remainder.
pub fn split_indices(ds: &Dataset, spec: &FractionalSplit, seed: u64) -> Result<SplitIndices> {
    spec.validate()?;
    let mut perm: Vec<usize> = (0..ds.len()).collect();
    perm.shuffle(&mut stream_rng(seed, Stream::Split, 0));
    let mut out = SplitIndices {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    if spec.stratify {
        for class in 0..ds.num_classes() {
            let members: Vec<usize> = perm
                .iter()
                .copied()
                .filter(|&i| ds.labels()[i] == class)
                .collect();
            cut(&members, spec, &mut out);
        }
    } else {
        cut(&perm, spec, &mut out);
    }
    Ok(out)
}

pub fn split_fractional(
    ds: &Dataset,
    spec: &FractionalSplit,
    seed: u64,
) -> Result<(Dataset, Dataset, Dataset)> {
    Ok(split_indices(ds, spec, seed)?.apply(ds))
}

/// Assigns every patient (and all of their instances) to one of `folds`
/// folds. Patients are visited largest first (seeded order among equal
/// sizes) and each goes to the fold where it least increases the squared
/// deviation of per-class counts from the per-fold target; ties go to the
/// smaller fold, then the lower index.
pub fn stratified_group_kfold(ds: &Dataset, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {folds}")));
    }
    let patients = ds
        .patients()
        .ok_or_else(|| Error::Config("grouped k-fold needs patient ids".into()))?;
    let k = ds.num_classes();

    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, &p) in patients.iter().enumerate() {
        groups.entry(p).or_default().push(i);
    }
    let mut order: Vec<(u64, Vec<usize>)> = groups.into_iter().collect();
    order.shuffle(&mut stream_rng(seed, Stream::Split, 1));
    order.sort_by(|a, b| b.1.len().cmp(&a.1.len()));

    let mut totals = vec![0.0; k];
    for &y in ds.labels() {
        totals[y] += 1.0;
    }
    let target: Vec<f64> = totals.iter().map(|t| t / folds as f64).collect();
    let mut counts = vec![vec![0.0; k]; folds];
    let mut sizes = vec![0usize; folds];
    let mut fold_of = vec![0; ds.len()];

    for (_, members) in &order {
        let mut g = vec![0.0; k];
        for &i in members {
            g[ds.labels()[i]] += 1.0;
        }
        let cost = |f: usize| -> f64 {
            (0..k)
                .map(|c| {
                    let before = counts[f][c] - target[c];
                    let after = before + g[c];
                    after * after - before * before
                })
                .sum()
        };
        let best = (0..folds)
            .min_by(|&a, &b| {
                cost(a)
                    .partial_cmp(&cost(b))
                    .unwrap()
                    .then(sizes[a].cmp(&sizes[b]))
                    .then(a.cmp(&b))
            })
            .expect("folds >= 2");
        for c in 0..k {
            counts[best][c] += g[c];
        }
        sizes[best] += members.len();
        for &i in members {
            fold_of[i] = best;
        }
    }
    Ok(fold_of)
}

/// Fold `test_fold` is the test split, the next `val_folds` folds (cyclic)
/// are validation, everything else is training.
pub fn kfold_partition(
    fold_of: &[usize],
    folds: usize,
    val_folds: usize,
    test_fold: usize,
) -> Result<SplitIndices> {
    if test_fold >= folds || val_folds + 2 > folds {
        return Err(Error::Config(format!(
            "cannot take test fold {test_fold} and {val_folds} validation folds out of {folds}"
        )));
    }
    let val: Vec<usize> = (1..=val_folds).map(|o| (test_fold + o) % folds).collect();
    let mut out = SplitIndices {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (i, &f) in fold_of.iter().enumerate() {
        if f == test_fold {
            out.test.push(i);
        } else if val.contains(&f) {
            out.val.push(i);
        } else {
            out.train.push(i);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Matrix;
    use proptest::prelude::*;

    fn dataset(n: usize, labels: impl Fn(usize) -> usize, patients: impl Fn(usize) -> u64) -> Dataset {
        Dataset::new(Matrix::zeros(n, 1), (0..n).map(&labels).collect(), 2)
            .unwrap()
            .with_patients((0..n).map(patients).collect())
            .unwrap()
    }

    fn assert_partition(s: &SplitIndices, n: usize) {
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn eighty_ten_ten_of_ten() {
        let ds = dataset(10, |i| i % 2, |i| i as u64);
        let s = split_indices(&ds, &FractionalSplit::default(), 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (8, 1, 1));
        assert_partition(&s, 10);
        assert_eq!(s, split_indices(&ds, &FractionalSplit::default(), 1).unwrap());
        assert_ne!(s, split_indices(&ds, &FractionalSplit::default(), 2).unwrap());
    }

    #[test]
    fn stratified_split_keeps_prevalence() {
        let ds = dataset(1000, |i| usize::from(i % 10 < 3), |i| i as u64);
        let spec = FractionalSplit {
            stratify: true,
            ..FractionalSplit::default()
        };
        let s = split_indices(&ds, &spec, 3).unwrap();
        assert_partition(&s, 1000);
        let pos = |idx: &[usize]| idx.iter().filter(|&&i| ds.labels()[i] == 1).count();
        assert_eq!(pos(&s.val), 30);
        assert_eq!(pos(&s.test), 30);
    }

    #[test]
    fn bad_fractions_rejected() {
        let ds = dataset(10, |_| 0, |i| i as u64);
        let spec = FractionalSplit {
            train: 0.5,
            val: 0.1,
            test: 0.1,
            stratify: false,
        };
        assert!(split_indices(&ds, &spec, 0).is_err());
    }

    #[test]
    fn singleton_patients_are_stratified() {
        let ds = dataset(1000, |i| i % 2, |i| i as u64);
        let folds = stratified_group_kfold(&ds, 10, 7).unwrap();
        for f in 0..10 {
            let members: Vec<usize> = (0..1000).filter(|&i| folds[i] == f).collect();
            let prev = members.iter().filter(|&&i| ds.labels()[i] == 1).count() as f64 / members.len() as f64;
            assert!((prev - 0.5).abs() <= 0.05, "fold {f} prevalence {prev}");
        }
    }

    #[test]
    fn large_patient_stays_together() {
        // patient 0 owns 30 instances, everyone else one.
        let ds = dataset(200, |i| usize::from(i % 3 == 0), |i| if i < 30 { 0 } else { i as u64 });
        let folds = stratified_group_kfold(&ds, 10, 1).unwrap();
        assert!(folds[..30].iter().all(|&f| f == folds[0]));
    }

    #[test]
    fn fold_sizes_balanced() {
        // 100 patients with 1..=5 instances each.
        let mut pid = Vec::new();
        for p in 0..100u64 {
            for _ in 0..(p % 5 + 1) {
                pid.push(p);
            }
        }
        let n = pid.len();
        let ds = dataset(n, |i| i % 2, |i| pid[i]);
        let folds = stratified_group_kfold(&ds, 10, 4).unwrap();
        for f in 0..10 {
            let size = folds.iter().filter(|&&x| x == f).count() as f64;
            assert!((size - n as f64 / 10.0).abs() <= 0.2 * n as f64 / 10.0, "fold {f} size {size}");
        }
    }

    #[test]
    fn kfold_needs_patients() {
        let ds = Dataset::new(Matrix::zeros(4, 1), vec![0, 1, 0, 1], 2).unwrap();
        assert!(matches!(stratified_group_kfold(&ds, 2, 0), Err(Error::Config(_))));
    }

    #[test]
    fn seven_two_one_partition() {
        let fold_of: Vec<usize> = (0..100).map(|i| i % 10).collect();
        let s = kfold_partition(&fold_of, 10, 2, 9).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (70, 20, 10));
        assert!(s.val.iter().all(|&i| fold_of[i] == 0 || fold_of[i] == 1));
        assert_partition(&s, 100);
        assert!(kfold_partition(&fold_of, 10, 9, 0).is_err());
    }

    proptest! {
        #[test]
        fn splits_partition_and_groups_stay_whole(
            n in 1usize..300,
            group_size in 1usize..6,
            seed in any::<u64>(),
            train in 0.0f64..1.0,
        ) {
            let val = (1.0 - train) / 2.0;
            let spec = FractionalSplit { train, val, test: 1.0 - train - val, stratify: seed % 2 == 0 };
            let ds = dataset(n, |i| (i * 7 + 3) % 2, |i| (i / group_size) as u64);
            let s = split_indices(&ds, &spec, seed).unwrap();
            assert_partition(&s, n);
            let folds = stratified_group_kfold(&ds, 4, seed).unwrap();
            for i in 0..n {
                for j in 0..n {
                    if ds.patients().unwrap()[i] == ds.patients().unwrap()[j] {
                        prop_assert_eq!(folds[i], folds[j]);
                    }
                }
            }
        }
    }
}

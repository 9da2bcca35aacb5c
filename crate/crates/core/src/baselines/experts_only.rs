use rand::Rng as _;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::team::{Assignment, MemberKind};

fn expert_members(ds: &Dataset, purpose: &str) -> Result<(Vec<MemberKind>, Vec<Vec<usize>>)> {
    let table = ds.require_experts(purpose)?;
    if table.num_experts() == 0 {
        return Err(Error::Data(format!("{purpose} needs at least one expert")));
    }
    let members = (0..table.num_experts()).map(MemberKind::Expert).collect();
    Ok((members, table.all().to_vec()))
}

/// Every instance goes to an expert drawn uniformly at random.
pub fn random_expert(ds: &Dataset, seed: u64) -> Result<Assignment> {
    let (members, preds) = expert_members(ds, "random expert allocation")?;
    let m = members.len();
    let mut rng = stream_rng(seed, Stream::RandomExpert, 0);
    let assigned = (0..ds.len()).map(|_| rng.random_range(0..m)).collect();
    Assignment::from_routing(members, assigned, preds)
}

/// Index of the most accurate expert on `ds` (lowest index on ties).
pub fn select_best_expert(ds: &Dataset) -> Result<usize> {
    let table = ds.require_experts("best expert selection")?;
    if table.num_experts() == 0 {
        return Err(Error::Data("best expert selection needs at least one expert".into()));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for j in 0..table.num_experts() {
        let acc = table.accuracy(j, ds.labels());
        if acc > best.1 {
            best = (j, acc);
        }
    }
    Ok(best.0)
}

/// Every instance goes to expert `expert`.
pub fn best_expert(expert: usize, ds: &Dataset) -> Result<Assignment> {
    let (members, preds) = expert_members(ds, "best expert allocation")?;
    if expert >= members.len() {
        return Err(Error::Data(format!(
            "expert {expert} out of range for {} experts",
            members.len()
        )));
    }
    Assignment::from_routing(members, vec![expert; ds.len()], preds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experts::ExpertPredictionTable;
    use crate::nn::Matrix;
    use crate::team::accuracy;

    /// Experts with exact accuracies `accs` on `n` instances of label 0.
    fn fixture(n: usize, accs: &[f64]) -> Dataset {
        let preds = accs
            .iter()
            .map(|a| (0..n).map(|i| usize::from(i as f64 >= a * n as f64)).collect())
            .collect();
        Dataset::new(Matrix::zeros(n, 1), vec![0; n], 2)
            .unwrap()
            .with_expert_predictions(ExpertPredictionTable::new(preds, "").unwrap())
            .unwrap()
    }

    #[test]
    fn single_expert_gets_everything() {
        let ds = fixture(50, &[0.7]);
        assert!(random_expert(&ds, 3).unwrap().assigned.iter().all(|&r| r == 0));
    }

    #[test]
    fn random_mixture_accuracy() {
        // interleave the two experts' errors so position does not matter
        let n = 10_000;
        let good: Vec<usize> = (0..n).map(|i| usize::from(i % 10 == 0)).collect();
        let coin: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let ds = Dataset::new(Matrix::zeros(n, 1), vec![0; n], 2)
            .unwrap()
            .with_expert_predictions(ExpertPredictionTable::new(vec![good, coin], "").unwrap())
            .unwrap();
        let a = random_expert(&ds, 11).unwrap();
        let acc = accuracy(&a.predicted, ds.labels());
        assert!((acc - 0.7).abs() <= 0.02, "accuracy {acc}");
    }

    #[test]
    fn random_assignment_frequencies() {
        let ds = fixture(10_000, &[0.5; 4]);
        let a = random_expert(&ds, 5).unwrap();
        for j in 0..4 {
            let f = a.assigned.iter().filter(|&&r| r == j).count() as f64 / 1e4;
            assert!((f - 0.25).abs() <= 0.03, "expert {j}: {f}");
        }
    }

    #[test]
    fn best_expert_selection() {
        assert_eq!(select_best_expert(&fixture(100, &[0.6, 0.9])).unwrap(), 1);
        assert_eq!(select_best_expert(&fixture(100, &[0.8, 0.8])).unwrap(), 0);
        let a = best_expert(1, &fixture(100, &[0.6, 0.9])).unwrap();
        assert_eq!(accuracy(&a.predicted, &[0; 100]), 0.9);
    }

    #[test]
    fn needs_expert_predictions() {
        let ds = Dataset::new(Matrix::zeros(3, 1), vec![0; 3], 2).unwrap();
        assert!(matches!(random_expert(&ds, 0), Err(Error::Data(_))));
        assert!(matches!(select_best_expert(&ds), Err(Error::Data(_))));
    }
}

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Rng, Stream};

/// Expert that always knows the superclass of its perfect subclasses and
/// guesses uniformly over all superclasses otherwise.
///
/// Subclass IDs are 1-based; `superclass_map[id - 1]` is the 0-based
/// superclass label of subclass `id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubclassExpert {
    pub perfect_subclasses: BTreeSet<usize>,
    pub superclass_map: Vec<usize>,
}

impl SubclassExpert {
    pub fn new(perfect: Vec<usize>, superclass_map: Vec<usize>) -> Result<Self> {
        let len = perfect.len();
        let e = Self {
            perfect_subclasses: perfect.into_iter().collect(),
            superclass_map,
        };
        if e.perfect_subclasses.len() != len {
            return Err(Error::Config("duplicate perfect subclass".into()));
        }
        e.validate()?;
        Ok(e)
    }

    pub fn num_subclasses_total(&self) -> usize {
        self.superclass_map.len()
    }

    pub fn validate(&self) -> Result<()> {
        let total = self.num_subclasses_total();
        if let Some(bad) = self
            .perfect_subclasses
            .iter()
            .find(|&&s| s == 0 || s > total)
        {
            return Err(Error::Config(format!(
                "perfect subclass {bad} outside 1..={total}"
            )));
        }
        Ok(())
    }

    pub fn is_perfect_on(&self, subclass: usize) -> bool {
        self.perfect_subclasses.contains(&subclass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubclassExpertParams {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for SubclassExpertParams {
    fn default() -> Self {
        Self {
            mu: 70.0,
            sigma: 5.0,
        }
    }
}

/// For each expert: `k ~ N(mu, sigma)`, floored and clamped to
/// `[0, total]`, then `k` distinct subclasses drawn without replacement.
pub fn gen_subclass_experts(
    m: usize,
    params: &SubclassExpertParams,
    superclass_map: &[usize],
    seed: u64,
) -> Result<Vec<SubclassExpert>> {
    if m == 0 {
        return Err(Error::Config("need at least one expert".into()));
    }
    if !(params.sigma >= 0.0) || !params.mu.is_finite() {
        return Err(Error::Config(format!(
            "invalid competence distribution N({}, {})",
            params.mu, params.sigma
        )));
    }
    let total = superclass_map.len();
    let mut rng = stream_rng(seed, Stream::ExpertProfile, 1);
    (0..m)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            let k = (params.mu + params.sigma * z).floor().clamp(0.0, total as f64) as usize;
            let perfect = sample(&mut rng, total, k)
                .into_iter()
                .map(|i| i + 1)
                .collect();
            Ok(SubclassExpert {
                perfect_subclasses: perfect,
                superclass_map: superclass_map.to_vec(),
            })
        })
        .collect()
}

pub fn subclass_expert_predict(
    e: &SubclassExpert,
    subclass: usize,
    k_super: usize,
    rng: &mut Rng,
) -> Result<usize> {
    if subclass == 0 || subclass > e.num_subclasses_total() {
        return Err(Error::Data(format!(
            "unknown subclass {subclass} (expert knows 1..={})",
            e.num_subclasses_total()
        )));
    }
    if e.is_perfect_on(subclass) {
        Ok(e.superclass_map[subclass - 1])
    } else {
        Ok(rng.random_range(0..k_super))
    }
}

/// Symmetric-difference size of the two experts' perfect sets.
pub fn diversity(a: &SubclassExpert, b: &SubclassExpert) -> usize {
    a.perfect_subclasses
        .symmetric_difference(&b.perfect_subclasses)
        .count()
}

/// Two experts with `width` perfect subclasses each: the first on
/// `{1, …, width}`, the second on `{i, …, width - 1 + i}`.
pub fn diversity_scenario(
    i: usize,
    width: usize,
    superclass_map: &[usize],
) -> Result<(SubclassExpert, SubclassExpert)> {
    let total = superclass_map.len();
    if width == 0 || width > total || i == 0 || i > total - width + 1 {
        return Err(Error::Config(format!(
            "diversity run {i} outside 1..={} for width {width} over {total} subclasses",
            total.saturating_sub(width) + 1
        )));
    }
    let first = SubclassExpert {
        perfect_subclasses: (1..=width).collect(),
        superclass_map: superclass_map.to_vec(),
    };
    let second = SubclassExpert {
        perfect_subclasses: (i..i + width).collect(),
        superclass_map: superclass_map.to_vec(),
    };
    Ok((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn map100() -> Vec<usize> {
        (0..100).map(|s| s / 5).collect()
    }

    #[test]
    fn degenerate_normal_gives_exact_count() {
        let p = SubclassExpertParams {
            mu: 70.0,
            sigma: 0.0,
        };
        for e in gen_subclass_experts(20, &p, &map100(), 1).unwrap() {
            assert_eq!(e.perfect_subclasses.len(), 70);
            assert!(e.validate().is_ok());
        }
    }

    #[test]
    fn full_competence_is_always_right() {
        let p = SubclassExpertParams {
            mu: 100.0,
            sigma: 0.0,
        };
        let e = &gen_subclass_experts(1, &p, &map100(), 2).unwrap()[0];
        let mut rng = Rng::seed_from_u64(0);
        for s in 1..=100 {
            assert_eq!(subclass_expert_predict(e, s, 20, &mut rng).unwrap(), (s - 1) / 5);
        }
        // Clamp keeps wildly large draws inside the subclass range.
        let big = SubclassExpertParams {
            mu: 500.0,
            sigma: 0.0,
        };
        assert_eq!(gen_subclass_experts(1, &big, &map100(), 2).unwrap()[0].perfect_subclasses.len(), 100);
    }

    #[test]
    fn mean_competence_size() {
        let experts = gen_subclass_experts(1000, &SubclassExpertParams::default(), &map100(), 5).unwrap();
        let mean = experts.iter().map(|e| e.perfect_subclasses.len()).sum::<usize>() as f64 / 1000.0;
        assert!((69.0..=70.5).contains(&mean), "mean {mean}");
    }

    #[test]
    fn prediction_accuracy() {
        let mut rng = Rng::seed_from_u64(17);
        let map = (0..100).map(|s| s % 20).collect::<Vec<_>>();
        let seventy = SubclassExpert::new((1..=70).collect(), map.clone()).unwrap();
        let none = SubclassExpert::new(vec![], map.clone()).unwrap();
        let n = 100_000;
        let mut hits70 = 0;
        let mut hits0 = 0;
        for t in 0..n {
            let s = rng.random_range(1..=100);
            let y = map[s - 1];
            if subclass_expert_predict(&seventy, s, 20, &mut rng).unwrap() == y {
                hits70 += 1;
            }
            if subclass_expert_predict(&none, s, 20, &mut rng).unwrap() == y {
                hits0 += 1;
            }
            if s <= 70 {
                assert_eq!(subclass_expert_predict(&seventy, s, 20, &mut rng).unwrap(), y, "draw {t}");
            }
        }
        let acc70 = hits70 as f64 / n as f64;
        let acc0 = hits0 as f64 / n as f64;
        assert!((acc70 - (0.70 + 0.30 / 20.0)).abs() <= 0.01, "{acc70}");
        assert!((acc0 - 0.05).abs() <= 0.005, "{acc0}");
    }

    #[test]
    fn unknown_subclass_is_error() {
        let e = SubclassExpert::new(vec![1], map100()).unwrap();
        let mut rng = Rng::seed_from_u64(0);
        assert!(subclass_expert_predict(&e, 0, 20, &mut rng).is_err());
        assert!(subclass_expert_predict(&e, 101, 20, &mut rng).is_err());
        assert!(SubclassExpert::new(vec![3, 3], map100()).is_err());
        assert!(SubclassExpert::new(vec![101], map100()).is_err());
    }

    #[test]
    fn diversity_runs() {
        let map = map100();
        for i in 1..=11 {
            let (a, b) = diversity_scenario(i, 90, &map).unwrap();
            assert_eq!(a.perfect_subclasses, (1..=90).collect());
            assert_eq!(b.perfect_subclasses, (i..=89 + i).collect());
            assert_eq!(diversity(&a, &b), 2 * (i - 1));
        }
        let (_, b) = diversity_scenario(11, 90, &map).unwrap();
        assert_eq!(b.perfect_subclasses, (11..=100).collect());
        let (a, b) = diversity_scenario(6, 90, &map).unwrap();
        assert_eq!(diversity(&a, &b), 10);
        assert!(diversity_scenario(0, 90, &map).is_err());
        assert!(diversity_scenario(12, 90, &map).is_err());
    }
}

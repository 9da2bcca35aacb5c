use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Rng, Stream};

const LOWER: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Specialty {
    Group0,
    Group1,
}

/// Expert on a binary task whose accuracy depends on a binary group
/// attribute: `p` on group 0, `q` on group 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DialectExpert {
    pub p: f64,
    pub q: f64,
    pub specialty: Specialty,
}

impl DialectExpert {
    pub fn new(p: f64, q: f64, specialty: Specialty) -> Result<Self> {
        let e = Self { p, q, specialty };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |v: f64| (LOWER..=1.0).contains(&v);
        if !in_range(self.p) || !in_range(self.q) {
            return Err(Error::Config(format!(
                "dialect expert accuracies must lie in [0.6, 1], got p={} q={}",
                self.p, self.q
            )));
        }
        let ordered = match self.specialty {
            Specialty::Group0 => self.q <= self.p,
            Specialty::Group1 => self.p <= self.q,
        };
        if !ordered {
            return Err(Error::Config(format!(
                "{:?} specialist needs its own group to be the stronger one (p={}, q={})",
                self.specialty, self.p, self.q
            )));
        }
        Ok(())
    }

    pub fn accuracy_on(&self, group: u8) -> f64 {
        if group == 0 {
            self.p
        } else {
            self.q
        }
    }
}

fn uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// `⌊3m/4⌋` group-0 specialists followed by `⌈m/4⌉` group-1 specialists.
pub fn gen_dialect_experts(m: usize, seed: u64) -> Result<Vec<DialectExpert>> {
    if m == 0 {
        return Err(Error::Config("need at least one expert".into()));
    }
    let group0 = 3 * m / 4;
    let mut rng = stream_rng(seed, Stream::ExpertProfile, 0);
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let e = if j < group0 {
            let p = uniform(&mut rng, LOWER, 1.0);
            let q = uniform(&mut rng, LOWER, p);
            DialectExpert {
                p,
                q,
                specialty: Specialty::Group0,
            }
        } else {
            let q = uniform(&mut rng, LOWER, 1.0);
            let p = uniform(&mut rng, LOWER, q);
            DialectExpert {
                p,
                q,
                specialty: Specialty::Group1,
            }
        };
        out.push(e);
    }
    Ok(out)
}

/// Returns the true binary label with the group's accuracy, else the flipped
/// label.
pub fn dialect_expert_predict(e: &DialectExpert, true_label: usize, group: u8, rng: &mut Rng) -> usize {
    let correct = rng.random::<f64>() < e.accuracy_on(group);
    if correct {
        true_label
    } else {
        1 - true_label.min(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn specialist_counts() {
        for m in 1..=50 {
            let experts = gen_dialect_experts(m, m as u64).unwrap();
            let g0 = experts.iter().filter(|e| e.specialty == Specialty::Group0).count();
            let g1 = experts.len() - g0;
            assert_eq!(g0, 3 * m / 4);
            assert_eq!(g1, m.div_ceil(4));
            assert_eq!(experts.len(), m);
            assert!(experts.iter().all(|e| e.validate().is_ok()));
        }
        let four = gen_dialect_experts(4, 0).unwrap();
        assert_eq!(four.iter().filter(|e| e.specialty == Specialty::Group0).count(), 3);
        let two = gen_dialect_experts(2, 0).unwrap();
        assert_eq!(two.iter().filter(|e| e.specialty == Specialty::Group0).count(), 1);
    }

    #[test]
    fn group0_specialist_statistics() {
        let mut ps = Vec::new();
        for seed in 0..5_000 {
            for e in gen_dialect_experts(4, seed).unwrap() {
                if e.specialty == Specialty::Group0 {
                    assert!(e.q <= e.p);
                    ps.push(e.p);
                }
            }
            if ps.len() >= 10_000 {
                break;
            }
        }
        assert!(ps.len() >= 10_000);
        let mean = ps.iter().sum::<f64>() / ps.len() as f64;
        assert!((mean - 0.8).abs() <= 0.01, "mean p {mean}");
    }

    #[test]
    fn prediction_accuracy_follows_group() {
        let mut rng = Rng::seed_from_u64(3);
        let perfect = DialectExpert::new(1.0, 0.6, Specialty::Group0).unwrap();
        assert!((0..1000).all(|i| dialect_expert_predict(&perfect, i % 2, 0, &mut rng) == i % 2));

        let weak = DialectExpert::new(0.6, 0.6, Specialty::Group0).unwrap();
        let n = 100_000;
        let hits = (0..n)
            .filter(|i| dialect_expert_predict(&weak, i % 2, 0, &mut rng) == i % 2)
            .count();
        assert!((hits as f64 / n as f64 - 0.6).abs() <= 0.01);

        let g1 = DialectExpert::new(0.95, 0.6, Specialty::Group0).unwrap();
        let hits = (0..n)
            .filter(|i| dialect_expert_predict(&g1, i % 2, 1, &mut rng) == i % 2)
            .count();
        assert!((hits as f64 / n as f64 - 0.6).abs() <= 0.01);
    }

    #[test]
    fn invalid_profiles_rejected() {
        assert!(DialectExpert::new(0.5, 0.7, Specialty::Group1).is_err());
        assert!(DialectExpert::new(0.7, 0.9, Specialty::Group0).is_err());
        assert!(gen_dialect_experts(0, 1).is_err());
    }
}

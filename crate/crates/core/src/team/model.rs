use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{MlpDims, MlpParams, Parameters};
use crate::rng::{stream_rng, Stream};

/// Classifier network(s) plus the allocation network over all team members.
///
/// Team members are ordered `[expert 1, …, expert m, classifier 1, …]`; the
/// allocator's outputs and the columns of the team matrix follow the same
/// order. The standard team has exactly one classifier. A team with several
/// classifiers and no experts, or with experts and no classifier, covers the
/// classifier-only and expert-only variants with the same machinery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamModel {
    num_experts: usize,
    num_classes: usize,
    classifiers: Vec<MlpParams>,
    allocator: MlpParams,
}

impl TeamModel {
    /// `m` experts plus one classifier.
    pub fn new(d: usize, k: usize, m: usize, hidden: usize, seed: u64) -> Result<Self> {
        Self::build(d, k, m, 1, hidden, seed)
    }

    /// `m + 1` independently initialised classifiers and no experts.
    pub fn classifier_team(d: usize, k: usize, m: usize, hidden: usize, seed: u64) -> Result<Self> {
        Self::build(d, k, 0, m + 1, hidden, seed)
    }

    /// `m` experts and no classifier.
    pub fn expert_team(d: usize, k: usize, m: usize, hidden: usize, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("an expert-only team needs at least one expert".into()));
        }
        Self::build(d, k, m, 0, hidden, seed)
    }

    fn build(d: usize, k: usize, m: usize, n_clf: usize, hidden: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {k}")));
        }
        let classifiers = (0..n_clf)
            .map(|j| {
                MlpParams::init(
                    MlpDims::new(d, hidden, k),
                    &mut stream_rng(seed, Stream::ClassifierInit, j as u64),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let allocator = MlpParams::init(
            MlpDims::new(d, hidden, m + n_clf),
            &mut stream_rng(seed, Stream::AllocatorInit, 0),
        )?;
        Ok(Self {
            num_experts: m,
            num_classes: k,
            classifiers,
            allocator,
        })
    }

    pub fn from_parts(
        num_experts: usize,
        num_classes: usize,
        classifiers: Vec<MlpParams>,
        allocator: MlpParams,
    ) -> Result<Self> {
        let model = Self {
            num_experts,
            num_classes,
            classifiers,
            allocator,
        };
        model.validate()?;
        Ok(model)
    }

    /// Assembles parts without validation (gradient containers).
    pub(crate) fn raw(
        num_experts: usize,
        num_classes: usize,
        classifiers: Vec<MlpParams>,
        allocator: MlpParams,
    ) -> Self {
        Self {
            num_experts,
            num_classes,
            classifiers,
            allocator,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.allocator.validate()?;
        let d = self.allocator.input_dim();
        if self.num_members() == 0 {
            return Err(Error::Dimension("team has no members".into()));
        }
        if self.allocator.output_dim() != self.num_members() {
            return Err(Error::Dimension(format!(
                "allocator has {} outputs for {} team members",
                self.allocator.output_dim(),
                self.num_members()
            )));
        }
        for (j, c) in self.classifiers.iter().enumerate() {
            c.validate()?;
            if c.output_dim() != self.num_classes || c.input_dim() != d {
                return Err(Error::Dimension(format!(
                    "classifier {j} maps {} → {}, expected {d} → {}",
                    c.input_dim(),
                    c.output_dim(),
                    self.num_classes
                )));
            }
        }
        Ok(())
    }

    pub fn num_experts(&self) -> usize {
        self.num_experts
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_classifiers(&self) -> usize {
        self.classifiers.len()
    }

    pub fn num_members(&self) -> usize {
        self.num_experts + self.classifiers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.allocator.input_dim()
    }

    /// The first (for the standard team: the only) classifier.
    pub fn classifier(&self) -> Option<&MlpParams> {
        self.classifiers.first()
    }

    pub fn classifiers(&self) -> &[MlpParams] {
        &self.classifiers
    }

    pub fn classifiers_mut(&mut self) -> &mut [MlpParams] {
        &mut self.classifiers
    }

    pub fn allocator(&self) -> &MlpParams {
        &self.allocator
    }

    pub fn allocator_mut(&mut self) -> &mut MlpParams {
        &mut self.allocator
    }

    /// Same shapes, all zeros; the gradient container.
    pub fn zeros_like(&self) -> Self {
        Self {
            num_experts: self.num_experts,
            num_classes: self.num_classes,
            classifiers: self.classifiers.iter().map(|c| MlpParams::zeros(c.dims())).collect(),
            allocator: MlpParams::zeros(self.allocator.dims()),
        }
    }
}

impl Parameters for TeamModel {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t: Vec<&[f64]> = self.classifiers.iter().flat_map(|c| c.tensors()).collect();
        t.extend(self.allocator.tensors());
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t: Vec<&mut [f64]> = self
            .classifiers
            .iter_mut()
            .flat_map(|c| c.tensors_mut())
            .collect();
        t.extend(self.allocator.tensors_mut());
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn member_counts() {
        let t = TeamModel::new(4, 3, 2, 5, 0).unwrap();
        assert_eq!((t.num_members(), t.allocator().output_dim()), (3, 3));
        let c = TeamModel::classifier_team(4, 3, 2, 5, 0).unwrap();
        assert_eq!((c.num_experts(), c.num_classifiers(), c.num_members()), (0, 3, 3));
        let e = TeamModel::expert_team(4, 3, 2, 5, 0).unwrap();
        assert_eq!((e.num_classifiers(), e.num_members()), (0, 2));
        assert!(TeamModel::expert_team(4, 3, 0, 5, 0).is_err());
    }

    #[test]
    fn first_classifier_shared_across_variants() {
        let t = TeamModel::new(4, 3, 0, 5, 9).unwrap();
        let c = TeamModel::classifier_team(4, 3, 0, 5, 9).unwrap();
        assert_eq!(t, c);
        let c2 = TeamModel::classifier_team(4, 3, 2, 5, 9).unwrap();
        assert_eq!(c2.classifiers()[0], t.classifiers()[0]);
        assert_ne!(c2.classifiers()[1], c2.classifiers()[0]);
    }

    #[test]
    fn from_parts_checks_shapes() {
        let t = TeamModel::new(4, 3, 2, 5, 0).unwrap();
        let bad_alloc = MlpParams::zeros(MlpDims::new(4, 5, 2));
        assert!(TeamModel::from_parts(2, 3, t.classifiers().to_vec(), bad_alloc).is_err());
        assert!(TeamModel::from_parts(2, 3, t.classifiers().to_vec(), t.allocator().clone()).is_ok());
    }
}

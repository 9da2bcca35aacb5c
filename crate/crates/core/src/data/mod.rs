//! Datasets with optional subclass, group, patient and expert-prediction
//! columns, plus generators, CSV persistence and split machinery.

mod csv_io;
mod split;
mod synthetic;

pub use csv_io::{load_dataset, load_feature_csv, manifest_path_for, save_dataset, DatasetManifest};
pub use split::{
    kfold_partition, split_fractional, split_indices, stratified_group_kfold, FractionalSplit,
    SplitIndices,
};
pub use synthetic::{gen_binary_group_data, gen_synthetic, BinaryGroupSpec, SyntheticSpec};

use crate::error::{Error, Result};
use crate::experts::ExpertPredictionTable;
use crate::nn::Matrix;

/// Labels and expert predictions are 0-based class indices in memory (files
/// use 1-based values). Subclass IDs are 1-based everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    num_classes: usize,
    subclasses: Option<Vec<usize>>,
    num_subclasses: usize,
    superclass_map: Option<Vec<usize>>,
    groups: Option<Vec<u8>>,
    patients: Option<Vec<u64>>,
    experts: Option<ExpertPredictionTable>,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Config(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if labels.len() != features.rows() {
            return Err(Error::Dimension(format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.rows()
            )));
        }
        if let Some((i, y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(Error::Data(format!(
                "instance {i}: label {} outside 1..={num_classes}",
                y + 1
            )));
        }
        if !features.is_finite() {
            return Err(Error::Data("non-finite feature value".into()));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
            subclasses: None,
            num_subclasses: 0,
            superclass_map: None,
            groups: None,
            patients: None,
            experts: None,
        })
    }

    /// Attaches 1-based subclass IDs in `1..=num_subclasses`. Every subclass
    /// must map to a single label; the induced map is kept.
    pub fn with_subclasses(mut self, subclasses: Vec<usize>, num_subclasses: usize) -> Result<Self> {
        self.check_len(subclasses.len(), "subclass")?;
        let mut map: Vec<Option<usize>> = vec![None; num_subclasses];
        for (i, (&s, &y)) in subclasses.iter().zip(&self.labels).enumerate() {
            if s == 0 || s > num_subclasses {
                return Err(Error::Data(format!(
                    "instance {i}: subclass {s} outside 1..={num_subclasses}"
                )));
            }
            match map[s - 1] {
                None => map[s - 1] = Some(y),
                Some(prev) if prev != y => {
                    return Err(Error::Data(format!(
                        "subclass {s} maps to both label {} and {}",
                        prev + 1,
                        y + 1
                    )))
                }
                _ => {}
            }
        }
        self.superclass_map = Some(map.into_iter().map(|m| m.unwrap_or(0)).collect());
        self.subclasses = Some(subclasses);
        self.num_subclasses = num_subclasses;
        Ok(self)
    }

    /// Replaces the induced subclass→label map with an explicit one (needed
    /// when some subclass has no instances in this dataset).
    pub fn with_superclass_map(mut self, map: Vec<usize>) -> Result<Self> {
        let subs = self
            .subclasses
            .as_ref()
            .ok_or_else(|| Error::Data("superclass map without subclasses".into()))?;
        if map.len() != self.num_subclasses || map.iter().any(|&y| y >= self.num_classes) {
            return Err(Error::Data("superclass map does not fit the dataset".into()));
        }
        if let Some(i) = (0..self.len()).find(|&i| map[subs[i] - 1] != self.labels[i]) {
            return Err(Error::Data(format!(
                "instance {i}: superclass map disagrees with label"
            )));
        }
        self.superclass_map = Some(map);
        Ok(self)
    }

    pub fn with_groups(mut self, groups: Vec<u8>) -> Result<Self> {
        self.check_len(groups.len(), "group")?;
        if let Some(i) = groups.iter().position(|&g| g > 1) {
            return Err(Error::Data(format!("instance {i}: group must be 0 or 1")));
        }
        self.groups = Some(groups);
        Ok(self)
    }

    pub fn with_patients(mut self, patients: Vec<u64>) -> Result<Self> {
        self.check_len(patients.len(), "patient")?;
        self.patients = Some(patients);
        Ok(self)
    }

    pub fn with_expert_predictions(mut self, table: ExpertPredictionTable) -> Result<Self> {
        if let Some(n) = table.num_instances() {
            self.check_len(n, "expert prediction")?;
        }
        for j in 0..table.num_experts() {
            if let Some(i) = table.expert(j).iter().position(|&h| h >= self.num_classes) {
                return Err(Error::Data(format!(
                    "expert {}: prediction {} for instance {i} outside 1..={}",
                    j + 1,
                    table.get(j, i) + 1,
                    self.num_classes
                )));
            }
        }
        self.experts = Some(table);
        Ok(self)
    }

    pub fn without_expert_predictions(mut self) -> Self {
        self.experts = None;
        self
    }

    fn check_len(&self, len: usize, what: &str) -> Result<()> {
        if len != self.len() {
            return Err(Error::Dimension(format!(
                "{len} {what} values for {} instances",
                self.len()
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn subclasses(&self) -> Option<&[usize]> {
        self.subclasses.as_deref()
    }

    pub fn num_subclasses(&self) -> usize {
        self.num_subclasses
    }

    pub fn superclass_map(&self) -> Option<&[usize]> {
        self.superclass_map.as_deref()
    }

    pub fn groups(&self) -> Option<&[u8]> {
        self.groups.as_deref()
    }

    pub fn patients(&self) -> Option<&[u64]> {
        self.patients.as_deref()
    }

    pub fn expert_predictions(&self) -> Option<&ExpertPredictionTable> {
        self.experts.as_ref()
    }

    pub fn num_experts(&self) -> usize {
        self.experts.as_ref().map_or(0, ExpertPredictionTable::num_experts)
    }

    /// Expert predictions, or an error naming `purpose` when absent.
    pub fn require_experts(&self, purpose: &str) -> Result<&ExpertPredictionTable> {
        self.experts
            .as_ref()
            .ok_or_else(|| Error::Data(format!("{purpose} needs expert predictions")))
    }

    /// The instances at `idx`, in that order, with every column carried along.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
            subclasses: self
                .subclasses
                .as_ref()
                .map(|s| idx.iter().map(|&i| s[i]).collect()),
            num_subclasses: self.num_subclasses,
            superclass_map: self.superclass_map.clone(),
            groups: self.groups.as_ref().map(|g| idx.iter().map(|&i| g[i]).collect()),
            patients: self
                .patients
                .as_ref()
                .map(|p| idx.iter().map(|&i| p[i]).collect()),
            experts: self.experts.as_ref().map(|t| t.subset(idx)),
        }
    }

    /// Concatenation of two datasets with the same columns.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset> {
        if self.dim() != other.dim() || self.num_classes != other.num_classes {
            return Err(Error::Dimension("cannot concatenate differently shaped datasets".into()));
        }
        let features = Matrix::from_vec(
            self.len() + other.len(),
            self.dim(),
            [self.features.data(), other.features.data()].concat(),
        )?;
        let cat = |a: &[usize], b: &[usize]| a.iter().chain(b).copied().collect::<Vec<_>>();
        let mut ds = Dataset::new(features, cat(&self.labels, &other.labels), self.num_classes)?;
        if let (Some(a), Some(b)) = (&self.subclasses, &other.subclasses) {
            ds = ds.with_subclasses(cat(a, b), self.num_subclasses)?;
            if let Some(map) = &self.superclass_map {
                ds = ds.with_superclass_map(map.clone())?;
            }
        }
        if let (Some(a), Some(b)) = (&self.groups, &other.groups) {
            ds = ds.with_groups(a.iter().chain(b).copied().collect())?;
        }
        if let (Some(a), Some(b)) = (&self.patients, &other.patients) {
            ds = ds.with_patients(a.iter().chain(b).copied().collect())?;
        }
        if let (Some(a), Some(b)) = (&self.experts, &other.experts) {
            if a.num_experts() != b.num_experts() {
                return Err(Error::Dimension("expert counts differ".into()));
            }
            let preds = (0..a.num_experts())
                .map(|j| cat(a.expert(j), b.expert(j)))
                .collect();
            ds = ds.with_expert_predictions(ExpertPredictionTable::new(preds, a.provenance.clone())?)?;
        }
        Ok(ds)
    }
}

//! Synthetic human experts.
//!
//! Two competence models are provided. Dialect experts are correct with a
//! group-dependent probability on a binary task. Subclass experts are perfect
//! on a fixed set of subclasses and guess uniformly over all superclasses
//! everywhere else. Predictions are materialised once per dataset into an
//! [`ExpertPredictionTable`] and then treated as fixed data.

mod dialect;
mod profile;
mod subclass;

use serde::{Deserialize, Serialize};

pub use dialect::{dialect_expert_predict, gen_dialect_experts, DialectExpert, Specialty};
pub use profile::{ExpertProfile, ExpertRoster};
pub use subclass::{
    diversity, diversity_scenario, gen_subclass_experts, subclass_expert_predict,
    SubclassExpert, SubclassExpertParams,
};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Hard predictions of every expert on every instance, 0-based labels,
/// stored expert-major (`predictions[j][i]`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpertPredictionTable {
    predictions: Vec<Vec<usize>>,
    #[serde(default)]
    pub provenance: String,
}

impl ExpertPredictionTable {
    pub fn new(predictions: Vec<Vec<usize>>, provenance: impl Into<String>) -> Result<Self> {
        if let Some(first) = predictions.first() {
            if predictions.iter().any(|p| p.len() != first.len()) {
                return Err(Error::Data(
                    "every expert needs one prediction per instance".into(),
                ));
            }
        }
        Ok(Self {
            predictions,
            provenance: provenance.into(),
        })
    }

    pub fn num_experts(&self) -> usize {
        self.predictions.len()
    }

    /// Instance count, or `None` for a table without experts.
    pub fn num_instances(&self) -> Option<usize> {
        self.predictions.first().map(Vec::len)
    }

    pub fn expert(&self, j: usize) -> &[usize] {
        &self.predictions[j]
    }

    pub fn all(&self) -> &[Vec<usize>] {
        &self.predictions
    }

    pub fn get(&self, expert: usize, instance: usize) -> usize {
        self.predictions[expert][instance]
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            predictions: self
                .predictions
                .iter()
                .map(|p| idx.iter().map(|&i| p[i]).collect())
                .collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Keeps only the listed experts, in the given order.
    pub fn select_experts(&self, experts: &[usize]) -> Self {
        Self {
            predictions: experts.iter().map(|&j| self.predictions[j].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// Fraction of correct predictions of expert `j`.
    pub fn accuracy(&self, j: usize, labels: &[usize]) -> f64 {
        let p = &self.predictions[j];
        if p.is_empty() {
            return f64::NAN;
        }
        p.iter().zip(labels).filter(|(a, b)| a == b).count() as f64 / p.len() as f64
    }
}

/// Draws every expert's prediction for every instance of `ds`.
///
/// Expert `j` uses its own random stream derived from `(seed, j)`, so the
/// table is a pure function of the roster, the dataset and the seed.
pub fn materialize_predictions(
    experts: &[ExpertProfile],
    ds: &Dataset,
    seed: u64,
) -> Result<ExpertPredictionTable> {
    let n = ds.len();
    let mut predictions = Vec::with_capacity(experts.len());
    for (j, expert) in experts.iter().enumerate() {
        let mut rng = stream_rng(seed, Stream::ExpertPredict, j as u64);
        let preds = match expert {
            ExpertProfile::Dialect(e) => {
                if ds.num_classes() != 2 {
                    return Err(Error::Data(format!(
                        "dialect experts need a binary task, dataset has {} classes",
                        ds.num_classes()
                    )));
                }
                let groups = ds.groups().ok_or_else(|| {
                    Error::Data("dialect experts need a group attribute".into())
                })?;
                (0..n)
                    .map(|i| dialect_expert_predict(e, ds.labels()[i], groups[i], &mut rng))
                    .collect()
            }
            ExpertProfile::Subclass(e) => {
                let subs = ds.subclasses().ok_or_else(|| {
                    Error::Data("subclass experts need subclass labels".into())
                })?;
                (0..n)
                    .map(|i| subclass_expert_predict(e, subs[i], ds.num_classes(), &mut rng))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        predictions.push(preds);
    }
    ExpertPredictionTable::new(predictions, format!("materialized seed={seed} experts={}", experts.len()))
}

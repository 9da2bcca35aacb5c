use serde::{Deserialize, Serialize};

use super::TeamModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::experts::ExpertPredictionTable;
use crate::nn::{argmax, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum MemberKind {
    /// Column `j` of the expert prediction table.
    Expert(usize),
    /// A trained classifier.
    Classifier(usize),
}

impl MemberKind {
    pub fn is_classifier(&self) -> bool {
        matches!(self, MemberKind::Classifier(_))
    }
}

/// Per-instance routing decisions of any allocation policy, together with
/// every member's hard prediction on the same instances. This is the common
/// output every method hands to the evaluator.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub members: Vec<MemberKind>,
    /// Index into `members` for each instance.
    pub assigned: Vec<usize>,
    /// The team's label for each instance.
    pub predicted: Vec<usize>,
    /// `member_predictions[r][i]`: hard prediction of member `r`.
    pub member_predictions: Vec<Vec<usize>>,
}

impl Assignment {
    /// Builds an assignment where each instance's team label is the
    /// prediction of the member it was routed to.
    pub fn from_routing(
        members: Vec<MemberKind>,
        assigned: Vec<usize>,
        member_predictions: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if member_predictions.len() != members.len() {
            return Err(Error::Dimension(format!(
                "{} members but {} prediction columns",
                members.len(),
                member_predictions.len()
            )));
        }
        let n = assigned.len();
        if member_predictions.iter().any(|p| p.len() != n) {
            return Err(Error::Dimension("prediction columns of unequal length".into()));
        }
        let predicted = assigned
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                member_predictions
                    .get(r)
                    .map(|p| p[i])
                    .ok_or_else(|| Error::Data(format!("instance {i} routed to unknown member {r}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            members,
            assigned,
            predicted,
            member_predictions,
        })
    }

    pub fn len(&self) -> usize {
        self.assigned.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assigned.is_empty()
    }

    pub fn num_members(&self) -> usize {
        self.members.len()
    }
}

/// Routing for a batch of feature rows: argmax of the allocator logits
/// (lowest index on ties), then that member's hard prediction.
pub fn team_predict(
    model: &TeamModel,
    x: &Matrix,
    experts: Option<&ExpertPredictionTable>,
) -> Result<Assignment> {
    let m = model.num_experts();
    let n = x.rows();
    let expert_cols: Vec<Vec<usize>> = match experts {
        Some(t) if t.num_experts() == m && t.num_instances().unwrap_or(n) == n => t.all().to_vec(),
        Some(t) if m > 0 => {
            return Err(Error::Data(format!(
                "model routes to {m} experts but the table has {} experts on {:?} instances",
                t.num_experts(),
                t.num_instances()
            )))
        }
        None if m > 0 => {
            return Err(Error::Data(format!(
                "model routes to {m} experts but no expert predictions were given"
            )))
        }
        _ => Vec::new(),
    };
    let logits = model.allocator().logits(x)?;
    let assigned = logits.argmax_rows();
    let mut members: Vec<MemberKind> = (0..m).map(MemberKind::Expert).collect();
    let mut preds = expert_cols;
    for (j, c) in model.classifiers().iter().enumerate() {
        members.push(MemberKind::Classifier(j));
        preds.push(c.logits(x)?.argmax_rows());
    }
    Assignment::from_routing(members, assigned, preds)
}

/// [`team_predict`] over a whole dataset.
pub fn route_dataset(model: &TeamModel, ds: &Dataset) -> Result<Assignment> {
    team_predict(model, ds.features(), ds.expert_predictions())
}

/// Member selected for a single logit row; ties go to the lowest index.
pub fn select_member(allocator_logits: &[f64]) -> usize {
    argmax(allocator_logits)
}

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{argmax, log_sum_exp, sigmoid, softmax, Matrix, MlpDims, MlpParams, Parameters};
use crate::rng::{stream_rng, Stream};
use crate::team::{accuracy, fit, Assignment, MemberKind, Objective, TrainConfig, Trained};

/// One shared hidden layer feeding `m + 1` sigmoid member scores (experts
/// first, classifier last) and a `k`-way label head for the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JsfModel {
    num_experts: usize,
    num_classes: usize,
    net: MlpParams,
}

impl JsfModel {
    pub fn new(d: usize, k: usize, m: usize, hidden: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {k}")));
        }
        let net = MlpParams::init(
            MlpDims::new(d, hidden, m + 1 + k),
            &mut stream_rng(seed, Stream::JsfInit, 0),
        )?;
        Ok(Self {
            num_experts: m,
            num_classes: k,
            net,
        })
    }

    pub fn from_parts(num_experts: usize, num_classes: usize, net: MlpParams) -> Result<Self> {
        net.validate()?;
        if net.output_dim() != num_experts + 1 + num_classes {
            return Err(Error::Dimension(format!(
                "network has {} outputs, expected {} member scores + {} labels",
                net.output_dim(),
                num_experts + 1,
                num_classes
            )));
        }
        Ok(Self {
            num_experts,
            num_classes,
            net,
        })
    }

    pub fn num_experts(&self) -> usize {
        self.num_experts
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn net(&self) -> &MlpParams {
        &self.net
    }

    pub fn num_members(&self) -> usize {
        self.num_experts + 1
    }

    /// Raw outputs: member-score logits and label logits.
    fn split(&self, out: &Matrix) -> (Matrix, Matrix) {
        let (n, members) = (out.rows(), self.num_members());
        let mut scores = Matrix::zeros(n, members);
        let mut labels = Matrix::zeros(n, self.num_classes);
        for i in 0..n {
            let row = out.row(i);
            scores.row_mut(i).copy_from_slice(&row[..members]);
            labels.row_mut(i).copy_from_slice(&row[members..]);
        }
        (scores, labels)
    }

    /// Sigmoid member scores, `n × (m + 1)`.
    pub fn member_scores(&self, x: &Matrix) -> Result<Matrix> {
        let (mut s, _) = self.split(&self.net.logits(x)?);
        s.map_inplace(sigmoid);
        Ok(s)
    }

    /// Hard labels of the classifier member.
    pub fn classifier_labels(&self, x: &Matrix) -> Result<Vec<usize>> {
        Ok(self.split(&self.net.logits(x)?).1.argmax_rows())
    }
}

impl Parameters for JsfModel {
    fn tensors(&self) -> Vec<&[f64]> {
        self.net.tensors()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.net.tensors_mut()
    }
}

/// Per-instance binary targets for the member heads.
pub trait JsfTargets {
    /// Returns an `n × (m + 1)` matrix of targets in `[0, 1]` for every
    /// instance of `train`, given the current model.
    fn targets(&self, model: &JsfModel, train: &Dataset) -> Result<Matrix>;
}

/// Expert heads learn `1[h_j = y]`; the classifier head learns whether the
/// current label head is right.
#[derive(Debug, Clone, Copy, Default)]
pub struct CorrectnessTargets;

impl JsfTargets for CorrectnessTargets {
    fn targets(&self, model: &JsfModel, train: &Dataset) -> Result<Matrix> {
        let m = model.num_experts();
        let y = train.labels();
        let own = model.classifier_labels(train.features())?;
        let mut t = Matrix::zeros(train.len(), m + 1);
        for i in 0..train.len() {
            let row = t.row_mut(i);
            if let Some(table) = train.expert_predictions() {
                for (j, r) in row.iter_mut().take(m).enumerate() {
                    *r = f64::from(u8::from(table.get(j, i) == y[i]));
                }
            }
            row[m] = f64::from(u8::from(own[i] == y[i]));
        }
        Ok(t)
    }
}

pub struct JsfObjective<T: JsfTargets> {
    policy: T,
    targets: Matrix,
}

impl<T: JsfTargets> JsfObjective<T> {
    pub fn new(policy: T) -> Self {
        Self {
            policy,
            targets: Matrix::zeros(0, 0),
        }
    }
}

impl<T: JsfTargets> Objective for JsfObjective<T> {
    type Model = JsfModel;

    fn begin_epoch(&mut self, model: &JsfModel, train: &Dataset) -> Result<()> {
        self.targets = self.policy.targets(model, train)?;
        Ok(())
    }

    /// Summed binary cross-entropy of the member heads plus label
    /// cross-entropy, averaged over the batch.
    fn batch_gradients(&self, model: &JsfModel, train: &Dataset, rows: &[usize]) -> Result<(f64, JsfModel)> {
        if rows.is_empty() {
            return Err(Error::Data("empty minibatch".into()));
        }
        let x = train.features().select_rows(rows);
        let fwd = model.net.forward(&x)?;
        let members = model.num_members();
        let scale = 1.0 / rows.len() as f64;
        let mut d_out = Matrix::zeros(rows.len(), fwd.out.cols());
        let mut total = 0.0;
        for (i, &row) in rows.iter().enumerate() {
            let out = fwd.out.row(i);
            let t = self.targets.row(row);
            let d = d_out.row_mut(i);
            for j in 0..members {
                let s = out[j];
                // log(1 + e^s) - t s, evaluated stably
                total += s.max(0.0) + (-s.abs()).exp().ln_1p() - t[j] * s;
                d[j] = (sigmoid(s) - t[j]) * scale;
            }
            let z = &out[members..];
            let y = train.labels()[row];
            total += log_sum_exp(z) - z[y];
            for (l, p) in softmax(z).into_iter().enumerate() {
                let target = if l == y { 1.0 } else { 0.0 };
                d[members + l] = (p - target) * scale;
            }
        }
        let grads = model.net.backward(&x, &fwd, &d_out)?;
        Ok((
            total * scale,
            JsfModel {
                num_experts: model.num_experts,
                num_classes: model.num_classes,
                net: grads,
            },
        ))
    }

    fn validation_score(&self, model: &JsfModel, val: &Dataset) -> Result<f64> {
        Ok(accuracy(&jsf_predict(model, val)?.predicted, val.labels()))
    }
}

pub fn train_jsf(train: &Dataset, val: &Dataset, cfg: &TrainConfig) -> Result<Trained<JsfModel>> {
    train_jsf_with(train, val, cfg, CorrectnessTargets)
}

pub fn train_jsf_with<T: JsfTargets>(
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
    policy: T,
) -> Result<Trained<JsfModel>> {
    let m = train.num_experts();
    if val.num_experts() != m {
        return Err(Error::Data(format!(
            "training split has {m} experts, validation split has {}",
            val.num_experts()
        )));
    }
    let init = JsfModel::new(train.dim(), train.num_classes(), m, cfg.hidden_units, cfg.seed)?;
    fit(&mut JsfObjective::new(policy), init, train, val, cfg)
}

/// Routes every instance to the member with the highest sigmoid score
/// (lowest index on ties).
pub fn jsf_predict(model: &JsfModel, ds: &Dataset) -> Result<Assignment> {
    let m = model.num_experts();
    if ds.num_experts() != m {
        return Err(Error::Data(format!(
            "model routes to {m} experts, dataset carries {}",
            ds.num_experts()
        )));
    }
    let scores = model.member_scores(ds.features())?;
    let assigned = (0..ds.len()).map(|i| argmax(scores.row(i))).collect();
    let mut members: Vec<MemberKind> = (0..m).map(MemberKind::Expert).collect();
    members.push(MemberKind::Classifier(0));
    let mut preds: Vec<Vec<usize>> = ds.expert_predictions().map(|t| t.all().to_vec()).unwrap_or_default();
    preds.push(model.classifier_labels(ds.features())?);
    Assignment::from_routing(members, assigned, preds)
}

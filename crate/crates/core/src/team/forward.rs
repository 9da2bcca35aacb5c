use super::TeamModel;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{log_sum_exp, softmax_inplace, softmax_rows, Matrix, MlpForward};

/// Lower bound applied to the team probability of the true label before
/// taking its logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// A minibatch: features, true labels and every expert's hard prediction.
/// Labels are class indices; the one-hot views are derived on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamBatch {
    pub x: Matrix,
    pub y: Vec<usize>,
    /// `h[j][i]`: prediction of expert `j` on instance `i`.
    pub h: Vec<Vec<usize>>,
    pub k: usize,
}

impl TeamBatch {
    pub fn new(x: Matrix, y: Vec<usize>, h: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        let n = x.rows();
        if k < 2 {
            return Err(Error::Config(format!("need at least 2 classes, got {k}")));
        }
        if y.len() != n || h.iter().any(|p| p.len() != n) {
            return Err(Error::Dimension(format!(
                "batch of {n} rows has {} labels and expert columns of lengths {:?}",
                y.len(),
                h.iter().map(Vec::len).collect::<Vec<_>>()
            )));
        }
        if y.iter().chain(h.iter().flatten()).any(|&c| c >= k) {
            return Err(Error::Data(format!("class index outside 0..{k}")));
        }
        Ok(Self { x, y, h, k })
    }

    /// Builds a batch from one-hot label and expert-prediction matrices.
    pub fn from_one_hot(x: Matrix, y: &Matrix, h: &[Matrix]) -> Result<Self> {
        let k = y.cols();
        let decode = |m: &Matrix, what: &str| -> Result<Vec<usize>> {
            if m.cols() != k {
                return Err(Error::Dimension(format!("{what} has {} columns, expected {k}", m.cols())));
            }
            (0..m.rows())
                .map(|r| {
                    let row = m.row(r);
                    let ones = row.iter().filter(|&&v| v == 1.0).count();
                    let zeros = row.iter().filter(|&&v| v == 0.0).count();
                    if ones != 1 || ones + zeros != k {
                        return Err(Error::Data(format!("{what} row {r} is not one-hot")));
                    }
                    Ok(row.iter().position(|&v| v == 1.0).unwrap())
                })
                .collect()
        };
        let labels = decode(y, "label matrix")?;
        let experts = h
            .iter()
            .enumerate()
            .map(|(j, m)| decode(m, &format!("expert {j}")))
            .collect::<Result<Vec<_>>>()?;
        Self::new(x, labels, experts, k)
    }

    /// Rows `rows` of a dataset (all rows when `None`).
    pub fn from_dataset(ds: &Dataset, rows: Option<&[usize]>) -> Result<Self> {
        let all: Vec<usize>;
        let rows = match rows {
            Some(r) => r,
            None => {
                all = (0..ds.len()).collect();
                &all
            }
        };
        let h = match ds.expert_predictions() {
            Some(t) => t
                .all()
                .iter()
                .map(|p| rows.iter().map(|&i| p[i]).collect())
                .collect(),
            None => Vec::new(),
        };
        Ok(Self {
            x: ds.features().select_rows(rows),
            y: rows.iter().map(|&i| ds.labels()[i]).collect(),
            h,
            k: ds.num_classes(),
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn num_experts(&self) -> usize {
        self.h.len()
    }

    pub fn one_hot_labels(&self) -> Matrix {
        one_hot(&self.y, self.k)
    }

    pub fn expert_one_hot(&self, j: usize) -> Matrix {
        one_hot(&self.h[j], self.k)
    }
}

fn one_hot(labels: &[usize], k: usize) -> Matrix {
    let mut m = Matrix::zeros(labels.len(), k);
    for (i, &y) in labels.iter().enumerate() {
        m.set(i, y, 1.0);
    }
    m
}

/// Everything computed by the forward pass of the relaxed team prediction.
#[derive(Debug, Clone)]
pub struct TeamForward {
    /// Allocation weights, `batch × members`.
    pub w: Matrix,
    /// Label distribution of each classifier member, `batch × k` each.
    pub c: Vec<Matrix>,
    /// Team label distribution, `batch × k`.
    pub p_team: Matrix,
    pub allocator_logits: Matrix,
    pub classifier_logits: Vec<Matrix>,
    expert_preds: Vec<Vec<usize>>,
    allocator_fwd: MlpForward,
    classifier_fwd: Vec<MlpForward>,
}

impl TeamForward {
    /// Probabilities of the first classifier.
    pub fn classifier_probs(&self) -> Option<&Matrix> {
        self.c.first()
    }

    /// The `k × members` team matrix of instance `i`: one-hot expert columns
    /// followed by the classifier distributions.
    pub fn team_matrix(&self, i: usize) -> Matrix {
        let k = self.p_team.cols();
        let members = self.w.cols();
        let mut t = Matrix::zeros(k, members);
        for (j, preds) in self.expert_preds.iter().enumerate() {
            t.set(preds[i], j, 1.0);
        }
        let m = self.expert_preds.len();
        for (j, c) in self.c.iter().enumerate() {
            for l in 0..k {
                t.set(l, m + j, c.get(i, l));
            }
        }
        t
    }
}

fn check_batch(model: &TeamModel, batch: &TeamBatch) -> Result<()> {
    if batch.num_experts() != model.num_experts() {
        return Err(Error::Dimension(format!(
            "batch carries {} experts, model expects {}",
            batch.num_experts(),
            model.num_experts()
        )));
    }
    if batch.k != model.num_classes() {
        return Err(Error::Dimension(format!(
            "batch has {} classes, model expects {}",
            batch.k,
            model.num_classes()
        )));
    }
    if batch.x.cols() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "batch has {} features, model expects {}",
            batch.x.cols(),
            model.input_dim()
        )));
    }
    Ok(())
}

pub fn team_forward(model: &TeamModel, batch: &TeamBatch) -> Result<TeamForward> {
    check_batch(model, batch)?;
    let allocator_fwd = model.allocator().forward(&batch.x)?;
    let w = softmax_rows(&allocator_fwd.out);
    let classifier_fwd = model
        .classifiers()
        .iter()
        .map(|c| c.forward(&batch.x))
        .collect::<Result<Vec<_>>>()?;
    let c: Vec<Matrix> = classifier_fwd.iter().map(|f| softmax_rows(&f.out)).collect();

    let (n, k, m) = (batch.len(), batch.k, model.num_experts());
    let mut p_team = Matrix::zeros(n, k);
    for i in 0..n {
        let wi = w.row(i);
        let row = p_team.row_mut(i);
        for (j, preds) in batch.h.iter().enumerate() {
            row[preds[i]] += wi[j];
        }
        for (j, cj) in c.iter().enumerate() {
            for (p, cl) in row.iter_mut().zip(cj.row(i)) {
                *p += wi[m + j] * cl;
            }
        }
    }
    Ok(TeamForward {
        allocator_logits: allocator_fwd.out.clone(),
        classifier_logits: classifier_fwd.iter().map(|f| f.out.clone()).collect(),
        w,
        c,
        p_team,
        expert_preds: batch.h.clone(),
        allocator_fwd,
        classifier_fwd,
    })
}

/// Per-instance cross-entropy of the team distribution.
pub fn team_losses(fwd: &TeamForward, y: &[usize]) -> Vec<f64> {
    y.iter()
        .enumerate()
        .map(|(i, &yi)| -fwd.p_team.get(i, yi).max(PROB_FLOOR).ln())
        .collect()
}

/// Minibatch mean of [`team_losses`].
pub fn team_loss(fwd: &TeamForward, y: &[usize]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    team_losses(fwd, y).iter().sum::<f64>() / y.len() as f64
}

/// Mean team loss of the batch and its gradient with respect to every
/// parameter of the model (returned in a model-shaped container).
///
/// With `P` the team probability of the true label, the logit-level
/// derivatives are `∂L/∂a_l = w_l − r_l` for allocator logits and
/// `∂L/∂z_l = r_j (c_l − 1[l = y])` for the logits of classifier member `j`,
/// where `r_l = w_l T_{y,l} / P` is the posterior share of member `l` in `P`.
/// `r` is evaluated as a softmax over `a_l + ln T_{y,l}`, which stays exact
/// when `P` is tiny. Where no member gives the true label any mass
/// (`P = 0`), the loss sits on its floor and the gradient is zero.
pub fn team_loss_gradients(model: &TeamModel, batch: &TeamBatch) -> Result<(f64, TeamModel)> {
    if batch.is_empty() {
        return Err(Error::Data("empty minibatch".into()));
    }
    let fwd = team_forward(model, batch)?;
    let (n, k, m) = (batch.len(), batch.k, model.num_experts());
    let members = model.num_members();
    let scale = 1.0 / n as f64;
    let max_loss = -PROB_FLOOR.ln();

    let mut d_alloc = Matrix::zeros(n, members);
    let mut d_clf: Vec<Matrix> = (0..model.num_classifiers()).map(|_| Matrix::zeros(n, k)).collect();
    let mut total = 0.0;
    let mut scores = vec![0.0; members];
    for i in 0..n {
        let y = batch.y[i];
        let a = fwd.allocator_logits.row(i);
        for (j, s) in scores.iter_mut().enumerate() {
            let log_t = if j < m {
                if batch.h[j][i] == y {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                let z = fwd.classifier_logits[j - m].row(i);
                z[y] - log_sum_exp(z)
            };
            *s = a[j] + log_t;
        }
        let log_num = log_sum_exp(&scores);
        if log_num == f64::NEG_INFINITY {
            total += max_loss;
            continue;
        }
        let log_p = log_num - log_sum_exp(a);
        total += (-log_p).min(max_loss);

        softmax_inplace(&mut scores);
        let w = fwd.w.row(i);
        for (j, d) in d_alloc.row_mut(i).iter_mut().enumerate() {
            *d = (w[j] - scores[j]) * scale;
        }
        for (j, dz) in d_clf.iter_mut().enumerate() {
            let r = scores[m + j];
            let c = fwd.c[j].row(i);
            for (l, d) in dz.row_mut(i).iter_mut().enumerate() {
                let target = if l == y { 1.0 } else { 0.0 };
                *d = r * (c[l] - target) * scale;
            }
        }
    }

    let allocator = model
        .allocator()
        .backward(&batch.x, &fwd.allocator_fwd, &d_alloc)?;
    let classifiers = model
        .classifiers()
        .iter()
        .zip(&fwd.classifier_fwd)
        .zip(&d_clf)
        .map(|((c, f), d)| c.backward(&batch.x, f, d))
        .collect::<Result<Vec<_>>>()?;
    let grads = TeamModel::raw(m, k, classifiers, allocator);
    let loss = total * scale;
    if !loss.is_finite() {
        return Err(Error::NonFinite(format!("team loss {loss}")));
    }
    Ok((loss, grads))
}

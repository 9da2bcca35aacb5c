use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{route_dataset, team_loss_gradients, TeamBatch, TeamModel};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{AdamState, EarlyStopState, LrSchedule, Parameters, ScheduleKind};
use crate::rng::{stream_rng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub schedule: ScheduleKind,
    pub eta_min: f64,
    pub seed: u64,
    pub hidden_units: usize,
    /// Epochs without improvement before stopping; `None` trains all epochs.
    pub patience: Option<usize>,
    /// Reshuffle the training order every epoch.
    pub shuffle: bool,
    /// Keep a copy of the model after every epoch.
    pub record_trajectory: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 512,
            lr: 5e-3,
            weight_decay: 5e-4,
            schedule: ScheduleKind::Cosine,
            eta_min: 0.0,
            seed: 0,
            hidden_units: 100,
            patience: None,
            shuffle: true,
            record_trajectory: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden_units == 0 {
            return Err(Error::Config(
                "epochs, batch_size and hidden_units must be positive".into(),
            ));
        }
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::Config(format!("lr must be > 0, got {}", self.lr)));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config(format!(
                "weight_decay must be >= 0, got {}",
                self.weight_decay
            )));
        }
        if !(self.eta_min >= 0.0 && self.eta_min <= self.lr) {
            return Err(Error::Config(format!(
                "eta_min must lie in [0, lr], got {}",
                self.eta_min
            )));
        }
        Ok(())
    }

    pub fn lr_schedule(&self) -> LrSchedule {
        match self.schedule {
            ScheduleKind::Constant => LrSchedule::constant(self.lr),
            ScheduleKind::Cosine => LrSchedule::cosine(self.lr, self.eta_min, self.epochs),
        }
    }
}

/// What a training loop needs to know about a method: minibatch gradients
/// and a validation score used for early stopping.
pub trait Objective {
    type Model: Parameters + Clone;

    /// Hook run before every epoch (e.g. to refresh derived targets).
    fn begin_epoch(&mut self, _model: &Self::Model, _train: &Dataset) -> Result<()> {
        Ok(())
    }

    /// Mean loss over `rows` of `train` and its gradient.
    fn batch_gradients(
        &self,
        model: &Self::Model,
        train: &Dataset,
        rows: &[usize],
    ) -> Result<(f64, Self::Model)>;

    /// Higher is better.
    fn validation_score(&self, model: &Self::Model, val: &Dataset) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub val_score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainTrace {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub best_score: f64,
    pub stopped_early: bool,
}

#[derive(Debug, Clone)]
pub struct Trained<M> {
    /// Best validation snapshot.
    pub model: M,
    pub trace: TrainTrace,
    /// Model after each epoch, if requested.
    pub trajectory: Vec<M>,
}

/// Minibatch Adam over `train` with per-epoch validation and early stopping.
pub fn fit<O: Objective>(
    objective: &mut O,
    init: O::Model,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
) -> Result<Trained<O::Model>> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Config("training split is empty".into()));
    }
    if val.is_empty() {
        return Err(Error::Config("validation split is empty".into()));
    }
    let schedule = cfg.lr_schedule();
    let mut model = init;
    let mut adam = AdamState::new(cfg.weight_decay);
    let mut stopper = EarlyStopState::new(cfg.patience);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut shuffle_rng = stream_rng(cfg.seed, Stream::Shuffle, 0);
    let mut trace = TrainTrace::default();
    let mut trajectory = Vec::new();

    for epoch in 0..cfg.epochs {
        let lr = schedule.lr_at(epoch);
        objective.begin_epoch(&model, train)?;
        if cfg.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let mut loss_sum = 0.0;
        for rows in order.chunks(cfg.batch_size) {
            let (loss, grads) = objective.batch_gradients(&model, train, rows)?;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!("loss {loss} at epoch {epoch}")));
            }
            loss_sum += loss * rows.len() as f64;
            adam.step(&mut model, &grads, lr)?;
        }
        let score = objective.validation_score(&model, val)?;
        trace.epochs.push(EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / train.len() as f64,
            val_score: score,
        });
        if cfg.record_trajectory {
            trajectory.push(model.clone());
        }
        if stopper.update(score, &model) {
            trace.stopped_early = true;
            break;
        }
    }
    trace.best_epoch = stopper.best_epoch;
    trace.best_score = stopper.best_metric;
    let model = stopper.into_best().expect("at least one epoch ran");
    Ok(Trained {
        model,
        trace,
        trajectory,
    })
}

/// Fraction of instances whose predicted label matches the truth.
pub fn accuracy(predicted: &[usize], labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(labels).filter(|(p, y)| p == y).count();
    hits as f64 / labels.len() as f64
}

/// The joint team objective: mean team cross-entropy, one optimizer over
/// both networks, hard team accuracy for validation.
#[derive(Debug, Clone, Copy, Default)]
pub struct TeamObjective {
    /// Keep every classifier's logits at zero (uniform output) throughout.
    pub freeze_classifiers: bool,
}

impl Objective for TeamObjective {
    type Model = TeamModel;

    fn batch_gradients(
        &self,
        model: &TeamModel,
        train: &Dataset,
        rows: &[usize],
    ) -> Result<(f64, TeamModel)> {
        let batch = TeamBatch::from_dataset(train, Some(rows))?;
        let (loss, mut grads) = team_loss_gradients(model, &batch)?;
        if self.freeze_classifiers {
            for c in grads.classifiers_mut() {
                for t in c.tensors_mut() {
                    t.fill(0.0);
                }
            }
        }
        Ok((loss, grads))
    }

    fn validation_score(&self, model: &TeamModel, val: &Dataset) -> Result<f64> {
        let a = route_dataset(model, val)?;
        Ok(accuracy(&a.predicted, val.labels()))
    }
}

fn check_team_data(model: &TeamModel, ds: &Dataset, split: &str) -> Result<()> {
    if ds.num_experts() != model.num_experts() {
        return Err(Error::Data(format!(
            "{split} split carries {} expert columns, the team has {} experts",
            ds.num_experts(),
            model.num_experts()
        )));
    }
    if ds.num_classes() != model.num_classes() || ds.dim() != model.input_dim() {
        return Err(Error::Dimension(format!(
            "{split} split is {}-dimensional with {} classes, the team expects {} and {}",
            ds.dim(),
            ds.num_classes(),
            model.input_dim(),
            model.num_classes()
        )));
    }
    Ok(())
}

pub fn train_team(
    model: TeamModel,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
) -> Result<Trained<TeamModel>> {
    train_team_with(model, train, val, cfg, TeamObjective::default())
}

pub fn train_team_with(
    mut model: TeamModel,
    train: &Dataset,
    val: &Dataset,
    cfg: &TrainConfig,
    mut objective: TeamObjective,
) -> Result<Trained<TeamModel>> {
    check_team_data(&model, train, "training")?;
    check_team_data(&model, val, "validation")?;
    if objective.freeze_classifiers {
        for c in model.classifiers_mut() {
            c.w2.data_mut().fill(0.0);
            c.b2.fill(0.0);
        }
    }
    fit(&mut objective, model, train, val, cfg)
}

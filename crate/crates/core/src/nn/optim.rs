use serde::{Deserialize, Serialize};

use super::Parameters;
use crate::error::{Error, Result};

/// Adam with decoupled weight decay.
///
/// Each step first shrinks the parameters by `lr * weight_decay`, then applies
/// the bias-corrected Adam delta. Moment buffers are allocated lazily on the
/// first step to match the parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    m1: Vec<Vec<f64>>,
    m2: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(weight_decay: f64) -> Self {
        Self::with_betas(0.9, 0.999, 1e-8, weight_decay)
    }

    pub fn with_betas(beta1: f64, beta2: f64, epsilon: f64, weight_decay: f64) -> Self {
        Self {
            step: 0,
            beta1,
            beta2,
            epsilon,
            weight_decay,
            m1: Vec::new(),
            m2: Vec::new(),
        }
    }

    pub fn step<P: Parameters + ?Sized, G: Parameters + ?Sized>(
        &mut self,
        params: &mut P,
        grads: &G,
        lr: f64,
    ) -> Result<()> {
        if !(lr > 0.0) {
            return Err(Error::Config(format!("learning rate must be > 0, got {lr}")));
        }
        let grads = grads.tensors();
        let mut params = params.tensors_mut();
        if grads.len() != params.len()
            || grads.iter().zip(&params).any(|(g, p)| g.len() != p.len())
        {
            return Err(Error::Dimension(
                "gradient layout does not match parameters".into(),
            ));
        }
        if let Some((t, _)) = grads
            .iter()
            .enumerate()
            .find(|(_, g)| g.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::NonFinite(format!(
                "gradient tensor {t} at optimizer step {}",
                self.step + 1
            )));
        }
        if self.m1.is_empty() {
            self.m1 = grads.iter().map(|g| vec![0.0; g.len()]).collect();
            self.m2 = self.m1.clone();
        } else if self.m1.len() != grads.len()
            || self.m1.iter().zip(&grads).any(|(m, g)| m.len() != g.len())
        {
            return Err(Error::Dimension(
                "optimizer state does not match parameters".into(),
            ));
        }

        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let decay = lr * self.weight_decay;
        for (((p, g), m1), m2) in params
            .iter_mut()
            .zip(&grads)
            .zip(&mut self.m1)
            .zip(&mut self.m2)
        {
            for i in 0..p.len() {
                let gi = g[i];
                m1[i] = self.beta1 * m1[i] + (1.0 - self.beta1) * gi;
                m2[i] = self.beta2 * m2[i] + (1.0 - self.beta2) * gi * gi;
                let m_hat = m1[i] / bc1;
                let v_hat = m2[i] / bc2;
                if decay != 0.0 {
                    p[i] -= decay * p[i];
                }
                p[i] -= lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    #[default]
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub kind: ScheduleKind,
    pub eta_max: f64,
    pub eta_min: f64,
    pub total_epochs: usize,
}

impl LrSchedule {
    pub fn cosine(eta_max: f64, eta_min: f64, total_epochs: usize) -> Self {
        Self {
            kind: ScheduleKind::Cosine,
            eta_max,
            eta_min,
            total_epochs,
        }
    }

    pub fn constant(lr: f64) -> Self {
        Self {
            kind: ScheduleKind::Constant,
            eta_max: lr,
            eta_min: lr,
            total_epochs: 0,
        }
    }

    /// Learning rate for the given (0-based) epoch.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self.kind {
            ScheduleKind::Constant => self.eta_max,
            ScheduleKind::Cosine => cosine_lr(self, epoch),
        }
    }
}

/// Cosine annealing from `eta_max` at epoch 0 to `eta_min` at `total_epochs`;
/// later epochs stay at `eta_min`.
pub fn cosine_lr(schedule: &LrSchedule, epoch: usize) -> f64 {
    if schedule.total_epochs == 0 || epoch >= schedule.total_epochs {
        return schedule.eta_min;
    }
    let frac = epoch as f64 / schedule.total_epochs as f64;
    schedule.eta_min
        + 0.5 * (schedule.eta_max - schedule.eta_min) * (1.0 + (std::f64::consts::PI * frac).cos())
}

/// Keeps the parameters from the epoch with the highest validation metric.
/// Ties keep the earlier snapshot.
#[derive(Debug, Clone)]
pub struct EarlyStopState<P> {
    pub best_metric: f64,
    pub best_epoch: Option<usize>,
    pub epochs_since_improve: usize,
    pub patience: Option<usize>,
    best: Option<P>,
    epochs_seen: usize,
}

impl<P: Clone> EarlyStopState<P> {
    pub fn new(patience: Option<usize>) -> Self {
        Self {
            best_metric: f64::NEG_INFINITY,
            best_epoch: None,
            epochs_since_improve: 0,
            patience,
            best: None,
            epochs_seen: 0,
        }
    }

    /// Records one epoch's validation metric; returns `true` when training
    /// should stop.
    pub fn update(&mut self, metric: f64, params: &P) -> bool {
        let epoch = self.epochs_seen;
        self.epochs_seen += 1;
        if metric > self.best_metric || self.best.is_none() {
            self.best_metric = metric;
            self.best_epoch = Some(epoch);
            self.best = Some(params.clone());
            self.epochs_since_improve = 0;
        } else {
            self.epochs_since_improve += 1;
        }
        matches!(self.patience, Some(p) if self.epochs_since_improve > p)
    }

    pub fn best(&self) -> Option<&P> {
        self.best.as_ref()
    }

    pub fn into_best(self) -> Option<P> {
        self.best
    }
}

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::{softmax_rows, MlpDims, MlpParams};
use crate::rng::{stream_rng, Stream};
use crate::team::{accuracy, fit, Assignment, MemberKind, Objective, TrainConfig, Trained};

/// Plain softmax cross-entropy on every instance.
#[derive(Debug, Clone, Copy, Default)]
pub struct OneClassifierObjective;

impl Objective for OneClassifierObjective {
    type Model = MlpParams;

    fn batch_gradients(&self, model: &MlpParams, train: &Dataset, rows: &[usize]) -> Result<(f64, MlpParams)> {
        if rows.is_empty() {
            return Err(Error::Data("empty minibatch".into()));
        }
        let x = train.features().select_rows(rows);
        let fwd = model.forward(&x)?;
        let c = softmax_rows(&fwd.out);
        let scale = 1.0 / rows.len() as f64;
        let mut d_out = c.clone();
        let mut total = 0.0;
        for (i, &row) in rows.iter().enumerate() {
            let y = train.labels()[row];
            total -= c.get(i, y).max(crate::team::PROB_FLOOR).ln();
            for (l, d) in d_out.row_mut(i).iter_mut().enumerate() {
                let target = if l == y { 1.0 } else { 0.0 };
                *d = (*d - target) * scale;
            }
        }
        let grads = model.backward(&x, &fwd, &d_out)?;
        Ok((total * scale, grads))
    }

    fn validation_score(&self, model: &MlpParams, val: &Dataset) -> Result<f64> {
        let pred = model.logits(val.features())?.argmax_rows();
        Ok(accuracy(&pred, val.labels()))
    }
}

/// Same architecture and initialisation stream as the team's first classifier.
pub fn init_one_classifier(d: usize, k: usize, hidden: usize, seed: u64) -> Result<MlpParams> {
    MlpParams::init(
        MlpDims::new(d, hidden, k),
        &mut stream_rng(seed, Stream::ClassifierInit, 0),
    )
}

pub fn train_one_classifier(train: &Dataset, val: &Dataset, cfg: &TrainConfig) -> Result<Trained<MlpParams>> {
    let init = init_one_classifier(train.dim(), train.num_classes(), cfg.hidden_units, cfg.seed)?;
    fit(&mut OneClassifierObjective, init, train, val, cfg)
}

pub fn one_classifier_predict(model: &MlpParams, ds: &Dataset) -> Result<Assignment> {
    let pred = model.logits(ds.features())?.argmax_rows();
    Assignment::from_routing(vec![MemberKind::Classifier(0)], vec![0; ds.len()], vec![pred])
}

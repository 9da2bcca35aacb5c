//! The joint team and every comparison system behind one train/predict
//! interface. Each method yields an [`Assignment`], which the evaluator
//! scores the same way regardless of how it was produced.

mod experts_only;
mod jsf;
mod one_classifier;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use experts_only::{best_expert, random_expert, select_best_expert};
pub use jsf::{
    jsf_predict, train_jsf, train_jsf_with, CorrectnessTargets, JsfModel, JsfObjective, JsfTargets,
};
pub use one_classifier::{
    init_one_classifier, one_classifier_predict, train_one_classifier, OneClassifierObjective,
};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::MlpParams;
use crate::team::{route_dataset, train_team, Assignment, TeamModel, TrainConfig, TrainTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Classifier and allocator trained jointly with the experts.
    #[serde(alias = "core", alias = "classifier_expert_team")]
    Team,
    Jsf,
    OneClassifier,
    RandomExpert,
    BestExpert,
    ClassifierTeam,
    ExpertTeam,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Team,
        Method::Jsf,
        Method::OneClassifier,
        Method::RandomExpert,
        Method::BestExpert,
        Method::ClassifierTeam,
        Method::ExpertTeam,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Team => "team",
            Method::Jsf => "jsf",
            Method::OneClassifier => "one_classifier",
            Method::RandomExpert => "random_expert",
            Method::BestExpert => "best_expert",
            Method::ClassifierTeam => "classifier_team",
            Method::ExpertTeam => "expert_team",
        }
    }

    /// Whether the method consults the experts at all.
    pub fn uses_experts(&self) -> bool {
        !matches!(self, Method::OneClassifier | Method::ClassifierTeam)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "core" | "classifier_expert_team" => return Ok(Method::Team),
            _ => {}
        }
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodModel {
    Team(TeamModel),
    OneClassifier(MlpParams),
    Jsf(JsfModel),
    RandomExpert { seed: u64 },
    BestExpert { expert: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedMethod {
    pub method: Method,
    pub model: MethodModel,
    /// Absent for methods without a training loop.
    pub trace: Option<TrainTrace>,
}

impl TrainedMethod {
    pub fn predict(&self, ds: &Dataset) -> Result<Assignment> {
        match (&self.model, self.method) {
            (MethodModel::Team(t), Method::ClassifierTeam) => {
                route_dataset(t, &ds.clone().without_expert_predictions())
            }
            (MethodModel::Team(t), _) => route_dataset(t, ds),
            (MethodModel::OneClassifier(c), _) => one_classifier_predict(c, ds),
            (MethodModel::Jsf(j), _) => jsf_predict(j, ds),
            (MethodModel::RandomExpert { seed }, _) => random_expert(ds, *seed),
            (MethodModel::BestExpert { expert }, _) => best_expert(*expert, ds),
        }
    }
}

/// Trains `method` on `train` with early stopping on `val`. Networks are
/// initialised from `cfg.seed`; team sizes follow the experts in `train`.
pub fn train_method(method: Method, train: &Dataset, val: &Dataset, cfg: &TrainConfig) -> Result<TrainedMethod> {
    let (d, k, m, h, seed) = (
        train.dim(),
        train.num_classes(),
        train.num_experts(),
        cfg.hidden_units,
        cfg.seed,
    );
    let team = |model: TeamModel, train: &Dataset, val: &Dataset| -> Result<TrainedMethod> {
        let out = train_team(model, train, val, cfg)?;
        Ok(TrainedMethod {
            method,
            model: MethodModel::Team(out.model),
            trace: Some(out.trace),
        })
    };
    match method {
        Method::Team => team(TeamModel::new(d, k, m, h, seed)?, train, val),
        Method::ExpertTeam => team(TeamModel::expert_team(d, k, m, h, seed)?, train, val),
        Method::ClassifierTeam => team(
            TeamModel::classifier_team(d, k, m, h, seed)?,
            &train.clone().without_expert_predictions(),
            &val.clone().without_expert_predictions(),
        ),
        Method::OneClassifier => {
            let out = train_one_classifier(train, val, cfg)?;
            Ok(TrainedMethod {
                method,
                model: MethodModel::OneClassifier(out.model),
                trace: Some(out.trace),
            })
        }
        Method::Jsf => {
            let out = train_jsf(train, val, cfg)?;
            Ok(TrainedMethod {
                method,
                model: MethodModel::Jsf(out.model),
                trace: Some(out.trace),
            })
        }
        Method::RandomExpert => {
            train.require_experts("random expert allocation")?;
            Ok(TrainedMethod {
                method,
                model: MethodModel::RandomExpert { seed },
                trace: None,
            })
        }
        Method::BestExpert => {
            let expert = select_best_expert(&train.concat(val)?)?;
            Ok(TrainedMethod {
                method,
                model: MethodModel::BestExpert { expert },
                trace: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{m}\""));
        }
        assert_eq!("core".parse::<Method>().unwrap(), Method::Team);
        assert!(matches!("nope".parse::<Method>(), Err(Error::Config(_))));
        let m: Method = serde_json::from_str("\"classifier_expert_team\"").unwrap();
        assert_eq!(m, Method::Team);
    }
}

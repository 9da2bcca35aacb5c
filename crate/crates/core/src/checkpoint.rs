//! Self-describing binary checkpoints.
//!
//! Layout (all integers little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 8     | magic `TMALLOC\0` |
//! | 4     | format version (`u32`, currently 1) |
//! | 8     | header length `L` in bytes (`u64`) |
//! | L     | UTF-8 JSON header, see [`Header`] |
//! | rest  | every tensor listed in the header, in order, as raw `f64` LE |
//!
//! Networks are stored as groups of four tensors `w1, b1, w2, b2`; a team
//! lists its classifiers first and its allocator last.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{JsfModel, Method, MethodModel};
use crate::error::{Error, Result};
use crate::nn::{Matrix, MlpParams};
use crate::team::{TeamModel, TrainConfig};

pub const MAGIC: &[u8; 8] = b"TMALLOC\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Team,
    OneClassifier,
    Jsf,
    RandomExpert,
    BestExpert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub kind: ModelKind,
    pub method: Method,
    /// Feature dimension, class count, expert count.
    pub d: usize,
    pub k: usize,
    pub m: usize,
    pub num_classifiers: usize,
    /// Seed of a random-expert policy or index of the chosen best expert.
    #[serde(default)]
    pub policy_value: Option<u64>,
    pub tensors: Vec<TensorEntry>,
    pub train_config: Option<TrainConfig>,
    pub seed: u64,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub method: Method,
    pub model: MethodModel,
    pub train_config: Option<TrainConfig>,
    pub seed: u64,
    pub metadata: serde_json::Value,
}

fn networks(model: &MethodModel) -> Vec<(String, &MlpParams)> {
    match model {
        MethodModel::Team(t) => t
            .classifiers()
            .iter()
            .enumerate()
            .map(|(j, c)| (format!("classifier{j}"), c))
            .chain(std::iter::once(("allocator".to_string(), t.allocator())))
            .collect(),
        MethodModel::OneClassifier(c) => vec![("classifier".into(), c)],
        MethodModel::Jsf(j) => vec![("jsf".into(), j.net())],
        MethodModel::RandomExpert { .. } | MethodModel::BestExpert { .. } => Vec::new(),
    }
}

fn mlp_entries(prefix: &str, p: &MlpParams) -> [TensorEntry; 4] {
    let e = |n: &str, shape: [usize; 2]| TensorEntry {
        name: format!("{prefix}.{n}"),
        shape,
    };
    [
        e("w1", [p.w1.rows(), p.w1.cols()]),
        e("b1", [1, p.b1.len()]),
        e("w2", [p.w2.rows(), p.w2.cols()]),
        e("b2", [1, p.b2.len()]),
    ]
}

impl Checkpoint {
    fn header(&self, d: usize, k: usize) -> Header {
        let (kind, m, num_classifiers, policy_value) = match &self.model {
            MethodModel::Team(t) => (ModelKind::Team, t.num_experts(), t.num_classifiers(), None),
            MethodModel::OneClassifier(_) => (ModelKind::OneClassifier, 0, 1, None),
            MethodModel::Jsf(j) => (ModelKind::Jsf, j.num_experts(), 1, None),
            MethodModel::RandomExpert { seed } => (ModelKind::RandomExpert, 0, 0, Some(*seed)),
            MethodModel::BestExpert { expert } => (ModelKind::BestExpert, 0, 0, Some(*expert as u64)),
        };
        Header {
            kind,
            method: self.method,
            d,
            k,
            m,
            num_classifiers,
            policy_value,
            tensors: networks(&self.model)
                .iter()
                .flat_map(|(name, p)| mlp_entries(name, p))
                .collect(),
            train_config: self.train_config.clone(),
            seed: self.seed,
            metadata: self.metadata.clone(),
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let nets = networks(&self.model);
        let (d, k) = match &self.model {
            MethodModel::Team(t) => (t.input_dim(), t.num_classes()),
            MethodModel::OneClassifier(c) => (c.input_dim(), c.output_dim()),
            MethodModel::Jsf(j) => (j.net().input_dim(), j.num_classes()),
            _ => (0, 0),
        };
        let header = serde_json::to_vec(&self.header(d, k))
            .map_err(|e| Error::Config(format!("cannot encode checkpoint header: {e}")))?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for (_, p) in nets {
            for t in [p.w1.data(), &p.b1, p.w2.data(), &p.b2] {
                for v in t {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |msg: &str| Error::format(path, msg);
        if bytes.len() < 20 || &bytes[..8] != MAGIC {
            return Err(bad("not a checkpoint file (bad magic)"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(bad(&format!("unsupported checkpoint version {version}")));
        }
        let len = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let body = &bytes[20..];
        if body.len() < len {
            return Err(bad("truncated header"));
        }
        let header: Header = serde_json::from_slice(&body[..len])
            .map_err(|e| bad(&format!("invalid header: {e}")))?;
        let mut payload = &body[len..];
        let expected: usize = header.tensors.iter().map(|t| t.shape[0] * t.shape[1]).sum();
        if payload.len() != expected * 8 {
            return Err(bad(&format!(
                "payload holds {} bytes, manifest needs {}",
                payload.len(),
                expected * 8
            )));
        }
        let mut tensors = Vec::with_capacity(header.tensors.len());
        for t in &header.tensors {
            let n = t.shape[0] * t.shape[1];
            let (chunk, rest) = payload.split_at(n * 8);
            payload = rest;
            let values: Vec<f64> = chunk
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push(Matrix::from_vec(t.shape[0], t.shape[1], values)?);
        }
        if tensors.len() % 4 != 0 {
            return Err(bad("tensor count is not a whole number of networks"));
        }
        let mut nets = tensors
            .chunks_exact(4)
            .map(|g| {
                MlpParams::new(
                    g[0].clone(),
                    g[1].data().to_vec(),
                    g[2].clone(),
                    g[3].data().to_vec(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let policy = || header.policy_value.ok_or_else(|| bad("missing policy value"));
        let model = match header.kind {
            ModelKind::Team => {
                let allocator = nets.pop().ok_or_else(|| bad("team without allocator"))?;
                if nets.len() != header.num_classifiers {
                    return Err(bad("classifier count does not match manifest"));
                }
                MethodModel::Team(TeamModel::from_parts(header.m, header.k, nets, allocator)?)
            }
            ModelKind::OneClassifier => {
                MethodModel::OneClassifier(nets.pop().ok_or_else(|| bad("missing classifier"))?)
            }
            ModelKind::Jsf => MethodModel::Jsf(JsfModel::from_parts(
                header.m,
                header.k,
                nets.pop().ok_or_else(|| bad("missing network"))?,
            )?),
            ModelKind::RandomExpert => MethodModel::RandomExpert { seed: policy()? },
            ModelKind::BestExpert => MethodModel::BestExpert {
                expert: policy()? as usize,
            },
        };
        Ok(Self {
            method: header.method,
            model,
            train_config: header.train_config,
            seed: header.seed,
            metadata: header.metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(c: &Checkpoint) {
        let bytes = c.to_bytes().unwrap();
        let back = Checkpoint::from_bytes(&bytes, Path::new("mem")).unwrap();
        assert_eq!(&back, c);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    fn checkpoint(method: Method, model: MethodModel) -> Checkpoint {
        Checkpoint {
            method,
            model,
            train_config: Some(TrainConfig::default()),
            seed: 17,
            metadata: serde_json::json!({"note": "x", "loss": 0.24931400912707122}),
        }
    }

    #[test]
    fn every_model_kind_round_trips() {
        let mut team = TeamModel::new(3, 4, 2, 5, 1).unwrap();
        team.allocator_mut().b2[0] = f64::MIN_POSITIVE / 3.0;
        team.classifiers_mut()[0].b1[1] = -0.1;
        round_trip(&checkpoint(Method::Team, MethodModel::Team(team)));
        let ct = TeamModel::classifier_team(3, 4, 2, 5, 1).unwrap();
        round_trip(&checkpoint(Method::ClassifierTeam, MethodModel::Team(ct)));
        let et = TeamModel::expert_team(3, 4, 2, 5, 1).unwrap();
        round_trip(&checkpoint(Method::ExpertTeam, MethodModel::Team(et)));
        let jsf = JsfModel::new(3, 4, 2, 5, 1).unwrap();
        round_trip(&checkpoint(Method::Jsf, MethodModel::Jsf(jsf)));
        let one = crate::baselines::init_one_classifier(3, 4, 5, 2).unwrap();
        round_trip(&checkpoint(Method::OneClassifier, MethodModel::OneClassifier(one)));
        round_trip(&checkpoint(Method::RandomExpert, MethodModel::RandomExpert { seed: u64::MAX }));
        round_trip(&checkpoint(Method::BestExpert, MethodModel::BestExpert { expert: 3 }));
    }

    #[test]
    fn file_round_trip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let c = checkpoint(Method::Team, MethodModel::Team(TeamModel::new(2, 2, 1, 3, 0).unwrap()));
        c.save(&path).unwrap();
        assert_eq!(Checkpoint::load(&path).unwrap(), c);

        let mut bytes = fs::read(&path).unwrap();
        bytes.pop();
        assert!(matches!(Checkpoint::from_bytes(&bytes, &path), Err(Error::Format { .. })));
        bytes[0] = b'X';
        assert!(matches!(Checkpoint::from_bytes(&bytes, &path), Err(Error::Format { .. })));
        assert!(matches!(
            Checkpoint::load(&dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::Method;
use crate::data::{
    gen_binary_group_data, gen_synthetic, kfold_partition, load_dataset, split_indices,
    stratified_group_kfold, BinaryGroupSpec, Dataset, FractionalSplit, SplitIndices, SyntheticSpec,
};
use crate::error::{Error, Result};
use crate::experts::{
    diversity_scenario, gen_dialect_experts, gen_subclass_experts, materialize_predictions,
    ExpertProfile, ExpertRoster, SubclassExpertParams,
};
use crate::team::TrainConfig;

pub const EXPERIMENT_SCHEMA: &str = "teamalloc.experiment/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub data: DataConfig,
    #[serde(default)]
    pub experts: ExpertsConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic,
    BinaryGroup,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// Generator seed. The dataset stays fixed across run seeds.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub synthetic: SyntheticSpec,
    #[serde(default)]
    pub binary_group: BinaryGroupSpec,
    /// CSV file for `source = "csv"`; relative paths resolve against the
    /// config file's directory.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExpertSource {
    /// Generated subclass-competence experts.
    #[default]
    Subclass,
    /// Generated group-conditioned experts (binary tasks).
    Dialect,
    /// Expert columns already stored in the dataset file.
    Dataset,
    /// Profiles read from a roster file.
    Roster,
    /// No experts.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpertsConfig {
    pub source: ExpertSource,
    pub m: usize,
    pub mu: f64,
    pub sigma: f64,
    pub roster: Option<PathBuf>,
}

impl Default for ExpertsConfig {
    fn default() -> Self {
        let p = SubclassExpertParams::default();
        Self {
            source: ExpertSource::Subclass,
            m: 2,
            mu: p.mu,
            sigma: p.sigma,
            roster: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    #[default]
    Fractional,
    Kfold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub kind: SplitKind,
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub stratify: bool,
    pub folds: usize,
    pub val_folds: usize,
    pub test_fold: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        let f = FractionalSplit::default();
        Self {
            kind: SplitKind::Fractional,
            train: f.train,
            val: f.val,
            test: f.test,
            stratify: f.stratify,
            folds: 10,
            val_folds: 2,
            test_fold: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Where `evaluate` and `export-records` look for checkpoints; defaults
    /// to the output directory.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Team],
            seeds: vec![0],
            checkpoint_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub team_sizes: Vec<usize>,
    pub diversity_runs: Vec<usize>,
    /// Perfect subclasses per expert in the diversity runs.
    pub width: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            team_sizes: vec![2, 4, 6, 8, 10],
            diversity_runs: (1..=11).collect(),
            width: 90,
        }
    }
}

/// The three splits of one run, experts attached.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
    pub roster: Option<ExpertRoster>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_col(text, s.start))
                .unwrap_or((0, 0));
            Error::Parse {
                path: origin.to_path_buf(),
                line,
                column: column.to_string(),
                message: e.message().to_string(),
            }
        })?;
        if cfg.schema != EXPERIMENT_SCHEMA {
            return Err(Error::Config(format!(
                "{}: unsupported schema `{}` (expected `{EXPERIMENT_SCHEMA}`)",
                origin.display(),
                cfg.schema
            )));
        }
        if let Some(dir) = origin.parent() {
            for p in [&mut cfg.data.path, &mut cfg.experts.roster, &mut cfg.run.checkpoint_dir]
                .into_iter()
                .flatten()
            {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot encode config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.run.methods.is_empty() || self.run.seeds.is_empty() {
            return Err(Error::Config("run.methods and run.seeds must be non-empty".into()));
        }
        if self.data.source == DataSource::Csv && self.data.path.is_none() {
            return Err(Error::Config("data.source = \"csv\" needs data.path".into()));
        }
        if self.experts.source == ExpertSource::Roster && self.experts.roster.is_none() {
            return Err(Error::Config("experts.source = \"roster\" needs experts.roster".into()));
        }
        Ok(())
    }

    /// The dataset without generated experts (stored expert columns kept).
    pub fn base_dataset(&self) -> Result<Dataset> {
        let d = &self.data;
        match d.source {
            DataSource::Synthetic => gen_synthetic(&d.synthetic, d.seed),
            DataSource::BinaryGroup => gen_binary_group_data(&d.binary_group, d.seed),
            DataSource::Csv => {
                let path = d.path.as_deref().expect("validated");
                if !path.exists() {
                    return Err(Error::io(
                        path,
                        std::io::Error::new(std::io::ErrorKind::NotFound, "dataset file not found"),
                    ));
                }
                load_dataset(path)
            }
        }
    }

    /// Expert profiles for a run with `m` experts.
    pub fn roster(&self, ds: &Dataset, m: usize, seed: u64) -> Result<Option<ExpertRoster>> {
        let e = &self.experts;
        let roster = match e.source {
            ExpertSource::Subclass => {
                let map = ds.superclass_map().ok_or_else(|| {
                    Error::Data("subclass experts need a dataset with subclasses".into())
                })?;
                let params = SubclassExpertParams { mu: e.mu, sigma: e.sigma };
                let experts = gen_subclass_experts(m, &params, map, seed)?;
                ExpertRoster::new(
                    format!("subclass mu={} sigma={}", e.mu, e.sigma),
                    seed,
                    experts.into_iter().map(ExpertProfile::Subclass).collect(),
                )
            }
            ExpertSource::Dialect => ExpertRoster::new(
                "dialect",
                seed,
                gen_dialect_experts(m, seed)?
                    .into_iter()
                    .map(ExpertProfile::Dialect)
                    .collect(),
            ),
            ExpertSource::Roster => ExpertRoster::load(e.roster.as_deref().expect("validated"))?,
            ExpertSource::Dataset | ExpertSource::None => return Ok(None),
        };
        Ok(Some(roster))
    }

    /// Dataset with the run's expert predictions materialised.
    pub fn with_experts(&self, ds: Dataset, roster: Option<&ExpertRoster>, seed: u64) -> Result<Dataset> {
        match (self.experts.source, roster) {
            (ExpertSource::Dataset, _) => {
                ds.require_experts("experts.source = \"dataset\"")?;
                Ok(ds)
            }
            (ExpertSource::None, _) => Ok(ds.without_expert_predictions()),
            (_, Some(r)) => {
                let table = materialize_predictions(&r.profiles(), &ds, seed)?;
                ds.with_expert_predictions(table)
            }
            (_, None) => Err(Error::Config("no expert roster for this run".into())),
        }
    }

    pub fn split_indices(&self, ds: &Dataset, seed: u64) -> Result<SplitIndices> {
        let s = &self.split;
        match s.kind {
            SplitKind::Fractional => split_indices(
                ds,
                &FractionalSplit {
                    train: s.train,
                    val: s.val,
                    test: s.test,
                    stratify: s.stratify,
                },
                seed,
            ),
            SplitKind::Kfold => {
                let folds = stratified_group_kfold(ds, s.folds, seed)?;
                kfold_partition(&folds, s.folds, s.val_folds, s.test_fold)
            }
        }
    }

    /// Everything one (seed, team size) run needs. `m` overrides
    /// `experts.m`.
    pub fn prepare(&self, base: &Dataset, m: Option<usize>, seed: u64) -> Result<Prepared> {
        let roster = self.roster(base, m.unwrap_or(self.experts.m), seed)?;
        self.prepare_with_roster(base, roster, seed)
    }

    pub fn prepare_with_roster(
        &self,
        base: &Dataset,
        roster: Option<ExpertRoster>,
        seed: u64,
    ) -> Result<Prepared> {
        let ds = self.with_experts(base.clone(), roster.as_ref(), seed)?;
        let (train, val, test) = self.split_indices(&ds, seed)?.apply(&ds);
        Ok(Prepared {
            train,
            val,
            test,
            roster,
        })
    }

    /// Run `i` of the diversity construction as a two-expert roster.
    pub fn diversity_roster(&self, ds: &Dataset, i: usize) -> Result<ExpertRoster> {
        let map = ds
            .superclass_map()
            .ok_or_else(|| Error::Data("diversity runs need a dataset with subclasses".into()))?;
        let (a, b) = diversity_scenario(i, self.sweep.width, map)?;
        Ok(ExpertRoster::new(
            format!("diversity i={i} width={}", self.sweep.width),
            i as u64,
            vec![ExpertProfile::Subclass(a), ExpertProfile::Subclass(b)],
        ))
    }

    /// Training settings for one run seed.
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            ..self.train.clone()
        }
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
schema = "teamalloc.experiment/v1"

[data]
source = "synthetic"
seed = 3
synthetic = { k_super = 4, s_sub = 12, d = 6, n = 300 }

[experts]
m = 3

[train]
epochs = 2

[run]
methods = ["team", "one_classifier", "best_expert"]
seeds = [0, 1]
"#;

    #[test]
    fn parses_and_prepares() {
        let cfg = ExperimentConfig::from_toml(SMALL, Path::new("x/exp.toml")).unwrap();
        assert_eq!(cfg.data.synthetic.n, 300);
        assert_eq!(cfg.data.synthetic.cluster_sigma, 0.3);
        assert_eq!(cfg.train.batch_size, 512);
        let base = cfg.base_dataset().unwrap();
        let p = cfg.prepare(&base, None, 1).unwrap();
        assert_eq!(p.train.num_experts(), 3);
        assert_eq!(p.train.len() + p.val.len() + p.test.len(), 300);
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap(), Path::new("exp.toml")).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn bad_schema_and_unknown_keys() {
        let bad = SMALL.replace("experiment/v1", "experiment/v9");
        assert!(matches!(
            ExperimentConfig::from_toml(&bad, Path::new("a.toml")),
            Err(Error::Config(_))
        ));
        let typo = SMALL.replace("epochs = 2", "epochz = 2");
        match ExperimentConfig::from_toml(&typo, Path::new("a.toml")) {
            Err(Error::Parse { line, .. }) => assert!(line > 0),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_csv_names_path() {
        let text = SMALL.replace("source = \"synthetic\"", "source = \"csv\"\npath = \"nope.csv\"");
        let cfg = ExperimentConfig::from_toml(&text, Path::new("dir/a.toml")).unwrap();
        let err = cfg.base_dataset().unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("nope.csv"), "{err}");
    }
}

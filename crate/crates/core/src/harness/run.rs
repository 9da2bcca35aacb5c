use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Prepared};
use super::eval::{evaluate, EvalReport, SeedStats};
use crate::baselines::{train_method, Method, TrainedMethod};
use crate::checkpoint::Checkpoint;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::team::{EpochRecord, TrainTrace};

/// One line of a per-(method, seed) result file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum ResultLine {
    Result(RunResult),
    Epoch(EpochRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub method: Method,
    pub seed: u64,
    pub num_experts: usize,
    pub best_epoch: Option<usize>,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub team_accuracy: SeedStats,
    pub coverage: SeedStats,
    pub oracle_accuracy: SeedStats,
}

/// Mean accuracy of the joint team minus a baseline's, in percentage
/// points and relative to the baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: Method,
    pub absolute_pp: f64,
    pub relative_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodSummary>,
    pub comparisons: Vec<Comparison>,
}

pub fn summarize(results: &[RunResult], seeds: &[u64]) -> Summary {
    let mut methods: Vec<Method> = results.iter().map(|r| r.method).collect();
    methods.sort();
    methods.dedup();
    let stats = |m: Method, f: &dyn Fn(&EvalReport) -> f64| {
        SeedStats::new(results.iter().filter(|r| r.method == m).map(|r| f(&r.report)).collect())
    };
    let methods: Vec<MethodSummary> = methods
        .into_iter()
        .map(|m| MethodSummary {
            method: m,
            team_accuracy: stats(m, &|r| r.team_accuracy),
            coverage: stats(m, &|r| r.coverage),
            oracle_accuracy: stats(m, &|r| r.oracle_accuracy),
        })
        .collect();
    let comparisons = match methods.iter().find(|s| s.method == Method::Team) {
        Some(team) => methods
            .iter()
            .filter(|s| s.method != Method::Team)
            .map(|b| {
                let diff = team.team_accuracy.mean - b.team_accuracy.mean;
                Comparison {
                    baseline: b.method,
                    absolute_pp: diff,
                    relative_percent: 100.0 * diff / b.team_accuracy.mean,
                }
            })
            .collect(),
        None => Vec::new(),
    };
    Summary {
        seeds: seeds.to_vec(),
        methods,
        comparisons,
    }
}

pub fn result_file(out: &Path, method: Method, seed: u64) -> PathBuf {
    out.join("results").join(format!("{method}-seed{seed}.jsonl"))
}

pub fn checkpoint_file(dir: &Path, method: Method, seed: u64) -> PathBuf {
    dir.join(format!("{method}-seed{seed}.ckpt"))
}

pub(crate) fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("plain data serializes")
}

fn write_result(out: &Path, result: &RunResult, trace: Option<&TrainTrace>) -> Result<()> {
    let mut text = to_json(&ResultLine::Result(result.clone())) + "\n";
    for e in trace.map(|t| t.epochs.as_slice()).unwrap_or_default() {
        text += &(to_json(&ResultLine::Epoch(e.clone())) + "\n");
    }
    write_text(&result_file(out, result.method, result.seed), &text)
}

pub fn write_summary(out: &Path, summary: &Summary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).expect("plain data serializes");
    write_text(&out.join("summary.json"), &(text + "\n"))
}

/// Scores a trained method on the test split.
pub fn score(trained: &TrainedMethod, test: &Dataset, seed: u64) -> Result<RunResult> {
    let a = trained.predict(test)?;
    Ok(RunResult {
        method: trained.method,
        seed,
        num_experts: test.num_experts(),
        best_epoch: trained.trace.as_ref().and_then(|t| t.best_epoch),
        report: evaluate(&a, test.labels())?,
    })
}

fn train_one(cfg: &ExperimentConfig, method: Method, p: &Prepared, seed: u64) -> Result<TrainedMethod> {
    train_method(method, &p.train, &p.val, &cfg.train_config(seed))
}

/// Trains and evaluates every configured method for every seed, writing
/// `results/<method>-seed<seed>.jsonl` and `summary.json` under `out`.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<Summary> {
    let base = cfg.base_dataset()?;
    let mut results = Vec::new();
    for &seed in &cfg.run.seeds {
        let p = cfg.prepare(&base, None, seed)?;
        for &method in &cfg.run.methods {
            let trained = train_one(cfg, method, &p, seed)?;
            let r = score(&trained, &p.test, seed)?;
            write_result(out, &r, trained.trace.as_ref())?;
            results.push(r);
        }
    }
    let summary = summarize(&results, &cfg.run.seeds);
    write_summary(out, &summary)?;
    Ok(summary)
}

/// Trains every configured method and saves one checkpoint per (method,
/// seed) into `out`.
pub fn train_checkpoints(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    create_dir(out)?;
    let base = cfg.base_dataset()?;
    let mut written = Vec::new();
    for &seed in &cfg.run.seeds {
        let p = cfg.prepare(&base, None, seed)?;
        for &method in &cfg.run.methods {
            let trained = train_one(cfg, method, &p, seed)?;
            let ckpt = Checkpoint {
                method,
                model: trained.model,
                train_config: Some(cfg.train_config(seed)),
                seed,
                metadata: serde_json::json!({
                    "trace": trained.trace,
                    "roster": p.roster,
                }),
            };
            let path = checkpoint_file(out, method, seed);
            ckpt.save(&path)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Evaluates saved checkpoints on each seed's test split.
pub fn evaluate_checkpoints(cfg: &ExperimentConfig, ckpt_dir: &Path, out: &Path) -> Result<Summary> {
    let base = cfg.base_dataset()?;
    let mut results = Vec::new();
    for &seed in &cfg.run.seeds {
        let p = cfg.prepare(&base, None, seed)?;
        for &method in &cfg.run.methods {
            let ckpt = Checkpoint::load(&checkpoint_file(ckpt_dir, method, seed))?;
            let trace: Option<TrainTrace> = ckpt
                .metadata
                .get("trace")
                .and_then(|t| serde_json::from_value(t.clone()).ok());
            let trained = TrainedMethod {
                method: ckpt.method,
                model: ckpt.model,
                trace,
            };
            let r = score(&trained, &p.test, seed)?;
            write_result(out, &r, trained.trace.as_ref())?;
            results.push(r);
        }
    }
    let summary = summarize(&results, &cfg.run.seeds);
    write_summary(out, &summary)?;
    Ok(summary)
}

/// Reads back a per-(method, seed) result file.
pub fn read_result_file(path: &Path) -> Result<Vec<ResultLine>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .map(|l| serde_json::from_str(l).map_err(|e| Error::format(path, e)))
        .collect()
}

pub(crate) fn write_lines<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for r in rows {
        writeln!(f, "{}", to_json(r)).map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}

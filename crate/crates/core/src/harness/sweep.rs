use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Prepared};
use super::eval::{evaluate_oracle, SeedStats};
use super::run::{create_dir, score, RunResult};
use crate::baselines::{train_method, Method, TrainedMethod};
use crate::error::{Error, Result};

/// One (sweep point, method, seed) measurement. Accuracies in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Team size `m`, or the diversity run index `i`.
    pub point: usize,
    /// `m` for team-size sweeps, `2 (i - 1)` for diversity sweeps.
    pub x: usize,
    pub method: Method,
    pub seed: u64,
    pub accuracy: f64,
    /// Bound of this method's own members.
    pub member_oracle: f64,
    /// Bound of all experts plus the one-classifier baseline on the same
    /// split; shared by every method at this point and seed.
    pub oracle: f64,
    pub coverage: f64,
    pub diagonal_dominant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: usize,
    pub method: Method,
    pub seeds: usize,
    pub mean: f64,
    pub standard_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub curve: Vec<CurvePoint>,
    /// Full evaluation of every row, same order.
    pub results: Vec<RunResult>,
}

pub fn curve(rows: &[SweepRow]) -> Vec<CurvePoint> {
    let mut groups: BTreeMap<(usize, Method), Vec<f64>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.x, r.method)).or_default().push(r.accuracy);
    }
    groups
        .into_iter()
        .map(|((x, method), v)| {
            let s = SeedStats::new(v);
            CurvePoint {
                x,
                method,
                seeds: s.per_seed_values.len(),
                mean: s.mean,
                standard_error: s.standard_error,
            }
        })
        .collect()
}

/// Trains `methods` at one sweep point. The one-classifier baseline does not
/// depend on the experts, so it is trained once per seed and reused.
fn run_point(
    cfg: &ExperimentConfig,
    p: &Prepared,
    point: usize,
    x: usize,
    seed: u64,
    one_classifier: &TrainedMethod,
    out: &mut SweepOutput,
) -> Result<()> {
    let clf_pred = one_classifier.predict(&p.test)?.predicted;
    let mut members: Vec<Vec<usize>> = p
        .test
        .expert_predictions()
        .map(|t| t.all().to_vec())
        .unwrap_or_default();
    members.push(clf_pred);
    let oracle = 100.0 * evaluate_oracle(&members, p.test.labels())?;
    for &method in &cfg.run.methods {
        let trained = if method == Method::OneClassifier {
            one_classifier.clone()
        } else {
            train_method(method, &p.train, &p.val, &cfg.train_config(seed))?
        };
        let r = score(&trained, &p.test, seed)?;
        out.rows.push(SweepRow {
            point,
            x,
            method,
            seed,
            accuracy: r.report.team_accuracy,
            member_oracle: r.report.oracle_accuracy,
            oracle,
            coverage: r.report.coverage,
            diagonal_dominant: r.report.diagonal_dominant,
        });
        out.results.push(r);
    }
    Ok(())
}

fn one_classifier(cfg: &ExperimentConfig, p: &Prepared, seed: u64) -> Result<TrainedMethod> {
    train_method(Method::OneClassifier, &p.train, &p.val, &cfg.train_config(seed))
}

/// Every method at every team size in `sweep.team_sizes`, for every seed.
pub fn sweep_team_size(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    if cfg.sweep.team_sizes.is_empty() {
        return Err(Error::Config("sweep.team_sizes is empty".into()));
    }
    let base = cfg.base_dataset()?;
    let mut out = SweepOutput {
        rows: Vec::new(),
        curve: Vec::new(),
        results: Vec::new(),
    };
    for &seed in &cfg.run.seeds {
        let mut clf: Option<TrainedMethod> = None;
        for &m in &cfg.sweep.team_sizes {
            let p = cfg.prepare(&base, Some(m), seed)?;
            if clf.is_none() {
                clf = Some(one_classifier(cfg, &p, seed)?);
            }
            run_point(cfg, &p, m, m, seed, clf.as_ref().unwrap(), &mut out)?;
        }
    }
    out.curve = curve(&out.rows);
    Ok(out)
}

/// Every method on the two-expert diversity construction for each run in
/// `sweep.diversity_runs`, for every seed.
pub fn sweep_diversity(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    if cfg.sweep.diversity_runs.is_empty() {
        return Err(Error::Config("sweep.diversity_runs is empty".into()));
    }
    let base = cfg.base_dataset()?;
    let mut out = SweepOutput {
        rows: Vec::new(),
        curve: Vec::new(),
        results: Vec::new(),
    };
    for &seed in &cfg.run.seeds {
        let mut clf: Option<TrainedMethod> = None;
        for &i in &cfg.sweep.diversity_runs {
            let roster = cfg.diversity_roster(&base, i)?;
            let p = cfg.prepare_with_roster(&base, Some(roster), seed)?;
            if clf.is_none() {
                clf = Some(one_classifier(cfg, &p, seed)?);
            }
            run_point(cfg, &p, i, 2 * (i - 1), seed, clf.as_ref().unwrap(), &mut out)?;
        }
    }
    out.curve = curve(&out.rows);
    Ok(out)
}

/// Writes `rows.csv` and `curve.csv` under `out`.
pub fn write_sweep(out_dir: &Path, sweep: &SweepOutput) -> Result<()> {
    create_dir(out_dir)?;
    let write = |name: &str, f: &dyn Fn(&mut csv::Writer<std::fs::File>) -> csv::Result<()>| {
        let path = out_dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::format(&path, e))?;
        f(&mut w).map_err(|e| Error::format(&path, e))?;
        w.flush().map_err(|e| Error::io(&path, e))
    };
    write("rows.csv", &|w| sweep.rows.iter().try_for_each(|r| w.serialize(r)))?;
    write("curve.csv", &|w| sweep.curve.iter().try_for_each(|c| w.serialize(c)))
}

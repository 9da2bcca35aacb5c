use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use teamalloc::baselines::TrainedMethod;
use teamalloc::checkpoint::Checkpoint;
use teamalloc::data::save_dataset;
use teamalloc::harness::{
    checkpoint_file, evaluate_checkpoints, export_allocation_records, run_experiment,
    sweep_diversity, sweep_team_size, train_checkpoints, write_sweep, ExperimentConfig, Summary,
};
use teamalloc::{Error, Result};

#[derive(Parser)]
#[command(name = "teamalloc", version, about = "Train and evaluate human-AI team allocators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Run a single seed instead of `run.seeds`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct WithCheckpoints {
    #[command(flatten)]
    common: Common,
    /// Checkpoint directory; defaults to `run.checkpoint_dir`, then `--out`.
    #[arg(long)]
    checkpoints: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the dataset (with the seed's expert predictions) as CSV plus manifest.
    GenData(Common),
    /// Write the seed's expert roster as JSON.
    GenExperts(Common),
    /// Train every configured method and save checkpoints.
    Train(Common),
    /// Evaluate saved checkpoints on the test split.
    Evaluate(WithCheckpoints),
    /// Train and evaluate in one go.
    Run(Common),
    /// Accuracy against team size.
    SweepTeamSize(Common),
    /// Accuracy against expert diversity.
    SweepDiversity(Common),
    /// Per-instance allocation records of saved checkpoints.
    ExportRecords(WithCheckpoints),
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.run.seeds = vec![s];
        }
        Ok(cfg)
    }
}

impl WithCheckpoints {
    fn dir(&self, cfg: &ExperimentConfig) -> PathBuf {
        self.checkpoints
            .clone()
            .or_else(|| cfg.run.checkpoint_dir.clone())
            .unwrap_or_else(|| self.common.out.clone())
    }
}

fn print_summary(s: &Summary) {
    for m in &s.methods {
        let se = m
            .team_accuracy
            .standard_error
            .map(|e| format!(" ± {e:.2}"))
            .unwrap_or_default();
        println!("{:<16} {:6.2}%{se}", m.method.as_str(), m.team_accuracy.mean);
    }
}

fn create(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::GenData(c) => {
            let cfg = c.load()?;
            let seed = cfg.run.seeds[0];
            let base = cfg.base_dataset()?;
            let roster = cfg.roster(&base, cfg.experts.m, seed)?;
            let ds = cfg.with_experts(base, roster.as_ref(), seed)?;
            create(&c.out)?;
            let path = c.out.join("dataset.csv");
            save_dataset(&ds, &path, serde_json::json!({ "data": cfg.data, "seed": seed }))?;
            println!("{}", path.display());
        }
        Command::GenExperts(c) => {
            let cfg = c.load()?;
            let base = cfg.base_dataset()?;
            create(&c.out)?;
            for &seed in &cfg.run.seeds {
                let roster = cfg
                    .roster(&base, cfg.experts.m, seed)?
                    .ok_or_else(|| Error::Config("experts.source does not generate experts".into()))?;
                let path = c.out.join(format!("roster-seed{seed}.json"));
                roster.save(&path)?;
                println!("{}", path.display());
            }
        }
        Command::Train(c) => {
            let cfg = c.load()?;
            for p in train_checkpoints(&cfg, &c.out)? {
                println!("{}", p.display());
            }
        }
        Command::Evaluate(w) => {
            let cfg = w.common.load()?;
            print_summary(&evaluate_checkpoints(&cfg, &w.dir(&cfg), &w.common.out)?);
        }
        Command::Run(c) => {
            let cfg = c.load()?;
            print_summary(&run_experiment(&cfg, &c.out)?);
        }
        Command::SweepTeamSize(c) => {
            let cfg = c.load()?;
            let s = sweep_team_size(&cfg)?;
            write_sweep(&c.out, &s)?;
            println!("{} rows", s.rows.len());
        }
        Command::SweepDiversity(c) => {
            let cfg = c.load()?;
            let s = sweep_diversity(&cfg)?;
            write_sweep(&c.out, &s)?;
            println!("{} rows", s.rows.len());
        }
        Command::ExportRecords(w) => {
            let cfg = w.common.load()?;
            let dir = w.dir(&cfg);
            let base = cfg.base_dataset()?;
            for &seed in &cfg.run.seeds {
                let p = cfg.prepare(&base, None, seed)?;
                for &method in &cfg.run.methods {
                    let ckpt = Checkpoint::load(&checkpoint_file(&dir, method, seed))?;
                    let trained = TrainedMethod {
                        method: ckpt.method,
                        model: ckpt.model,
                        trace: None,
                    };
                    let a = trained.predict(&p.test)?;
                    let path = w
                        .common
                        .out
                        .join("records")
                        .join(format!("{method}-seed{seed}.jsonl"));
                    let n = export_allocation_records(&a, p.test.labels(), &path)?;
                    println!("{} ({n} records)", path.display());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

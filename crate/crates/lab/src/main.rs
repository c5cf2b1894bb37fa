use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rta_core::harness::audit_filters;
use rta_core::rta::FilterKind;
use rta_lab::config::{default_study, parse_config, StudyConfig};
use rta_lab::report::{export_curves, render_tables};
use rta_lab::study::{run_study, RunOptions};

#[derive(Parser)]
#[command(name = "rta-lab", version, about = "Train, evaluate and tabulate RTA ablation studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (spec, seed) of a study.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "RTA_LAB_OUT")]
        out: Option<PathBuf>,
        #[arg(long)]
        parallel: Option<usize>,
        /// Comma-separated seed list replacing every spec's seeds.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        resume: bool,
        #[arg(long, short)]
        quiet: bool,
    },
    /// Print mean ± std tables of the final evaluations.
    Tables {
        #[arg(long, env = "RTA_LAB_OUT", default_value = "results")]
        out: PathBuf,
    },
    /// Write per-epoch mean and 95% CI curves as CSV under <out>/curves.
    Curves {
        #[arg(long, env = "RTA_LAB_OUT", default_value = "results")]
        out: PathBuf,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Drive every filter pairing with a random policy and count violations.
    FiltersAudit {
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn load(config: Option<&PathBuf>) -> Result<StudyConfig> {
    match config {
        Some(p) => parse_config(p).with_context(|| format!("invalid config {}", p.display())),
        None => Ok(default_study()),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            parallel,
            seeds,
            resume,
            quiet,
        } => {
            let mut study = load(config.as_ref())?;
            if let Some(seeds) = seeds {
                if seeds.is_empty() {
                    bail!("--seeds needs at least one seed");
                }
                for s in &mut study.specs {
                    s.seeds = seeds.clone();
                }
            }
            let out = out.or(study.out.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let opts = RunOptions {
                out,
                parallel: parallel.unwrap_or(study.parallel).max(1),
                resume,
                verbose: !quiet,
            };
            let report = run_study(&study, &opts)?;
            println!(
                "{} runs: {} completed, {} skipped, {} failed, {} training steps",
                report.total, report.completed, report.skipped, report.failed, report.training_steps
            );
            Ok(if report.success() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::Tables { out } => {
            print!("{}", render_tables(&out)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Curves { out } => {
            for p in export_curves(&out)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { config } => {
            let study = parse_config(&config).with_context(|| format!("invalid config {}", config.display()))?;
            let runs: usize = study.specs.iter().map(|s| s.seeds.len()).sum();
            println!("ok: {} specs, {} runs", study.specs.len(), runs);
            Ok(ExitCode::SUCCESS)
        }
        Command::FiltersAudit { episodes, seed } => {
            let rows = audit_filters(episodes, seed)?;
            println!("env,filter,episodes,steps,interventions,violations,violating_episodes");
            let mut ok = true;
            for r in &rows {
                println!(
                    "{},{},{},{},{},{},{}",
                    r.env, r.filter, r.episodes, r.steps, r.interventions, r.violations, r.violating_episodes
                );
                if r.filter != FilterKind::None && r.violations > 0 {
                    ok = false;
                }
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
    }
}

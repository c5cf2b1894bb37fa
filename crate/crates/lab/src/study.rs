//! Runs every (spec, seed) pair of a study and persists the results.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rta_core::harness::{train_observed, ExperimentSpec};

use crate::config::StudyConfig;
use crate::results::{self, ResultFile};

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub parallel: usize,
    /// Skip runs whose result file already exists.
    pub resume: bool,
    pub verbose: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StudyReport {
    pub total: usize,
    pub skipped: usize,
    pub completed: usize,
    /// Failed runs, finished now or earlier.
    pub failed: usize,
    pub training_steps: u64,
}

impl StudyReport {
    pub fn success(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("{0} result file(s) already exist in {1}; pass --resume to continue the study")]
    ExistingResults(usize, PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Config(#[from] rta_core::error::ConfigError),
}

struct Job<'a> {
    spec: &'a ExperimentSpec,
    hash: String,
    seed: u64,
}

pub fn run_study(config: &StudyConfig, opts: &RunOptions) -> Result<StudyReport, StudyError> {
    let mut jobs: Vec<Job<'_>> = Vec::new();
    for spec in &config.specs {
        let hash = results::config_hash(spec);
        for &seed in &spec.seeds {
            if !jobs.iter().any(|j| j.hash == hash && j.seed == seed) {
                jobs.push(Job {
                    spec,
                    hash: hash.clone(),
                    seed,
                });
            }
        }
    }
    let mut report = StudyReport {
        total: jobs.len(),
        ..Default::default()
    };
    let mut pending = Vec::new();
    for job in jobs {
        let path = results::result_path(&opts.out, &job.hash, job.seed);
        if path.exists() {
            report.skipped += 1;
            if results::read_result(&path)?.result.failed() {
                report.failed += 1;
            }
        } else {
            pending.push(job);
        }
    }
    if report.skipped > 0 && !opts.resume {
        return Err(StudyError::ExistingResults(report.skipped, opts.out.clone()));
    }
    std::fs::create_dir_all(&opts.out)?;

    let next = AtomicUsize::new(0);
    let shared = Mutex::new((report, None::<StudyError>));
    let workers = opts.parallel.max(1).min(pending.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(job) = pending.get(i) else { break };
                if shared.lock().unwrap().1.is_some() {
                    break;
                }
                let outcome = run_one(job, opts);
                let mut guard = shared.lock().unwrap();
                match outcome {
                    Ok((failed, steps)) => {
                        guard.0.completed += 1;
                        guard.0.training_steps += steps;
                        if failed {
                            guard.0.failed += 1;
                        }
                        if let Err(e) = results::write_index(&opts.out) {
                            guard.1.get_or_insert(e.into());
                        }
                    }
                    Err(e) => {
                        guard.1.get_or_insert(e);
                    }
                }
            });
        }
    });
    let (report, err) = shared.into_inner().unwrap();
    if let Some(e) = err {
        return Err(e);
    }
    results::write_index(&opts.out)?;
    Ok(report)
}

fn run_one(job: &Job<'_>, opts: &RunOptions) -> Result<(bool, u64), StudyError> {
    let stem = results::run_stem(&job.hash, job.seed);
    let spec = job.spec;
    let label = format!("{stem} {}/{}/{}/{}", spec.env, spec.algorithm.algorithm(), spec.filter, spec.config);
    let started = Instant::now();
    let verbose = opts.verbose;
    let out = train_observed(spec, job.seed, &mut |r| {
        if verbose {
            eprintln!(
                "[{label}] epoch {:>4}  return on {:>9.2}  off {:>9.2}  success on {:.2}  off {:.2}",
                r.epoch + 1,
                r.on.ret.mean,
                r.off.ret.mean,
                r.on.success.mean,
                r.off.success.mean
            );
        }
    })?;
    let ckpt = results::encode_checkpoint(&out.agent.tensors());
    results::write_atomic(&results::checkpoint_path(&opts.out, &job.hash, job.seed), &ckpt)?;
    let file = ResultFile::new(spec, out.result);
    results::write_result(&opts.out, &file)?;
    let seconds = started.elapsed().as_secs_f64();
    results::append_timing(&opts.out, &job.hash, job.seed, seconds)?;
    if verbose {
        match &file.result.failure {
            Some(f) => eprintln!("[{label}] FAILED after {seconds:.1}s: {f}"),
            None => eprintln!("[{label}] done in {seconds:.1}s"),
        }
    }
    Ok((file.result.failed(), file.result.training.steps))
}

//! Study configuration files (TOML).
//!
//! ```toml
//! version = 1
//!
//! [study]
//! out = "results"
//! parallel = 2
//!
//! [base]            # defaults for every spec below
//! algorithm = "ppo"
//! seeds = [1630, 2241]
//!
//! [grid]            # cartesian product; an empty axis takes the base value
//! env = ["docking2d", "docking3d"]
//! filter = ["explicit_simplex", "implicit_asif"]
//! config = ["baseline", "rta_punishment"]
//!
//! [[experiment]]    # explicit specs, layered over [base]
//! env = "pendulum"
//! filter = "implicit_simplex"
//! config = "rta_corrected_action"
//! [experiment.ppo]
//! epochs = 20
//! ```

use std::ops::Range;
use std::path::{Path, PathBuf};

use rta_core::agents::{Activation, Algorithm, PpoHyperparams, SacHyperparams};
use rta_core::env::{DockingParams, EnvKind, PendulumParams};
use rta_core::error::ConfigError;
use rta_core::harness::{AlgoSpec, ExperimentSpec, PAPER_SEEDS};
use rta_core::rta::{FilterKind, FilterParams};
use rta_core::trainconfig::ConfigKind;
use serde::{Deserialize, Serialize};
use toml::Spanned;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ConfigFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Syntax(#[from] toml::de::Error),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub version: u32,
    pub out: Option<PathBuf>,
    pub parallel: usize,
    pub specs: Vec<ExperimentSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    version: u32,
    #[serde(default)]
    study: RawStudy,
    base: Option<Spanned<RawEntry>>,
    grid: Option<Spanned<RawGrid>>,
    #[serde(default)]
    experiment: Vec<Spanned<RawEntry>>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawStudy {
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    parallel: Option<usize>,
}

#[derive(Debug, Default, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(default)]
    env: Vec<EnvKind>,
    #[serde(default)]
    filter: Vec<FilterKind>,
    #[serde(default)]
    config: Vec<ConfigKind>,
    #[serde(default)]
    algorithm: Vec<Algorithm>,
}

/// Generates an all-optional mirror of a hyperparameter struct; omitted
/// keys fall back to the per-environment defaults.
macro_rules! overrides {
    ($name:ident for $target:ident { $($field:ident: $ty:ty),* $(,)? }) => {
        #[derive(Debug, Default, Clone, Deserialize, Serialize)]
        #[serde(deny_unknown_fields)]
        struct $name {
            $(
                #[serde(skip_serializing_if = "Option::is_none")]
                $field: Option<$ty>,
            )*
        }

        impl $name {
            fn layer(self, under: Self) -> Self {
                Self { $($field: self.$field.or(under.$field)),* }
            }

            fn apply(self, mut hp: $target) -> $target {
                $(if let Some(v) = self.$field { hp.$field = v; })*
                hp
            }

            fn from_full(hp: &$target) -> Self {
                Self { $($field: Some(hp.$field.clone())),* }
            }
        }
    };
}

overrides!(PpoOverrides for PpoHyperparams {
    epoch_length: usize,
    epochs: usize,
    gamma: f64,
    clip_ratio: f64,
    actor_lr: f64,
    critic_lr: f64,
    updates_per_epoch: usize,
    target_kl: f64,
    gae_lambda: f64,
    max_episode_length: usize,
    hidden: Vec<usize>,
    log_std_init: f64,
    normalize_advantages: bool,
});

overrides!(SacOverrides for SacHyperparams {
    epoch_length: usize,
    epochs: usize,
    replay_size: usize,
    gamma: f64,
    polyak: f64,
    alpha: f64,
    actor_lr: f64,
    critic_lr: f64,
    minibatch_size: usize,
    update_after: usize,
    max_episode_length: usize,
    hidden: Vec<usize>,
    critic_output: Activation,
});

#[derive(Debug, Default, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    env: Option<EnvKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    filter: Option<FilterKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config: Option<ConfigKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    algorithm: Option<Algorithm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seeds: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eval_episodes_interim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eval_episodes_final: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eval_every: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    filter_params: Option<FilterParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ppo: Option<PpoOverrides>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sac: Option<SacOverrides>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pendulum: Option<PendulumParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    docking: Option<DockingParams>,
}

impl RawEntry {
    fn layer(self, under: &RawEntry) -> RawEntry {
        let under = under.clone();
        RawEntry {
            env: self.env.or(under.env),
            filter: self.filter.or(under.filter),
            config: self.config.or(under.config),
            algorithm: self.algorithm.or(under.algorithm),
            seeds: self.seeds.or(under.seeds),
            eval_episodes_interim: self.eval_episodes_interim.or(under.eval_episodes_interim),
            eval_episodes_final: self.eval_episodes_final.or(under.eval_episodes_final),
            eval_every: self.eval_every.or(under.eval_every),
            filter_params: self.filter_params.or(under.filter_params),
            ppo: match (self.ppo, under.ppo) {
                (Some(a), Some(b)) => Some(a.layer(b)),
                (a, b) => a.or(b),
            },
            sac: match (self.sac, under.sac) {
                (Some(a), Some(b)) => Some(a.layer(b)),
                (a, b) => a.or(b),
            },
            pendulum: self.pendulum.or(under.pendulum),
            docking: self.docking.or(under.docking),
        }
    }

    fn build(self) -> Result<ExperimentSpec, String> {
        let env = self.env.ok_or("missing required field `env`")?;
        let filter = self.filter.ok_or("missing required field `filter`")?;
        let config = self.config.ok_or("missing required field `config`")?;
        let algorithm = self.algorithm.ok_or("missing required field `algorithm`")?;
        let mut spec = ExperimentSpec::new(env, filter, config, algorithm);
        spec.algorithm = match algorithm {
            Algorithm::Ppo => {
                if self.sac.is_some() {
                    return Err("`sac` hyperparameters given for a ppo experiment".into());
                }
                AlgoSpec::Ppo(self.ppo.unwrap_or_default().apply(PpoHyperparams::for_env(env)))
            }
            Algorithm::Sac => {
                if self.ppo.is_some() {
                    return Err("`ppo` hyperparameters given for a sac experiment".into());
                }
                AlgoSpec::Sac(self.sac.unwrap_or_default().apply(SacHyperparams::for_env(env)))
            }
        };
        if let Some(s) = self.seeds {
            spec.seeds = s;
        }
        if let Some(v) = self.eval_episodes_interim {
            spec.eval_episodes_interim = v;
        }
        if let Some(v) = self.eval_episodes_final {
            spec.eval_episodes_final = v;
        }
        if let Some(v) = self.eval_every {
            spec.eval_every = v;
        }
        if let Some(v) = self.filter_params {
            spec.filter_params = v;
        }
        if let Some(v) = self.pendulum {
            spec.pendulum = v;
        }
        if let Some(v) = self.docking {
            spec.docking = v;
        }
        if spec.seeds.is_empty() {
            return Err("`seeds` must not be empty".into());
        }
        spec.validate().map_err(|e: ConfigError| e.to_string())?;
        Ok(spec)
    }

    fn from_spec(spec: &ExperimentSpec) -> RawEntry {
        let (ppo, sac) = match &spec.algorithm {
            AlgoSpec::Ppo(h) => (Some(PpoOverrides::from_full(h)), None),
            AlgoSpec::Sac(h) => (None, Some(SacOverrides::from_full(h))),
        };
        RawEntry {
            env: Some(spec.env),
            filter: Some(spec.filter),
            config: Some(spec.config),
            algorithm: Some(spec.algorithm.algorithm()),
            seeds: Some(spec.seeds.clone()),
            eval_episodes_interim: Some(spec.eval_episodes_interim),
            eval_episodes_final: Some(spec.eval_episodes_final),
            eval_every: Some(spec.eval_every),
            filter_params: Some(spec.filter_params),
            ppo,
            sac,
            pendulum: Some(spec.pendulum),
            docking: Some(spec.docking),
        }
    }
}

fn axis<T: Copy>(values: &[T], base: Option<T>) -> Vec<Option<T>> {
    if values.is_empty() {
        vec![base]
    } else {
        values.iter().map(|&v| Some(v)).collect()
    }
}

fn line_of(src: &str, span: Range<usize>) -> usize {
    src[..span.start.min(src.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub fn parse_config_str(src: &str) -> Result<StudyConfig, ConfigFileError> {
    let raw: RawFile = toml::from_str(src)?;
    let invalid = |span: Range<usize>, message: String| ConfigFileError::Invalid {
        line: line_of(src, span),
        message,
    };
    if raw.version != FORMAT_VERSION {
        return Err(invalid(0..0, format!("unsupported config version {} (expected {FORMAT_VERSION})", raw.version)));
    }
    let (base, base_span) = match raw.base {
        Some(b) => {
            let span = b.span();
            (b.into_inner(), span)
        }
        None => (RawEntry::default(), 0..0),
    };
    let mut specs = Vec::new();
    if let Some(grid) = &raw.grid {
        let span = grid.span();
        let g = grid.get_ref();
        for env in axis(&g.env, base.env) {
            for filter in axis(&g.filter, base.filter) {
                for config in axis(&g.config, base.config) {
                    for algorithm in axis(&g.algorithm, base.algorithm) {
                        let entry = RawEntry {
                            env,
                            filter,
                            config,
                            algorithm,
                            ..RawEntry::default()
                        }
                        .layer(&base);
                        specs.push(entry.build().map_err(|m| invalid(span.clone(), format!("grid: {m}")))?);
                    }
                }
            }
        }
    }
    for e in raw.experiment {
        let span = e.span();
        specs.push(e.into_inner().layer(&base).build().map_err(|m| invalid(span, m))?);
    }
    if raw.grid.is_none() && specs.is_empty() {
        specs.push(base.build().map_err(|m| invalid(base_span, m))?);
    }
    if raw.study.parallel == Some(0) {
        return Err(invalid(0..0, "`study.parallel` must be at least 1".into()));
    }
    Ok(StudyConfig {
        version: raw.version,
        out: raw.study.out,
        parallel: raw.study.parallel.unwrap_or(1),
        specs,
    })
}

pub fn parse_config(path: &Path) -> Result<StudyConfig, ConfigFileError> {
    let src = std::fs::read_to_string(path).map_err(|source| ConfigFileError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&src)
}

/// Serialises a config with every spec written out in full.
pub fn write_config(config: &StudyConfig) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        version: u32,
        study: &'a RawStudy,
        experiment: Vec<RawEntry>,
    }
    let study = RawStudy {
        out: config.out.clone(),
        parallel: Some(config.parallel),
    };
    let out = Out {
        version: config.version,
        study: &study,
        experiment: config.specs.iter().map(RawEntry::from_spec).collect(),
    };
    toml::to_string(&out).expect("study config serialises")
}

/// Default study for `run` without a config file: the pendulum PPO baseline.
pub fn default_study() -> StudyConfig {
    StudyConfig {
        version: FORMAT_VERSION,
        out: None,
        parallel: 1,
        specs: vec![ExperimentSpec::new(
            EnvKind::Pendulum,
            FilterKind::ImplicitSimplex,
            ConfigKind::Baseline,
            Algorithm::Ppo,
        )],
    }
}

pub fn paper_seeds() -> Vec<u64> {
    PAPER_SEEDS.to_vec()
}

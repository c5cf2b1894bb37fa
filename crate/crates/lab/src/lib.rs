//! Study runner for `rta-core`: config files, result persistence, tables
//! and curve exports.

pub mod config;
pub mod report;
pub mod results;
pub mod study;

pub use config::{parse_config, parse_config_str, write_config, StudyConfig};
pub use study::{run_study, RunOptions, StudyReport};

use alloc::string::String;

use crate::env::EnvKind;
use crate::rta::FilterKind;
use crate::trainconfig::ConfigKind;

/// A spec, filter or configuration that cannot be assembled.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("filter `{filter}` is not available for environment `{env}`")]
    UnsupportedFilter { env: EnvKind, filter: FilterKind },
    #[error("configuration `{config}` cannot be trained with filter `{filter}`")]
    FilterMismatch { config: ConfigKind, filter: FilterKind },
    #[error("environment `{0}` provides no control-affine model for barrier rows")]
    NoBarrierModel(EnvKind),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Raised by a learner update; the run is aborted and flagged.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnerError {
    #[error("non-finite {what} during {phase}")]
    NonFinite {
        what: &'static str,
        phase: &'static str,
    },
}

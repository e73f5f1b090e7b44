use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::align::DEFAULT_LAMBDA;
use crate::baselines::BaselineConfig;
use crate::build::MergePolicy;
use crate::error::{Error, Result};
use crate::gat::GatConfig;
use crate::ingest::{FallbackMode, DEFAULT_IDF_THRESHOLD};
use crate::metrics::{Average, TypeMatch};

/// File locations that may come from the config instead of flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub docs: Option<PathBuf>,
    pub graphs: Option<PathBuf>,
    pub targets: Option<PathBuf>,
    pub pred: Option<PathBuf>,
    pub alignments: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub selections: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Everything a run depends on besides its input files. Loaded from TOML;
/// flags override individual values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub lambda: f64,
    pub tau: f64,
    pub merge_policy: MergePolicy,
    pub average: Average,
    pub type_match: TypeMatch,
    pub embedding_fallback: FallbackMode,
    pub baseline: BaselineConfig,
    pub gat: GatConfig,
    /// Not echoed in report headers, so reports do not depend on where files live.
    #[serde(skip_serializing)]
    pub paths: PathsConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            lambda: DEFAULT_LAMBDA,
            tau: DEFAULT_IDF_THRESHOLD,
            merge_policy: MergePolicy::default(),
            average: Average::default(),
            type_match: TypeMatch::default(),
            embedding_fallback: FallbackMode::Hash,
            baseline: BaselineConfig::default(),
            gat: GatConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let de = toml::Deserializer::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        serde_path_to_error::deserialize(de).map_err(|e| Error::AtPath {
            path: format!("{}:{}", path.display(), e.path()),
            source: Box::new(Error::Config(e.inner().message().to_string())),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(Error::Config("lambda must lie in [0, 1]".into()));
        }
        if !self.tau.is_finite() {
            return Err(Error::Config("tau must be finite".into()));
        }
        self.baseline.validate()?;
        self.gat.validate()
    }

    /// SHA-256 of the canonical JSON echo.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Metadata block at the top of every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub config: RunConfig,
}

impl ReportHeader {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        ReportHeader {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: config.hash(),
            seed: config.seed,
            config: config.clone(),
        }
    }
}

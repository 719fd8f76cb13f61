use std::fs;
use std::path::{Path, PathBuf};

use emoglass::fusion::FusionConfig;
use emoglass::synth::SynthSpec;
use serde::{Deserialize, Serialize};

use crate::Failure;

/// Settings shared by every subcommand. Read from TOML, then overridden by flags.
///
/// The top-level `seed` wins over any seed written inside `[synth]` or `[pipeline]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub verbosity: u8,
    /// Not echoed into artifacts, so the same run written to two places is byte-identical.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
    pub synth: SynthSpec,
    pub pipeline: FusionConfig,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::config(format!("invalid config {}: {e}", path.display())))
    }

    /// Applies global flags and propagates the seed into both sections.
    pub fn resolve(mut self, seed: Option<u64>, out: Option<PathBuf>, verbose: u8) -> Self {
        if let Some(s) = seed {
            self.seed = s;
        }
        if out.is_some() {
            self.output_dir = out;
        }
        self.verbosity = self.verbosity.max(verbose);
        self.synth.seed = self.seed;
        self.pipeline.seed = self.seed;
        self
    }

    pub fn out_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

/// The resolved configuration as echoed next to every artifact.
#[derive(Debug, Serialize)]
pub struct Provenance<'a> {
    pub command: &'a str,
    pub version: &'a str,
    pub config: &'a RunConfig,
}

impl<'a> Provenance<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            config,
        }
    }
}

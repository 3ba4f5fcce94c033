//! Run configuration: an optional TOML file with command-line overrides.

use std::path::Path;

use anyhow::{Context, Result};
use becpro::stats::HypothesisThresholds;
use becpro::{FinetuneConfig, Language, ToyMlmConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub lang: Language,
    pub backend: Option<String>,
    pub strict: bool,
    pub score: ScoreSection,
    pub cds: CdsSection,
    pub toy: ToyMlmConfig,
    pub finetune: FinetuneConfig,
    pub report: HypothesisThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreSection {
    pub batch_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CdsSection {
    pub swap_probability: f64,
    pub default_discriminator: String,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 42,
            lang: Language::English,
            backend: None,
            strict: false,
            score: ScoreSection::default(),
            cds: CdsSection::default(),
            toy: ToyMlmConfig::default(),
            finetune: FinetuneConfig::default(),
            report: HypothesisThresholds::default(),
        }
    }
}

impl Default for ScoreSection {
    fn default() -> Self {
        Self { batch_size: 32 }
    }
}

impl Default for CdsSection {
    fn default() -> Self {
        Self { swap_probability: becpro::cds::DEFAULT_SWAP_PROBABILITY, default_discriminator: "poss".into() }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Copies the global seed into every seeded stage.
    pub fn propagate_seed(&mut self) {
        self.toy.seed = self.seed;
        self.finetune.seed = self.seed;
    }
}

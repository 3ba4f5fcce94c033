//! `--backend toy:<path>` or `--backend bridge:<url>`.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use becpro::{BridgeClient, MlmScorer, ToyMlm};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Toy(PathBuf),
    Bridge(String),
}

impl FromStr for BackendSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            Some(("toy", path)) if !path.is_empty() => Ok(Self::Toy(PathBuf::from(path))),
            Some(("bridge", url)) if !url.is_empty() => Ok(Self::Bridge(url.to_string())),
            _ => Err(format!("expected toy:<checkpoint> or bridge:<url>, got {s:?}")),
        }
    }
}

pub enum Backend {
    Toy { model: ToyMlm, path: PathBuf },
    Bridge(BridgeClient),
}

impl Backend {
    pub fn open(spec: &BackendSpec) -> Result<Self> {
        match spec {
            BackendSpec::Toy(path) => {
                let model = ToyMlm::load(path).with_context(|| format!("loading toy checkpoint {}", path.display()))?;
                Ok(Self::Toy { model, path: path.clone() })
            }
            BackendSpec::Bridge(url) => Ok(Self::Bridge(BridgeClient::connect(url)?)),
        }
    }

    pub fn scorer(&self) -> &dyn MlmScorer {
        match self {
            Self::Toy { model, .. } => model,
            Self::Bridge(client) => client,
        }
    }
}

/// Resolves the backend from the flag or the config file.
pub fn required(spec: Option<&str>) -> Result<BackendSpec> {
    match spec {
        Some(s) => s.parse().map_err(anyhow::Error::msg).context("--backend"),
        None => bail!("this command needs --backend toy:<checkpoint> or --backend bridge:<url>"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_both_kinds() {
        assert_eq!("toy:m.json".parse(), Ok(BackendSpec::Toy("m.json".into())));
        assert_eq!("bridge:http://h:1".parse(), Ok(BackendSpec::Bridge("http://h:1".into())));
        assert!("toy:".parse::<BackendSpec>().is_err());
        assert!("gpu:x".parse::<BackendSpec>().is_err());
    }
}

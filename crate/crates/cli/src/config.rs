use std::path::Path;

use fraudgraph::ingest::EncoderConfig;
use fraudgraph::rgcn::ModelConfig;
use fraudgraph::synthgen::GenConfig;
use fraudgraph::training::TrainConfig;
use serde::Deserialize;

use crate::Failure;

/// Settings for `simulate`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkflowConfig {
    pub threshold: f64,
    pub contact_fraction: f64,
    pub seed: u64,
}

impl Default for WorkflowConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            contact_fraction: 0.5,
            seed: 0,
        }
    }
}

/// Contents of a `--config` TOML file. Every section and key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfigFile {
    pub train: TrainConfig,
    pub gen: GenConfig,
    pub encoder: EncoderConfig,
    pub model: ModelConfig,
    pub workflow: WorkflowConfig,
}

impl RunConfigFile {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::data(format!("config: {}", e.message())))
    }

    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::data(format!("cannot read {}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    /// Training settings with the model section folded in.
    pub fn training(&self) -> TrainConfig {
        TrainConfig {
            model: self.model.clone(),
            ..self.train.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfigFile::parse("").unwrap(), RunConfigFile::default());
    }

    #[test]
    fn sections_are_read() {
        let cfg = RunConfigFile::parse(
            "[train]\nepochs = 7\n[model]\nlayer_dims = [8]\n[gen]\nseed = 3\n[workflow]\ncontact_fraction = 0.2\n",
        )
        .unwrap();
        assert_eq!(cfg.training().epochs, 7);
        assert_eq!(cfg.training().model.layer_dims, vec![8]);
        assert_eq!(cfg.gen.seed, 3);
        assert_eq!(cfg.workflow.contact_fraction, 0.2);
    }

    #[test]
    fn unknown_keys_name_the_key() {
        for (text, key) in [("[train]\nepoch = 3\n", "epoch"), ("[trian]\n", "trian"), ("[encoder]\nbuckets = 1\n", "buckets")] {
            let err = RunConfigFile::parse(text).unwrap_err();
            assert!(err.message.contains(key), "{}", err.message);
        }
    }
}

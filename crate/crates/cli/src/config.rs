use std::path::Path;

use cogprior_core::models::BeastParams;
use cogprior_core::pipeline::{HumanSimConfig, TrainConfig};
use cogprior_core::space::SpaceConfig;
use cogprior_core::Schema;
use cogprior_service::ServiceConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Contents of the `--config` TOML file. Every section is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub space: Option<SpaceConfig>,
    pub beast: BeastParams,
    pub train: TrainConfig,
    pub humans: HumanSimConfig,
    pub service: ServiceConfig,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        let cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        cfg.train
            .network
            .validate()
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        cfg.humans.validate()?;
        cfg.beast
            .validate()
            .map_err(|e| CliError::Invalid(format!("{}: [beast] {e}", path.display())))?;
        Ok(cfg)
    }

    /// The `[space]` section, or the schema's defaults.
    pub fn space_for(&self, schema: Schema) -> SpaceConfig {
        match &self.space {
            Some(s) => s.clone(),
            None => SpaceConfig::for_schema(schema),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_override_defaults() {
        let cfg: FileConfig = toml::from_str(
            "[train.finetune]\nlearning_rate = 0.01\n[humans]\nparticipants = 8\n[beast]\nn_agents = 50\n",
        )
        .unwrap();
        assert_eq!(cfg.train.finetune.learning_rate, 0.01);
        assert_eq!(cfg.train.pretrain, TrainConfig::default().pretrain);
        assert_eq!(cfg.humans.participants, Some(8));
        assert_eq!(cfg.beast.n_agents, 50);
        assert_eq!(cfg.space_for(Schema::Cpc18), SpaceConfig::cpc18());
    }

    #[test]
    fn unknown_sections_are_rejected() {
        assert!(toml::from_str::<FileConfig>("[nope]\nx = 1\n").is_err());
    }
}

//! JSON run configuration.
//!
//! A config file has three optional sections, each with every key optional:
//!
//! ```json
//! {
//!   "instance": { "capacity": 80, "sharing_rate": 0.0 },
//!   "learn": { "episodes": 4000, "horizon": 100, "sigma0": 10.0 },
//!   "scenario": { "name": "base", "replications": 5, "seeds": [] }
//! }
//! ```
//!
//! Unknown keys are rejected, and every error names the offending key path.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{ScenarioSpec, SweepAxis, DEFAULT_REPLICATIONS};
use crate::learner::LearnConfig;
use crate::market::InstanceConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    pub replications: u32,
    pub seeds: Vec<u64>,
    pub sweep_axis: Option<SweepAxis>,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self { name: "base".into(), replications: DEFAULT_REPLICATIONS, seeds: Vec::new(), sweep_axis: None }
    }
}

/// The on-disk document, also embedded fully resolved in run manifests.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub instance: InstanceConfig,
    pub learn: LearnConfig,
    pub scenario: ScenarioSection,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ConfigFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::Config(format!("{path}: {}", e.into_inner()))
        })?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<()> {
        fn within(section: &'static str) -> impl Fn(Error) -> Error {
            move |e| match e {
                Error::Config(msg) => Error::Config(format!("{section}.{msg}")),
                other => other,
            }
        }
        self.instance.validate().map_err(within("instance"))?;
        self.learn.validate().map_err(within("learn"))?;
        self.spec().validate().map_err(within("scenario"))
    }

    pub fn spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            name: self.scenario.name.clone(),
            instance: self.instance.clone(),
            learn: self.learn.clone(),
            sweep_axis: self.scenario.sweep_axis.clone(),
            replications: self.scenario.replications,
            seeds: self.scenario.seeds.clone(),
        }
    }

    pub fn from_spec(spec: &ScenarioSpec) -> Self {
        Self {
            instance: spec.instance.clone(),
            learn: spec.learn.clone(),
            scenario: ScenarioSection {
                name: spec.name.clone(),
                replications: spec.replications,
                seeds: spec.seeds.clone(),
                sweep_axis: spec.sweep_axis.clone(),
            },
        }
    }

    /// SHA-256 of the canonical JSON of the resolved config, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

/// Reads and validates a config file, filling every missing key with its default.
pub fn parse_config(path: &Path) -> Result<(InstanceConfig, LearnConfig, ScenarioSpec)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let file = ConfigFile::from_json(&text)?;
    let spec = file.spec();
    Ok((file.instance, file.learn, spec))
}

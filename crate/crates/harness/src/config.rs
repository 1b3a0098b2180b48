//! Run configuration: strict TOML with dotted-key overrides.

use std::path::{Path, PathBuf};

use auv_core::dynamics::VehicleParams;
use auv_core::env::EnvConfig;
use auv_ppo::checkpoint::config_hash;
use auv_ppo::PpoConfig;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub vehicle: VehicleParams,
    #[serde(default)]
    pub env: EnvConfig,
    #[serde(default)]
    pub ppo: PpoConfig,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs/default")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: default_output_dir(),
            vehicle: VehicleParams::default(),
            env: EnvConfig::default(),
            ppo: PpoConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses config text, applies `key=value` overrides and validates every section.
    pub fn from_toml(text: &str, origin: &str, overrides: &[String]) -> Result<Self, HarnessError> {
        // parsing the raw text first keeps line/column information in errors
        toml::from_str::<RunConfig>(text).map_err(|e| HarnessError::Input(format!("{origin}: {e}")))?;
        let mut value: toml::Table = toml::from_str(text).map_err(|e| HarnessError::Input(format!("{origin}: {e}")))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg = RunConfig::deserialize(toml::Value::Table(value))
            .map_err(|e| HarnessError::Input(format!("{origin} after overrides: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, &path.display().to_string(), overrides)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let input = |section: &str, e: String| HarnessError::Input(format!("[{section}] {e}"));
        self.vehicle.validate().map_err(|e| input("vehicle", e.to_string()))?;
        self.env.validate().map_err(|e| input("env", e.to_string()))?;
        self.ppo.validate().map_err(|e| input("ppo", e.to_string()))?;
        Ok(())
    }

    /// Fully resolved configuration as TOML; loading it reproduces this value.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        config_hash(self.to_toml().as_bytes())
    }
}

/// Sets a dotted key (`ppo.iterations=10`). The value is read as a TOML value
/// and falls back to a plain string.
pub fn apply_override(root: &mut toml::Table, spec: &str) -> Result<(), HarnessError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| HarnessError::Input(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {}", raw.trim()))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(HarnessError::Input(format!("override key `{key}` is malformed")));
    }
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        let entry = table.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| HarnessError::Input(format!("override `{key}`: `{p}` is not a section")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

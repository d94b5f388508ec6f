//! JSON configuration files in boundary units.
//!
//! A file names a scenario and fidelity preset and overrides any of the
//! [`ScenarioParams`] fields:
//!
//! ```json
//! { "scenario": "example2", "fidelity": "low", "kappa_aux": 0.0343, "pump_detuning_mhz": [-250, -170] }
//! ```

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::scenarios::{build_config, default_params, Fidelity, Scenario, ScenarioParams};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigFile {
    pub scenario: Scenario,
    pub fidelity: Fidelity,
    pub params: ScenarioParams,
}

impl ConfigFile {
    pub fn defaults(scenario: Scenario, fidelity: Fidelity) -> Self {
        ConfigFile { scenario, fidelity, params: default_params(scenario, fidelity) }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text)?;
        Self::from_value(&v, None, None)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// `scenario`/`fidelity` arguments take precedence over the keys in the file.
    pub fn from_value(v: &Value, scenario: Option<Scenario>, fidelity: Option<Fidelity>) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| invalid("config", "expected a JSON object"))?;
        let mut rest = obj.clone();
        let scenario = match (scenario, rest.remove("scenario")) {
            (Some(s), _) => s,
            (None, Some(s)) => serde_json::from_value(s)?,
            (None, None) => Scenario::Example1,
        };
        let fidelity = match (fidelity, rest.remove("fidelity")) {
            (Some(f), _) => f,
            (None, Some(f)) => serde_json::from_value(f)?,
            (None, None) => Fidelity::Low,
        };
        let params = apply_overrides(&default_params(scenario, fidelity), &rest)?;
        Ok(ConfigFile { scenario, fidelity, params })
    }

    pub fn system(&self) -> Result<SystemConfig> {
        build_config(&self.params)
    }

    pub fn to_value(&self) -> Value {
        let mut m = match serde_json::to_value(&self.params) {
            Ok(Value::Object(m)) => m,
            _ => Map::new(),
        };
        m.insert("scenario".into(), serde_json::to_value(self.scenario).unwrap_or(Value::Null));
        m.insert("fidelity".into(), serde_json::to_value(self.fidelity).unwrap_or(Value::Null));
        Value::Object(m)
    }

    /// SHA-256 of the canonical JSON of the resolved configuration.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(&self.to_value()).unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn invalid(field: &str, reason: &str) -> Error {
    Error::InvalidConfig { field: field.into(), reason: reason.into() }
}

/// Overlays `overrides` on `base`; unknown keys are rejected.
pub fn apply_overrides(base: &ScenarioParams, overrides: &Map<String, Value>) -> Result<ScenarioParams> {
    let mut v = serde_json::to_value(base)?;
    let m = v.as_object_mut().expect("params serialize to an object");
    for (k, val) in overrides {
        if !m.contains_key(k) {
            return Err(invalid(k, "unknown parameter"));
        }
        m.insert(k.clone(), val.clone());
    }
    serde_json::from_value(v).map_err(|e| invalid("config", &e.to_string()))
}

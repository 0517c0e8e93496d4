//! Versioned JSON persistence of a [`RunState`].

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::SpotError;
use crate::rng::RNG_ALGORITHM;
use crate::spot::RunState;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub schema_version: u64,
    pub rng_algorithm: String,
    /// Free-form data owned by the caller, e.g. the objective definition.
    #[serde(default)]
    pub context: Value,
    pub state: RunState,
}

impl StateFile {
    pub fn new(state: RunState, context: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            rng_algorithm: RNG_ALGORITHM.to_string(),
            context,
            state,
        }
    }

    pub fn to_json(&self) -> Result<String, SpotError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, SpotError> {
        let raw: Value = serde_json::from_str(text)?;
        let found = raw
            .get("schema_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| SpotError::State("state file has no schema_version".into()))?;
        if found != SCHEMA_VERSION {
            return Err(SpotError::SchemaVersion {
                found,
                expected: SCHEMA_VERSION,
            });
        }
        let file: StateFile = serde_json::from_value(raw).map_err(|e| SpotError::State(format!("malformed state: {e}")))?;
        if file.rng_algorithm != RNG_ALGORITHM {
            return Err(SpotError::State(format!(
                "state was written with random generator {:?}, this build uses {RNG_ALGORITHM:?}",
                file.rng_algorithm
            )));
        }
        file.state.config.validate(file.state.space.dim())?;
        Ok(file)
    }
}

/// Write atomically: a temporary sibling file is renamed over `path`.
pub fn save(path: &Path, state: &RunState, context: Value) -> Result<(), SpotError> {
    let text = StateFile::new(state.clone(), context).to_json()?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<StateFile, SpotError> {
    StateFile::from_json(&fs::read_to_string(path)?)
}

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::params::{NamedParam, ParamStore};

pub const CHECKPOINT_VERSION: u32 = 1;

/// Versioned container of an architecture descriptor and named parameters.
/// JSON floats are written in shortest round-trip form, so save/load is exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<A> {
    pub format_version: u32,
    pub architecture: A,
    pub parameters: Vec<NamedParam>,
}

impl<A: Serialize + DeserializeOwned> Checkpoint<A> {
    pub fn new(architecture: A, store: &ParamStore) -> Self {
        Self {
            format_version: CHECKPOINT_VERSION,
            architecture,
            parameters: store.params().to_vec(),
        }
    }

    pub fn store(&self) -> Result<ParamStore> {
        ParamStore::from_params(self.parameters.clone())
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| NnError::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Self = serde_json::from_str(text).map_err(|e| NnError::Checkpoint(e.to_string()))?;
        if ck.format_version != CHECKPOINT_VERSION {
            return Err(NnError::Checkpoint(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ck.format_version
            )));
        }
        for p in &ck.parameters {
            let [r, c] = p.value.shape();
            if p.value.data().len() != r * c {
                return Err(NnError::Checkpoint(format!("parameter `{}` has inconsistent shape", p.name)));
            }
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

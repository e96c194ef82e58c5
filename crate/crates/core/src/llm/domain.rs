use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeInfo {
    pub name: String,
    pub size: usize,
    #[serde(default)]
    pub description: String,
}

/// Per-mode knowledge about the data, shown to the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainInfo {
    #[serde(default)]
    pub description: Option<String>,
    pub modes: Vec<ModeInfo>,
    /// When false, prompts carry mode sizes only.
    #[serde(default = "default_true")]
    pub domain_aware: bool,
}

fn default_true() -> bool {
    true
}

impl DomainInfo {
    /// Anonymous modes carrying sizes only.
    pub fn sizes_only(shape: &[usize]) -> Self {
        Self {
            description: None,
            modes: shape
                .iter()
                .enumerate()
                .map(|(i, &size)| ModeInfo {
                    name: format!("mode {}", i + 1),
                    size,
                    description: String::new(),
                })
                .collect(),
            domain_aware: false,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn order(&self) -> usize {
        self.modes.len()
    }

    pub fn check_shape(&self, shape: &[usize]) -> Result<()> {
        let sizes: Vec<usize> = self.modes.iter().map(|m| m.size).collect();
        if sizes != shape {
            return Err(Error::ShapeMismatch {
                expected: shape.to_vec(),
                found: sizes,
            });
        }
        if self.domain_aware {
            if let Some(m) = self.modes.iter().find(|m| m.description.trim().is_empty()) {
                return Err(Error::Config(format!(
                    "mode `{}` has no description but domain-aware prompting is on",
                    m.name
                )));
            }
        }
        Ok(())
    }

    /// One line per mode, plus the dataset description when domain-aware.
    pub fn mode_table(&self) -> String {
        let mut out = String::new();
        if self.domain_aware {
            if let Some(d) = self.description.as_deref().filter(|d| !d.trim().is_empty()) {
                let _ = writeln!(out, "Dataset: {}", d.trim());
            }
        }
        for (i, m) in self.modes.iter().enumerate() {
            if self.domain_aware {
                let _ = writeln!(out, "Mode {}: {} (size {}): {}", i + 1, m.name, m.size, m.description.trim());
            } else {
                let _ = writeln!(out, "Mode {}: size {}", i + 1, m.size);
            }
        }
        out.truncate(out.trim_end().len());
        out
    }
}

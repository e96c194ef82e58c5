use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::llm::{LlmClientConfig, DEFAULT_LLM_BUDGET};
use crate::objective::FitConfig;
use crate::search::{EnumConfig, NeighborhoodConfig, StoppingConfig, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Random neighborhood sampling.
    Tnls,
    /// Alternating per-variable enumeration.
    Tnale,
    Tnllm,
    /// LLM warm start, then alternating enumeration.
    Hybrid,
    Exhaustive,
}

impl Algorithm {
    pub fn uses_llm(self) -> bool {
        matches!(self, Algorithm::Tnllm | Algorithm::Hybrid)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Tnls => "tnls",
            Algorithm::Tnale => "tnale",
            Algorithm::Tnllm => "tnllm",
            Algorithm::Hybrid => "hybrid",
            Algorithm::Exhaustive => "exhaustive",
        })
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(Value::String(s.to_owned()))
            .map_err(|_| Error::Config(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmSettings {
    #[serde(flatten)]
    pub client: LlmClientConfig,
    /// JSON array of canned replies; when set, no network request is made.
    pub scripted_replies: Option<PathBuf>,
    /// Evaluations given to the LLM phase of a hybrid run.
    pub budget: usize,
    pub templates_dir: Option<PathBuf>,
}

impl Default for LlmSettings {
    fn default() -> Self {
        Self {
            client: LlmClientConfig::default(),
            scripted_replies: None,
            budget: DEFAULT_LLM_BUDGET,
            templates_dir: None,
        }
    }
}

fn default_lambda() -> f64 {
    10.0
}

fn default_train_fraction() -> f64 {
    0.8
}

fn default_n_sample() -> usize {
    4
}

fn default_perturb_prob() -> f64 {
    0.5
}

fn default_one() -> usize {
    1
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("runs/latest")
}

/// Everything `tnss run` needs. Read from JSON; any field can be overridden
/// with a dotted key such as `fit.max_iters`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub algorithm: Algorithm,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub stopping: StoppingConfig,
    /// Defaults to `default_rank_bound` of the data shape.
    #[serde(default)]
    pub r_max: Option<usize>,
    #[serde(default = "default_n_sample")]
    pub n_sample: usize,
    #[serde(default = "default_perturb_prob")]
    pub perturb_prob: f64,
    #[serde(default = "default_one")]
    pub radius: usize,
    #[serde(default = "default_one")]
    pub rounds: usize,
    /// Initial rank vector for local search; all ones when absent.
    #[serde(default)]
    pub init: Option<Vec<usize>>,
    #[serde(default)]
    pub fit: FitConfig,
    /// Seeds both the neighborhood sampler and core initialization.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default)]
    pub llm: Option<LlmSettings>,
    #[serde(default)]
    pub domain: Option<PathBuf>,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text)?)
    }

    fn from_value(value: Value) -> Result<Self> {
        let config: RunConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads `path` and applies `overrides` (`key`, `value`) in order. Values
    /// are parsed as JSON when possible and taken as strings otherwise.
    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut value: Value = serde_json::from_str(&text)?;
        for (key, raw) in overrides {
            apply_override(&mut value, key, raw)?;
        }
        Self::from_value(value)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be > 0, got {}", self.lambda)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.r_max == Some(0) {
            return Err(Error::Config("r_max must be >= 1".into()));
        }
        self.stopping.validate()?;
        self.fit.validate()?;
        if self.algorithm.uses_llm() {
            let llm = self
                .llm
                .as_ref()
                .ok_or_else(|| Error::Config(format!("algorithm `{}` needs an `llm` section", self.algorithm)))?;
            if llm.budget < 1 {
                return Err(Error::Config("llm.budget must be >= 1".into()));
            }
            if llm.scripted_replies.is_none() {
                llm.client.validate()?;
            }
        }
        Ok(())
    }

    pub fn r_max_for(&self, shape: &[usize]) -> usize {
        self.r_max.unwrap_or_else(|| crate::search::default_rank_bound(shape))
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            seed: self.seed,
            ..self.fit.clone()
        }
    }

    /// The local-search strategy for `tnls`, `tnale`, and the second phase of `hybrid`.
    pub fn strategy(&self, r_max: usize) -> Strategy {
        match self.algorithm {
            Algorithm::Tnls => Strategy::Neighborhood(NeighborhoodConfig {
                perturb_prob: self.perturb_prob,
                ..NeighborhoodConfig::new(self.n_sample, r_max, self.seed)
            }),
            _ => Strategy::Alternating(EnumConfig {
                radius: self.radius,
                rounds: self.rounds,
                r_max,
            }),
        }
    }
}

fn apply_override(root: &mut Value, key: &str, raw: &str) -> Result<()> {
    let parsed = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
    let mut node = root;
    let mut parts = key.split('.').peekable();
    while let Some(part) = parts.next() {
        if part.is_empty() {
            return Err(Error::Config(format!("bad override key `{key}`")));
        }
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{part}` is not inside an object")))?;
        if parts.peek().is_none() {
            obj.insert(part.to_owned(), parsed);
            return Ok(());
        }
        node = obj
            .entry(part.to_owned())
            .or_insert_with(|| Value::Object(Default::default()));
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"dataset": "data/x", "algorithm": "tnale"}"#;

    #[test]
    fn defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.lambda, 10.0);
        assert_eq!(c.stopping, StoppingConfig::default());
        assert_eq!(c.train_fraction, 0.8);
        assert_eq!(c.r_max_for(&[6, 6, 6]), 5);
        assert!(matches!(c.strategy(5), Strategy::Alternating(_)));
    }

    #[test]
    fn unknown_algorithm_is_a_config_error() {
        let err = RunConfig::from_json(r#"{"dataset": "x", "algorithm": "tabu"}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!("tabu".parse::<Algorithm>().is_err());
        assert_eq!("hybrid".parse::<Algorithm>().unwrap(), Algorithm::Hybrid);
    }

    #[test]
    fn llm_modes_need_llm_settings() {
        assert!(RunConfig::from_json(r#"{"dataset": "x", "algorithm": "tnllm"}"#).is_err());
        let c = RunConfig::from_json(r#"{"dataset": "x", "algorithm": "tnllm", "llm": {"scripted_replies": "r.json"}}"#).unwrap();
        assert_eq!(c.llm.unwrap().budget, 10);
    }

    #[test]
    fn overrides() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        fs::write(&path, MINIMAL).unwrap();
        let overrides = [
            ("lambda".to_owned(), "3.5".to_owned()),
            ("stopping.max_evals".to_owned(), "40".to_owned()),
            ("fit.max_iters".to_owned(), "77".to_owned()),
            ("algorithm".to_owned(), "tnls".to_owned()),
            ("llm.model".to_owned(), "local-model".to_owned()),
        ];
        let c = RunConfig::load(&path, &overrides).unwrap();
        assert_eq!(c.lambda, 3.5);
        assert_eq!(c.stopping.max_evals, 40);
        assert_eq!(c.stopping.patience, 5);
        assert_eq!(c.fit.max_iters, 77);
        assert_eq!(c.algorithm, Algorithm::Tnls);
        assert_eq!(c.llm.unwrap().client.model, "local-model");

        let bad = [("no_such_field".to_owned(), "1".to_owned())];
        assert!(RunConfig::load(&path, &bad).is_err());
    }
}

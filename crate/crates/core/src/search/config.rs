use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Random rank perturbation around the center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodConfig {
    pub n_sample: usize,
    /// Probability that each rank is perturbed by +-1.
    pub perturb_prob: f64,
    pub r_max: usize,
    pub seed: u64,
}

impl NeighborhoodConfig {
    pub fn new(n_sample: usize, r_max: usize, seed: u64) -> Self {
        Self {
            n_sample,
            perturb_prob: 0.5,
            r_max,
            seed,
        }
    }

    /// Like `validate`, but also admits `perturb_prob == 0`.
    pub(crate) fn validate_allow_degenerate(&self) -> Result<()> {
        if self.n_sample < 1 {
            return Err(Error::Config("n_sample must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.perturb_prob) {
            return Err(Error::Config(format!(
                "perturbation probability must lie in [0, 1], got {}",
                self.perturb_prob
            )));
        }
        if self.r_max < 1 {
            return Err(Error::Config("r_max must be >= 1".into()));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_allow_degenerate()?;
        if self.perturb_prob == 0.0 {
            return Err(Error::Config("perturbation probability must be > 0".into()));
        }
        Ok(())
    }
}

/// Alternating per-variable enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnumConfig {
    /// Enumeration radius around the current rank value.
    pub radius: usize,
    /// Full sweeps over all variables per outer iteration.
    pub rounds: usize,
    pub r_max: usize,
}

impl EnumConfig {
    pub fn new(r_max: usize) -> Self {
        Self {
            radius: 1,
            rounds: 1,
            r_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 || self.rounds < 1 {
            return Err(Error::Config("enumeration radius and rounds must be >= 1".into()));
        }
        if self.r_max < 1 {
            return Err(Error::Config("r_max must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StoppingConfig {
    pub max_evals: usize,
    pub patience: usize,
    pub delta: f64,
}

impl Default for StoppingConfig {
    fn default() -> Self {
        Self {
            max_evals: 500,
            patience: 5,
            delta: 0.0,
        }
    }
}

impl StoppingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_evals < 1 {
            return Err(Error::Config("max_evals must be >= 1".into()));
        }
        if self.patience < 1 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::Config("delta must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Strategy {
    Neighborhood(NeighborhoodConfig),
    Alternating(EnumConfig),
}

impl Strategy {
    pub fn r_max(&self) -> usize {
        match self {
            Strategy::Neighborhood(c) => c.r_max,
            Strategy::Alternating(c) => c.r_max,
        }
    }
}

/// `round(2 * sqrt(max_i I_i))`, capped at 32.
pub fn default_rank_bound(shape: &[usize]) -> usize {
    let largest = shape.iter().copied().max().unwrap_or(1) as f64;
    ((2.0 * largest.sqrt()).round() as usize).clamp(1, 32)
}

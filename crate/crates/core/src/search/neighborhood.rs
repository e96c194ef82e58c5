use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{EnumConfig, NeighborhoodConfig};
use crate::error::{Error, Result};
use crate::structure::TNStructure;

const REDRAW_ATTEMPTS: usize = 10;

/// Stateful sampler whose RNG advances across calls.
#[derive(Debug, Clone)]
pub struct NeighborhoodSampler {
    config: NeighborhoodConfig,
    rng: ChaCha8Rng,
}

impl NeighborhoodSampler {
    pub fn new(config: NeighborhoodConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(config.seed);
        Self { config, rng }
    }

    pub fn config(&self) -> &NeighborhoodConfig {
        &self.config
    }

    /// Draws `n_sample` perturbations of `center`. Each rank moves by +-1 with
    /// probability `perturb_prob`, clipped to `[1, r_max]`; a draw equal to the
    /// center is redrawn up to ten times and then kept.
    pub fn sample(&mut self, center: &TNStructure) -> Vec<TNStructure> {
        (0..self.config.n_sample)
            .map(|_| {
                let mut candidate = self.perturb(center);
                for _ in 0..REDRAW_ATTEMPTS {
                    if &candidate != center {
                        break;
                    }
                    candidate = self.perturb(center);
                }
                candidate
            })
            .collect()
    }

    fn perturb(&mut self, center: &TNStructure) -> TNStructure {
        let r_max = self.config.r_max;
        let ranks = center
            .ranks()
            .iter()
            .map(|&r| {
                if self.rng.random::<f64>() < self.config.perturb_prob {
                    let up = self.rng.random::<bool>();
                    let moved = if up { r + 1 } else { r.saturating_sub(1) };
                    moved.clamp(1, r_max)
                } else {
                    r
                }
            })
            .collect();
        TNStructure::new(center.order(), ranks).expect("perturbed ranks stay >= 1")
    }
}

/// One-shot neighborhood draw from a sampler seeded with `config.seed`.
pub fn sample_neighborhood(center: &TNStructure, config: &NeighborhoodConfig) -> Result<Vec<TNStructure>> {
    config.validate_allow_degenerate()?;
    Ok(NeighborhoodSampler::new(config.clone()).sample(center))
}

/// Copies of `center` with rank `var` set to every value within `radius` of its
/// current value, inside `[1, r_max]`, excluding the current value.
pub fn enumerate_variable(center: &TNStructure, var: usize, config: &EnumConfig) -> Result<Vec<TNStructure>> {
    if var >= center.num_vars() {
        return Err(Error::InvalidArgument(format!(
            "variable {var} out of range for {} ranks",
            center.num_vars()
        )));
    }
    let current = center.ranks()[var];
    let lo = current.saturating_sub(config.radius).max(1);
    let hi = (current + config.radius).min(config.r_max);
    Ok((lo..=hi)
        .filter(|&v| v != current)
        .map(|v| center.with_rank(var, v))
        .collect())
}

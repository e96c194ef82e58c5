use ndarray::{ArrayD, Zip};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::contract::{contract_unchecked, environment, CoreSet};
use crate::error::{Error, Result};
use crate::structure::TNStructure;
use crate::tensor::DenseTensor;

/// Settings for the per-sample core fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub max_iters: usize,
    /// Stop once `(f_prev - f) / f_prev` falls below this.
    pub tolerance: f64,
    pub restarts: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub armijo: f64,
    pub step_rule: StepRule,
    pub seed: u64,
}

/// How the first trial step of each backtracking search is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepRule {
    /// Twice the previously accepted step.
    Doubling,
    /// Barzilai-Borwein `s.y / y.y` from the last two iterates.
    BarzilaiBorwein,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tolerance: 1e-6,
            restarts: 1,
            initial_step: 1.0,
            shrink: 0.5,
            armijo: 1e-4,
            step_rule: StepRule::BarzilaiBorwein,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Config("fit max_iters must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("fit tolerance must be > 0".into()));
        }
        if self.restarts < 1 {
            return Err(Error::Config("fit restarts must be >= 1".into()));
        }
        if !(self.initial_step > 0.0) {
            return Err(Error::Config("fit initial_step must be > 0".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Config("fit shrink must lie in (0, 1)".into()));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::Config("fit armijo constant must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// splitmix64 finalizer, used to derive independent stream seeds.
pub(crate) fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Gaussian cores with `sigma_i = (prod_{j != i} r_ij)^{-1/2}`.
pub fn init_cores(structure: &TNStructure, shape: &[usize], seed: u64) -> Result<CoreSet> {
    if shape.len() != structure.order() {
        return Err(Error::OrderMismatch {
            expected: structure.order(),
            found: shape.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cores = (0..structure.order())
        .map(|i| {
            let core_shape = structure.core_shape(i, shape[i]);
            let fan: usize = core_shape[1..].iter().product();
            let sigma = (1.0 / fan as f64).sqrt();
            let normal = Normal::new(0.0, sigma).expect("positive sigma");
            let len: usize = core_shape.iter().product();
            let data = (0..len).map(|_| normal.sample(&mut rng)).collect();
            DenseTensor::new(core_shape, data)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CoreSet::new(cores))
}

fn check_sample(sample: &DenseTensor, cores: &CoreSet, structure: &TNStructure) -> Result<()> {
    cores.check_consistent(structure)?;
    let physical = cores.physical_shape();
    if sample.shape() != physical.as_slice() {
        return Err(Error::ShapeMismatch {
            expected: sample.shape().to_vec(),
            found: physical,
        });
    }
    Ok(())
}

fn squared_residual(sample: &ArrayD<f64>, approx: &ArrayD<f64>) -> f64 {
    Zip::from(sample)
        .and(approx)
        .fold(0.0, |acc, &x, &y| acc + (y - x) * (y - x))
}

/// `1/2 ||sample - TNC(cores)||_F^2` and its gradient with respect to every core.
pub fn loss_and_gradient(
    sample: &DenseTensor,
    cores: &CoreSet,
    structure: &TNStructure,
) -> Result<(f64, Vec<DenseTensor>)> {
    check_sample(sample, cores, structure)?;
    let (loss, grads) = loss_and_gradient_unchecked(sample.array(), cores, structure);
    Ok((
        loss,
        grads.into_iter().map(DenseTensor::from_array_unchecked).collect(),
    ))
}

fn loss_and_gradient_unchecked(
    sample: &ArrayD<f64>,
    cores: &CoreSet,
    structure: &TNStructure,
) -> (f64, Vec<ArrayD<f64>>) {
    let approx = contract_unchecked(cores, structure);
    let residual = &approx - sample;
    let loss = 0.5 * residual.iter().map(|r| r * r).sum::<f64>();
    let grads = (0..structure.order())
        .map(|i| environment(&residual, cores, structure, i))
        .collect();
    (loss, grads)
}

/// The trajectory of one descent run.
#[derive(Debug, Clone)]
pub struct FitRun {
    pub cores: CoreSet,
    /// Loss after initialization and after every accepted step.
    pub losses: Vec<f64>,
    pub relative_error: f64,
}

/// Runs a single restart of backtracked gradient descent.
pub fn fit_run(
    sample: &DenseTensor,
    structure: &TNStructure,
    config: &FitConfig,
    seed: u64,
) -> Result<FitRun> {
    config.validate()?;
    let norm = sample.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let failure = |detail: String| Error::NumericalFailure {
        ranks: structure.ranks().to_vec(),
        detail,
    };

    let mut cores = init_cores(structure, sample.shape(), seed)?;
    check_sample(sample, &cores, structure)?;
    let x = sample.array();
    let n = structure.order() as i32;

    // Match the initial reconstruction's norm to the sample's.
    let init_norm = contract_unchecked(&cores, structure)
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    if init_norm > 0.0 && init_norm.is_finite() {
        let per_core = (norm / init_norm).powf(1.0 / f64::from(n));
        for core in cores.cores_mut() {
            *core = core.scale(per_core);
        }
    }

    let (mut loss, mut grads) = loss_and_gradient_unchecked(x, &cores, structure);
    if !loss.is_finite() {
        return Err(failure(format!("initial loss is {loss}")));
    }
    let mut losses = vec![loss];
    let mut step = config.initial_step;

    for _ in 0..config.max_iters {
        let grad_sq: f64 = grads.iter().map(|g| g.iter().map(|v| v * v).sum::<f64>()).sum();
        if !grad_sq.is_finite() {
            return Err(failure("non-finite gradient".into()));
        }
        if grad_sq == 0.0 || loss == 0.0 {
            break;
        }

        let mut accepted = None;
        let mut trial_step = step;
        while trial_step > f64::MIN_POSITIVE {
            let trial = CoreSet::new(
                cores
                    .cores()
                    .iter()
                    .zip(&grads)
                    .map(|(c, g)| {
                        let mut next = c.array().clone();
                        next.scaled_add(-trial_step, g);
                        DenseTensor::from_array_unchecked(next)
                    })
                    .collect(),
            );
            let trial_loss = 0.5 * squared_residual(x, &contract_unchecked(&trial, structure));
            if trial_loss.is_finite() && trial_loss <= loss - config.armijo * trial_step * grad_sq {
                accepted = Some((trial, trial_loss, trial_step));
                break;
            }
            trial_step *= config.shrink;
        }
        let Some((next, next_loss, used_step)) = accepted else {
            break;
        };

        let change = (loss - next_loss) / loss;
        let prev_grads = std::mem::take(&mut grads);
        let prev_cores = std::mem::replace(&mut cores, next);
        (loss, grads) = loss_and_gradient_unchecked(x, &cores, structure);
        losses.push(loss);
        step = match config.step_rule {
            StepRule::Doubling => used_step / config.shrink,
            StepRule::BarzilaiBorwein => {
                // s = x_k - x_{k-1}, y = g_k - g_{k-1}; trial step s.y / y.y.
                let (mut sy, mut yy) = (0.0, 0.0);
                for (((c, p), g), pg) in cores.cores().iter().zip(prev_cores.cores()).zip(&grads).zip(&prev_grads) {
                    Zip::from(c.array()).and(p.array()).and(g).and(pg).for_each(|&c, &p, &g, &pg| {
                        let (sv, yv) = (c - p, g - pg);
                        sy += sv * yv;
                        yy += yv * yv;
                    });
                }
                if sy > 0.0 && yy > 0.0 && (sy / yy).is_finite() {
                    sy / yy
                } else {
                    used_step / config.shrink
                }
            }
        };
        if change < config.tolerance {
            break;
        }
    }

    let relative_error = (2.0 * loss).sqrt() / norm;
    if !relative_error.is_finite() {
        return Err(failure(format!("final relative error is {relative_error}")));
    }
    Ok(FitRun {
        cores,
        losses,
        relative_error,
    })
}

/// Best of `config.restarts` independent descent runs, with its relative error.
pub fn fit_cores(
    sample: &DenseTensor,
    structure: &TNStructure,
    config: &FitConfig,
) -> Result<(CoreSet, f64)> {
    fit_sample(sample, structure, config, 0)
}

pub(crate) fn fit_sample(
    sample: &DenseTensor,
    structure: &TNStructure,
    config: &FitConfig,
    sample_index: u64,
) -> Result<(CoreSet, f64)> {
    let mut best: Option<FitRun> = None;
    for restart in 0..config.restarts as u64 {
        let run = fit_run(
            sample,
            structure,
            config,
            mix_seed(config.seed, sample_index, restart),
        )?;
        if best
            .as_ref()
            .is_none_or(|b| run.relative_error < b.relative_error)
        {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    Ok((best.cores, best.relative_error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::tnc_contract;
    use crate::tensor::relative_error;
    use ndarray::Array2;

    fn random_sample(shape: &[usize], seed: u64) -> DenseTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let len = shape.iter().product();
        DenseTensor::new(shape.to_vec(), (0..len).map(|_| normal.sample(&mut rng)).collect()).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_seed_dependent() {
        let s = TNStructure::new(3, vec![2, 3, 1]).unwrap();
        let a = init_cores(&s, &[4, 5, 6], 0).unwrap();
        assert_eq!(a, init_cores(&s, &[4, 5, 6], 0).unwrap());
        assert_ne!(a, init_cores(&s, &[4, 5, 6], 1).unwrap());
        a.check_consistent(&s).unwrap();
    }

    #[test]
    fn init_all_ones_gives_vectors() {
        let s = TNStructure::all_ones(3).unwrap();
        let cores = init_cores(&s, &[4, 5, 6], 3).unwrap();
        for (core, len) in cores.cores().iter().zip([4, 5, 6]) {
            assert_eq!(core.len(), len);
        }
    }

    #[test]
    fn gradient_vanishes_at_exact_fit() {
        let s = TNStructure::new(3, vec![2, 1, 2]).unwrap();
        let cores = init_cores(&s, &[3, 2, 3], 4).unwrap();
        let sample = tnc_contract(&cores, &s).unwrap();
        let (loss, grads) = loss_and_gradient(&sample, &cores, &s).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.iter().all(|g| g.values().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn rank_one_matrix_gradient_closed_form() {
        let s = TNStructure::new(2, vec![1]).unwrap();
        let cores = init_cores(&s, &[3, 4], 2).unwrap();
        let x = random_sample(&[3, 4], 8);
        let (_, grads) = loss_and_gradient(&x, &cores, &s).unwrap();
        let v1 = Array2::from_shape_vec((3, 1), cores.cores()[0].values().to_vec()).unwrap();
        let v2 = Array2::from_shape_vec((4, 1), cores.cores()[1].values().to_vec()).unwrap();
        let xm = Array2::from_shape_vec((3, 4), x.values().to_vec()).unwrap();
        let expected = (v1.dot(&v2.t()) - &xm).dot(&v2);
        for (g, e) in grads[0].values().iter().zip(expected.iter()) {
            assert!((g - e).abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_shape_mismatch_is_rejected() {
        let s = TNStructure::new(2, vec![1]).unwrap();
        let cores = init_cores(&s, &[3, 4], 2).unwrap();
        assert!(loss_and_gradient(&random_sample(&[3, 3], 0), &cores, &s).is_err());
    }

    #[test]
    fn planted_sample_is_recovered() {
        let s = TNStructure::new(3, vec![2, 2, 1]).unwrap();
        let planted = init_cores(&s, &[4, 4, 4], 100).unwrap();
        let sample = tnc_contract(&planted, &s).unwrap();
        let config = FitConfig {
            max_iters: 3000,
            ..FitConfig::default()
        };
        let (cores, err) = fit_cores(&sample, &s, &config).unwrap();
        assert!(err < 1e-3, "relative error {err}");
        let recon = tnc_contract(&cores, &s).unwrap();
        assert!((relative_error(&sample, &recon).unwrap() - err).abs() < 1e-9);
    }

    #[test]
    fn rank_one_cannot_fit_generic_tensor() {
        let s = TNStructure::all_ones(3).unwrap();
        let (_, err) = fit_cores(&random_sample(&[3, 3, 3], 1), &s, &FitConfig::default()).unwrap();
        assert!(err > 0.0);
    }

    #[test]
    fn more_iterations_never_hurt() {
        let s = TNStructure::new(3, vec![2, 1, 2]).unwrap();
        let sample = random_sample(&[3, 4, 3], 6);
        let short = FitConfig {
            max_iters: 40,
            ..FitConfig::default()
        };
        let long = FitConfig {
            max_iters: 80,
            ..short.clone()
        };
        let (_, e1) = fit_cores(&sample, &s, &short).unwrap();
        let (_, e2) = fit_cores(&sample, &s, &long).unwrap();
        assert!(e2 <= e1);
    }

    #[test]
    fn loss_sequence_is_monotone() {
        let s = TNStructure::new(4, vec![2, 1, 2, 1, 2, 1]).unwrap();
        let sample = random_sample(&[2, 3, 2, 3], 4);
        let run = fit_run(&sample, &s, &FitConfig::default(), 17).unwrap();
        assert!(run.losses.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_sample_is_rejected() {
        let s = TNStructure::all_ones(2).unwrap();
        let zero = DenseTensor::zeros(&[2, 2]).unwrap();
        assert!(matches!(fit_cores(&zero, &s, &FitConfig::default()), Err(Error::ZeroNorm)));
    }

    #[test]
    fn config_validation() {
        assert!(FitConfig { max_iters: 0, ..FitConfig::default() }.validate().is_err());
        assert!(FitConfig { tolerance: 0.0, ..FitConfig::default() }.validate().is_err());
        assert!(FitConfig { restarts: 0, ..FitConfig::default() }.validate().is_err());
    }
}

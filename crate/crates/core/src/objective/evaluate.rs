use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, RwLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_sample, FitConfig};
use crate::error::{Error, Result};
use crate::structure::{compression_ratio, param_count, TNStructure};
use crate::tensor::TensorDataset;

/// Which search step first produced a structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Init,
    Neighborhood,
    Enumeration,
    Llm,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Init => "init",
            Source::Neighborhood => "neighborhood",
            Source::Enumeration => "enumeration",
            Source::Llm => "llm",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationResult {
    pub structure: TNStructure,
    pub phi: f64,
    pub mean_relative_error: f64,
    pub objective: f64,
    pub param_count: usize,
    /// 1-based position among distinct evaluations.
    pub eval_index: usize,
    pub source: Source,
}

impl EvaluationResult {
    /// Ordering used for every tie-break: objective, then parameter count,
    /// then lexicographic rank vector.
    pub fn better_than(&self, other: &EvaluationResult) -> bool {
        self.objective
            .total_cmp(&other.objective)
            .then(self.param_count.cmp(&other.param_count))
            .then_with(|| self.structure.ranks().cmp(other.structure.ranks()))
            .is_lt()
    }
}

/// `ln(phi + lambda * mean_error)`.
pub fn objective_value(phi: f64, lambda: f64, mean_relative_error: f64) -> f64 {
    (phi + lambda * mean_relative_error).ln()
}

/// Evaluation results keyed by rank vector, plus the insertion log.
#[derive(Debug, Default)]
pub struct EvalCache {
    entries: RwLock<HashMap<Vec<usize>, EvaluationResult>>,
    log: Mutex<Vec<EvaluationResult>>,
}

impl EvalCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, structure: &TNStructure) -> Option<EvaluationResult> {
        self.entries
            .read()
            .expect("cache lock poisoned")
            .get(structure.ranks())
            .cloned()
    }

    /// Number of distinct structures evaluated.
    pub fn evaluations(&self) -> usize {
        self.log.lock().expect("cache lock poisoned").len()
    }

    /// Every distinct evaluation, in evaluation order.
    pub fn history(&self) -> Vec<EvaluationResult> {
        self.log.lock().expect("cache lock poisoned").clone()
    }

    /// Inserts unless another caller got there first; returns the stored value
    /// and whether this call inserted it.
    fn insert_with(
        &self,
        structure: &TNStructure,
        make: impl FnOnce(usize) -> EvaluationResult,
    ) -> (EvaluationResult, bool) {
        let mut entries = self.entries.write().expect("cache lock poisoned");
        if let Some(existing) = entries.get(structure.ranks()) {
            return (existing.clone(), false);
        }
        let mut log = self.log.lock().expect("cache lock poisoned");
        let result = make(log.len() + 1);
        log.push(result.clone());
        entries.insert(structure.ranks().to_vec(), result.clone());
        (result, true)
    }
}

/// Outcome of a cache-aware evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Lookup {
    Fresh(EvaluationResult),
    Cached(EvaluationResult),
}

impl Lookup {
    pub fn result(&self) -> &EvaluationResult {
        match self {
            Lookup::Fresh(r) | Lookup::Cached(r) => r,
        }
    }

    pub fn into_result(self) -> EvaluationResult {
        match self {
            Lookup::Fresh(r) | Lookup::Cached(r) => r,
        }
    }

    pub fn is_fresh(&self) -> bool {
        matches!(self, Lookup::Fresh(_))
    }
}

type Observer<'a> = Box<dyn Fn(&EvaluationResult) + Send + Sync + 'a>;

/// Scores structures on one dataset with fixed `lambda` and fit settings.
///
/// One evaluation fits every sample independently and is counted once per
/// distinct rank vector; repeated structures are served from the cache.
pub struct Evaluator<'a> {
    dataset: &'a TensorDataset,
    lambda: f64,
    fit: FitConfig,
    cache: EvalCache,
    observer: Option<Observer<'a>>,
}

impl fmt::Debug for Evaluator<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Evaluator")
            .field("lambda", &self.lambda)
            .field("fit", &self.fit)
            .field("evaluations", &self.cache.evaluations())
            .finish_non_exhaustive()
    }
}

impl<'a> Evaluator<'a> {
    pub fn new(dataset: &'a TensorDataset, lambda: f64, fit: FitConfig) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be positive, got {lambda}")));
        }
        if dataset.is_empty() {
            return Err(Error::InvalidArgument("dataset is empty".into()));
        }
        fit.validate()?;
        Ok(Self {
            dataset,
            lambda,
            fit,
            cache: EvalCache::new(),
            observer: None,
        })
    }

    /// Registers a callback invoked once per fresh evaluation, in order.
    pub fn with_observer(mut self, observer: impl Fn(&EvaluationResult) + Send + Sync + 'a) -> Self {
        self.observer = Some(Box::new(observer));
        self
    }

    pub fn dataset(&self) -> &TensorDataset {
        self.dataset
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn fit_config(&self) -> &FitConfig {
        &self.fit
    }

    pub fn cache(&self) -> &EvalCache {
        &self.cache
    }

    pub fn evaluations(&self) -> usize {
        self.cache.evaluations()
    }

    pub fn evaluate(&self, structure: &TNStructure, source: Source) -> Result<Lookup> {
        if let Some(hit) = self.cache.get(structure) {
            return Ok(Lookup::Cached(hit));
        }
        let shape = self.dataset.shape();
        let phi = compression_ratio(structure, shape)?;
        let params = param_count(structure, shape)?;

        let errors: Vec<f64> = self
            .dataset
            .samples()
            .par_iter()
            .enumerate()
            .map(|(l, sample)| fit_sample(sample, structure, &self.fit, l as u64).map(|(_, e)| e))
            .collect::<Result<Vec<_>>>()?;
        // Sequential sum keeps the result independent of thread scheduling.
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let objective = objective_value(phi, self.lambda, mean);

        let (result, inserted) = self.cache.insert_with(structure, |eval_index| EvaluationResult {
            structure: structure.clone(),
            phi,
            mean_relative_error: mean,
            objective,
            param_count: params,
            eval_index,
            source,
        });
        if inserted {
            if let Some(observer) = &self.observer {
                observer(&result);
            }
            Ok(Lookup::Fresh(result))
        } else {
            Ok(Lookup::Cached(result))
        }
    }
}

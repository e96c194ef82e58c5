use serde::{Deserialize, Serialize};

use super::config::{StoppingConfig, Strategy};
use super::neighborhood::{enumerate_variable, NeighborhoodSampler};
use super::stopping::early_stop_check;
use crate::error::{Error, Result};
use crate::objective::{EvaluationResult, Evaluator, Lookup, Source};
use crate::structure::TNStructure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchState {
    pub center: TNStructure,
    pub best: EvaluationResult,
    /// Every distinct structure evaluated by this search, in evaluation order.
    pub history: Vec<EvaluationResult>,
    /// Results for the most recent iteration's candidates, cached or fresh.
    pub candidates: Vec<EvaluationResult>,
    pub evals_used: usize,
    pub iterations_done: usize,
    /// Best-so-far objective after initialization and after each iteration.
    pub best_trace: Vec<f64>,
}

impl SearchState {
    /// Starts a search from an already evaluated structure.
    pub(crate) fn start(init: Lookup) -> Self {
        let fresh = init.is_fresh();
        let init = init.into_result();
        Self {
            center: init.structure.clone(),
            best: init.clone(),
            history: if fresh { vec![init.clone()] } else { Vec::new() },
            candidates: Vec::new(),
            evals_used: usize::from(fresh),
            iterations_done: 0,
            best_trace: vec![init.objective],
        }
    }

    /// Folds one lookup into the history and the running best.
    pub(crate) fn record(&mut self, lookup: Lookup) -> EvaluationResult {
        let fresh = lookup.is_fresh();
        let result = lookup.into_result();
        if fresh {
            self.history.push(result.clone());
            self.evals_used += 1;
        }
        if result.better_than(&self.best) {
            self.best = result.clone();
        }
        result
    }

    /// Moves the center to the best structure seen if it is strictly better.
    fn recenter(&mut self, center_objective: &mut f64) {
        if self.best.objective < *center_objective {
            self.center = self.best.structure.clone();
            *center_objective = self.best.objective;
        }
    }

    /// `eval_index` of the first record attaining the best objective.
    pub fn evals_to_best(&self) -> Option<usize> {
        self.history
            .iter()
            .find(|r| r.objective == self.best.objective)
            .map(|r| r.eval_index)
    }
}

/// Generic sampling-based search loop.
///
/// The alternating strategy re-centers after every variable; one outer
/// iteration is `rounds` sweeps over all variables. Evaluation stops as soon
/// as `stopping.max_evals` fresh evaluations have been spent, and the loop
/// ends when the best objective has not improved for `patience` iterations.
pub fn run_local_search(
    evaluator: &Evaluator<'_>,
    init: &TNStructure,
    strategy: &Strategy,
    stopping: &StoppingConfig,
) -> Result<SearchState> {
    stopping.validate()?;
    match strategy {
        Strategy::Neighborhood(c) => c.validate()?,
        Strategy::Alternating(c) => c.validate()?,
    }
    if init.order() != evaluator.dataset().shape().len() {
        return Err(Error::OrderMismatch {
            expected: evaluator.dataset().shape().len(),
            found: init.order(),
        });
    }
    if !init.within_bounds(strategy.r_max()) {
        return Err(Error::InvalidArgument(format!(
            "initial structure {init} exceeds r_max = {}",
            strategy.r_max()
        )));
    }

    let mut state = SearchState::start(evaluator.evaluate(init, Source::Init)?);
    let mut center_objective = state.best.objective;
    let mut sampler = match strategy {
        Strategy::Neighborhood(c) => Some(NeighborhoodSampler::new(c.clone())),
        Strategy::Alternating(_) => None,
    };

    while state.evals_used < stopping.max_evals {
        state.candidates.clear();
        match strategy {
            Strategy::Neighborhood(_) => {
                let sampler = sampler.as_mut().expect("sampler for neighborhood strategy");
                for candidate in sampler.sample(&state.center) {
                    if state.evals_used >= stopping.max_evals {
                        break;
                    }
                    let lookup = evaluator.evaluate(&candidate, Source::Neighborhood)?;
                    let result = state.record(lookup);
                    state.candidates.push(result);
                }
                state.recenter(&mut center_objective);
            }
            Strategy::Alternating(config) => {
                'sweeps: for _ in 0..config.rounds {
                    for var in 0..state.center.num_vars() {
                        for candidate in enumerate_variable(&state.center, var, config)? {
                            if state.evals_used >= stopping.max_evals {
                                break 'sweeps;
                            }
                            let lookup = evaluator.evaluate(&candidate, Source::Enumeration)?;
                            let result = state.record(lookup);
                            state.candidates.push(result);
                        }
                        state.recenter(&mut center_objective);
                    }
                }
                state.recenter(&mut center_objective);
            }
        }
        state.iterations_done += 1;
        state.best_trace.push(state.best.objective);
        if early_stop_check(&state.best_trace, stopping.patience, stopping.delta) {
            break;
        }
    }
    Ok(state)
}

use super::client::ChatClient;
use super::dialogue::{run_llm_search, DialogueState, LlmSearchConfig};
use super::domain::DomainInfo;
use crate::error::{Error, Result};
use crate::objective::Evaluator;
use crate::search::{run_local_search, SearchState, StoppingConfig, Strategy};

pub const DEFAULT_LLM_BUDGET: usize = 10;

/// LLM warm start followed by local search from the LLM's best structure.
///
/// Both phases draw on one budget of `stopping.max_evals` fresh evaluations
/// and share the evaluator's cache. The returned history is the LLM phase's
/// followed by the local phase's.
pub fn hybrid_search<C: ChatClient + ?Sized>(
    evaluator: &Evaluator<'_>,
    domain: &DomainInfo,
    client: &C,
    llm: &LlmSearchConfig,
    llm_budget: usize,
    strategy: &Strategy,
    stopping: &StoppingConfig,
) -> Result<(SearchState, DialogueState)> {
    if llm_budget < 1 {
        return Err(Error::Config("llm_budget must be >= 1".into()));
    }
    if llm.r_max > strategy.r_max() {
        return Err(Error::Config(format!(
            "LLM rank bound {} exceeds the local search bound {}",
            llm.r_max,
            strategy.r_max()
        )));
    }
    let llm_stopping = StoppingConfig {
        max_evals: llm_budget.min(stopping.max_evals),
        ..stopping.clone()
    };
    let (warm, dialogue) = run_llm_search(evaluator, domain, client, &llm_stopping, llm)?;
    let remaining = stopping.max_evals - warm.evals_used;
    if remaining == 0 {
        return Ok((warm, dialogue));
    }

    let local_stopping = StoppingConfig {
        max_evals: remaining,
        ..stopping.clone()
    };
    let local = run_local_search(evaluator, &warm.best.structure, strategy, &local_stopping)?;

    let best = if local.best.better_than(&warm.best) {
        local.best.clone()
    } else {
        warm.best.clone()
    };
    let mut history = warm.history;
    history.extend(local.history);
    let mut best_trace = warm.best_trace;
    best_trace.extend(local.best_trace.into_iter().skip(1));
    let state = SearchState {
        center: local.center,
        best,
        history,
        candidates: local.candidates,
        evals_used: warm.evals_used + local.evals_used,
        iterations_done: warm.iterations_done + local.iterations_done,
        best_trace,
    };
    Ok((state, dialogue))
}

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::bundle::load_bundle;
use super::config::{Algorithm, RunConfig};
use super::runlog::{write_text, RunLogRecord, RunLogWriter, EXPLANATIONS_FILE, RUN_LOG_FILE};
use crate::error::{Error, Result};
use crate::llm::{
    hybrid_search, run_llm_search, ChatClient, DialogueState, DomainInfo, LlmSearchConfig, PromptTemplates,
    ScriptedClient,
};
use crate::objective::{EvaluationResult, Evaluator, Source};
use crate::search::{exhaustive_search, run_local_search, SearchState};
use crate::structure::TNStructure;
use crate::tensor::{SplitTag, TensorDataset};

pub const BEST_FILE: &str = "best.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitScore {
    pub objective: f64,
    pub phi: f64,
    pub mean_relative_error: f64,
}

impl From<&EvaluationResult> for SplitScore {
    fn from(r: &EvaluationResult) -> Self {
        Self {
            objective: r.objective,
            phi: r.phi,
            mean_relative_error: r.mean_relative_error,
        }
    }
}

/// Contents of `best.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestReport {
    pub algorithm: Algorithm,
    pub ranks: Vec<usize>,
    pub param_count: usize,
    pub train: SplitScore,
    /// Cores refit on the held-out samples at the same structure; absent
    /// when the input bundle was already a single split.
    pub test: Option<SplitScore>,
    pub evals_used: usize,
    pub evals_to_best: usize,
    pub iterations: usize,
    /// Best objective after initialization and after each iteration.
    pub best_trace: Vec<f64>,
    pub lambda: f64,
    pub r_max: usize,
    pub seed: u64,
    /// When alternating search moves its center.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recenter_policy: Option<String>,
}

struct Outcome {
    best: EvaluationResult,
    iterations: usize,
    best_trace: Vec<f64>,
    dialogue: Option<DialogueState>,
}

impl Outcome {
    fn from_search(state: SearchState, dialogue: Option<DialogueState>) -> Self {
        Self {
            best: state.best,
            iterations: state.iterations_done,
            best_trace: state.best_trace,
            dialogue,
        }
    }
}

fn split_for_run(dataset: TensorDataset, fraction: f64) -> Result<(TensorDataset, Option<TensorDataset>)> {
    match dataset.tag() {
        SplitTag::Unsplit => {
            let (train, test) = dataset.split(fraction)?;
            Ok((train, Some(test)))
        }
        _ => Ok((dataset, None)),
    }
}

fn make_client(config: &RunConfig) -> Result<Box<dyn ChatClient>> {
    let llm = config
        .llm
        .as_ref()
        .ok_or_else(|| Error::Config(format!("algorithm `{}` needs an `llm` section", config.algorithm)))?;
    Ok(match &llm.scripted_replies {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Box::new(ScriptedClient::from_json(&text)?)
        }
        #[cfg(feature = "http")]
        None => Box::new(crate::llm::HttpChatClient::new(llm.client.clone())?),
        #[cfg(not(feature = "http"))]
        None => {
            return Err(Error::Config(
                "built without the `http` feature; set llm.scripted_replies".into(),
            ))
        }
    })
}

fn llm_setup(config: &RunConfig, train: &TensorDataset, r_max: usize) -> Result<(DomainInfo, LlmSearchConfig)> {
    let domain = match &config.domain {
        Some(path) => DomainInfo::load(path)?,
        None => DomainInfo::sizes_only(train.shape()),
    };
    let templates = match config.llm.as_ref().and_then(|l| l.templates_dir.as_deref()) {
        Some(dir) => PromptTemplates::load_dir(dir)?,
        None => PromptTemplates::default(),
    };
    Ok((domain, LlmSearchConfig { r_max, templates }))
}

fn search(config: &RunConfig, evaluator: &Evaluator<'_>, r_max: usize) -> Result<Outcome> {
    let order = evaluator.dataset().shape().len();
    let init = match &config.init {
        Some(ranks) => TNStructure::new(order, ranks.clone())?,
        None => TNStructure::all_ones(order)?,
    };
    let strategy = config.strategy(r_max);
    match config.algorithm {
        Algorithm::Exhaustive => {
            let best = exhaustive_search(evaluator, order, r_max)?;
            let mut running = f64::INFINITY;
            let best_trace: Vec<f64> = evaluator
                .cache()
                .history()
                .iter()
                .map(|r| {
                    running = running.min(r.objective);
                    running
                })
                .collect();
            Ok(Outcome {
                best,
                iterations: best_trace.len(),
                best_trace,
                dialogue: None,
            })
        }
        Algorithm::Tnls | Algorithm::Tnale => {
            let state = run_local_search(evaluator, &init, &strategy, &config.stopping)?;
            Ok(Outcome::from_search(state, None))
        }
        Algorithm::Tnllm => {
            let client = make_client(config)?;
            let (domain, llm) = llm_setup(config, evaluator.dataset(), r_max)?;
            let (state, dialogue) = run_llm_search(evaluator, &domain, client.as_ref(), &config.stopping, &llm)?;
            Ok(Outcome::from_search(state, Some(dialogue)))
        }
        Algorithm::Hybrid => {
            let client = make_client(config)?;
            let (domain, llm) = llm_setup(config, evaluator.dataset(), r_max)?;
            let budget = config.llm.as_ref().map(|l| l.budget).unwrap_or(crate::llm::DEFAULT_LLM_BUDGET);
            let (state, dialogue) =
                hybrid_search(evaluator, &domain, client.as_ref(), &llm, budget, &strategy, &config.stopping)?;
            Ok(Outcome::from_search(state, Some(dialogue)))
        }
    }
}

/// Markdown rendering of every explanation, anchored by evaluation index.
pub fn render_explanations(dialogue: &DialogueState) -> String {
    let mut out = String::from("# Explanations\n");
    let mut seen = std::collections::HashSet::new();
    for (n, e) in dialogue.explanations.iter().enumerate() {
        let heading = match e.eval_index {
            Some(idx) if seen.insert(idx) => format!("eval-{idx}"),
            Some(idx) => format!("eval-{idx} (proposed again)"),
            None => format!("proposal {} (not evaluated)", n + 1),
        };
        let _ = write!(out, "\n## {heading}\n\nProposed: {}\n\n", e.structure);
        if e.reasoning.is_empty() {
            out.push_str("(no reasoning given)\n");
        } else {
            out.push_str(&e.reasoning);
            out.push('\n');
        }
    }
    if !dialogue.failures.is_empty() {
        out.push_str("\n## Failed turns\n\n");
        for f in &dialogue.failures {
            let _ = writeln!(out, "- {f}");
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub report: BestReport,
}

/// Runs the configured search on the training split and writes `run.jsonl`,
/// `best.json`, and (for LLM modes) `explanations.md` into `config.out_dir`.
pub fn cmd_run(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    let dataset = load_bundle(&config.dataset)?;
    let (train, test) = split_for_run(dataset, config.train_fraction)?;
    let r_max = config.r_max_for(train.shape());
    fs::create_dir_all(&config.out_dir).map_err(|e| Error::io(&config.out_dir, e))?;
    let out: &Path = &config.out_dir;

    let log = RunLogWriter::create(&out.join(RUN_LOG_FILE))?;
    let outcome = {
        let evaluator = Evaluator::new(&train, config.lambda, config.fit_config())?
            .with_observer(|r| log.append(&RunLogRecord::from_result(r)));
        let outcome = search(config, &evaluator, r_max)?;
        let history = evaluator.cache().history();
        let evals_to_best = history
            .iter()
            .find(|r| r.objective == outcome.best.objective)
            .map_or(outcome.best.eval_index, |r| r.eval_index);
        (outcome, history.len(), evals_to_best)
    };
    log.finish()?;
    let (outcome, evals_used, evals_to_best) = outcome;

    let test_score = match &test {
        Some(test) => {
            let evaluator = Evaluator::new(test, config.lambda, config.fit_config())?;
            Some(SplitScore::from(
                evaluator.evaluate(&outcome.best.structure, Source::Init)?.result(),
            ))
        }
        None => None,
    };

    let report = BestReport {
        algorithm: config.algorithm,
        ranks: outcome.best.structure.ranks().to_vec(),
        param_count: outcome.best.param_count,
        train: SplitScore::from(&outcome.best),
        test: test_score,
        evals_used,
        evals_to_best,
        iterations: outcome.iterations,
        best_trace: outcome.best_trace,
        lambda: config.lambda,
        r_max,
        seed: config.seed,
        recenter_policy: matches!(config.algorithm, Algorithm::Tnale | Algorithm::Hybrid)
            .then(|| "after each variable".to_owned()),
    };
    write_text(&out.join(BEST_FILE), &serde_json::to_string_pretty(&report)?)?;
    if let Some(dialogue) = &outcome.dialogue {
        write_text(&out.join(EXPLANATIONS_FILE), &render_explanations(dialogue))?;
    }
    Ok(RunSummary {
        out_dir: config.out_dir.clone(),
        report,
    })
}

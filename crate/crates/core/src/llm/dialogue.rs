//! The LLM-driven search loop: an initialization turn followed by
//! optimization turns that report the best and most recent structures.

use serde::{Deserialize, Serialize};

use super::client::{ChatClient, ChatMessage};
use super::domain::DomainInfo;
use super::parse::parse_solution;
use super::prompts::{
    format_spec, render_behavior_prompt, render_optimization_prompt, render_task_prompt, LastProposal,
    PromptTemplates,
};
use crate::error::{Error, Result};
use crate::objective::{EvaluationResult, Evaluator, Lookup, Source};
use crate::search::{early_stop_check, SearchState, StoppingConfig};
use crate::structure::TNStructure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmSearchConfig {
    pub r_max: usize,
    #[serde(skip)]
    pub templates: PromptTemplates,
}

impl LlmSearchConfig {
    pub fn new(r_max: usize) -> Self {
        Self {
            r_max,
            templates: PromptTemplates::default(),
        }
    }
}

/// The reasoning the model gave for one parsed proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    /// `None` when the proposal could not be evaluated.
    pub eval_index: Option<usize>,
    pub structure: TNStructure,
    pub reasoning: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueState {
    /// Every message exchanged: the system message, then user/assistant pairs.
    pub transcript: Vec<ChatMessage>,
    pub best: EvaluationResult,
    pub last: EvaluationResult,
    pub explanations: Vec<Explanation>,
    pub evals_used: usize,
    /// Turns whose reply stayed unusable after the re-prompt, or whose
    /// proposal failed to evaluate.
    pub failures: Vec<String>,
}

struct Dialogue<'c, C: ?Sized> {
    client: &'c C,
    system: ChatMessage,
    transcript: Vec<ChatMessage>,
    explanations: Vec<Explanation>,
    failures: Vec<String>,
    order: usize,
    r_max: usize,
    spec: String,
}

enum Outcome {
    Evaluated(Lookup),
    Invalid { ranks: Vec<usize>, reason: String },
    Unparsed,
}

impl<C: ChatClient + ?Sized> Dialogue<'_, C> {
    fn exchange(&mut self, messages: &[ChatMessage]) -> Result<String> {
        let reply = self.client.complete(messages)?;
        self.transcript.push(messages.last().expect("non-empty request").clone());
        self.transcript.push(ChatMessage::assistant(reply.clone()));
        Ok(reply)
    }

    /// One request, plus a single re-prompt if the reply does not parse.
    fn ask(&mut self, prompt: String) -> Result<Option<(TNStructure, String)>> {
        let user = ChatMessage::user(prompt);
        let reply = self.exchange(&[self.system.clone(), user.clone()])?;
        let err = match parse_solution(&reply, self.order, self.r_max) {
            Ok(parsed) => return Ok(Some(parsed)),
            Err(e) => e,
        };
        let retry = ChatMessage::user(format!(
            "Your previous reply could not be used: {err}.\n{}",
            self.spec
        ));
        let messages = [self.system.clone(), user, ChatMessage::assistant(reply), retry];
        let reply = self.exchange(&messages)?;
        match parse_solution(&reply, self.order, self.r_max) {
            Ok(parsed) => Ok(Some(parsed)),
            Err(e) => {
                self.failures.push(format!("unparseable reply after re-prompt: {e}"));
                Ok(None)
            }
        }
    }

    fn propose(&mut self, evaluator: &Evaluator<'_>, prompt: String) -> Result<Outcome> {
        let Some((structure, reasoning)) = self.ask(prompt)? else {
            return Ok(Outcome::Unparsed);
        };
        let (outcome, eval_index) = match evaluator.evaluate(&structure, Source::Llm) {
            Ok(lookup) => {
                let idx = lookup.result().eval_index;
                (Outcome::Evaluated(lookup), Some(idx))
            }
            Err(Error::NumericalFailure { detail, .. }) => {
                self.failures.push(format!("{structure}: {detail}"));
                let ranks = structure.ranks().to_vec();
                (Outcome::Invalid { ranks, reason: detail }, None)
            }
            Err(e) => return Err(e),
        };
        self.explanations.push(Explanation {
            eval_index,
            structure,
            reasoning,
        });
        Ok(outcome)
    }
}

/// Runs the dialogue until `stopping.max_evals` distinct structures have been
/// evaluated or the best objective stalls for `stopping.patience` turns.
///
/// Each turn sends the system message and one composed user message. Cache
/// hits, invalid structures, and unparseable replies all count as stalled
/// turns; only fresh evaluations count against the budget.
pub fn run_llm_search<C: ChatClient + ?Sized>(
    evaluator: &Evaluator<'_>,
    domain: &DomainInfo,
    client: &C,
    stopping: &StoppingConfig,
    config: &LlmSearchConfig,
) -> Result<(SearchState, DialogueState)> {
    stopping.validate()?;
    if config.r_max < 1 {
        return Err(Error::Config("r_max must be >= 1".into()));
    }
    let shape = evaluator.dataset().shape().to_vec();
    let spec = format_spec(config.r_max);
    let task = render_task_prompt(&config.templates, domain, &shape, config.r_max, &spec)?;
    let system = ChatMessage::system(render_behavior_prompt(&config.templates, evaluator.lambda())?);

    let mut dialogue = Dialogue {
        client,
        transcript: vec![system.clone()],
        system,
        explanations: Vec::new(),
        failures: Vec::new(),
        order: shape.len(),
        r_max: config.r_max,
        spec,
    };

    let mut turns = 0;
    let mut state = loop {
        if turns == stopping.patience {
            return Err(Error::NoInitialStructure { turns });
        }
        turns += 1;
        if let Outcome::Evaluated(lookup) = dialogue.propose(evaluator, task.clone())? {
            break SearchState::start(lookup);
        }
    };
    state.candidates.push(state.best.clone());
    let mut last = state.best.clone();
    let mut invalid: Option<(Vec<usize>, String)> = None;

    while state.evals_used < stopping.max_evals {
        let report = match &invalid {
            Some((ranks, reason)) => LastProposal::Invalid { ranks, reason },
            None => LastProposal::Evaluated(&last),
        };
        let prompt = render_optimization_prompt(&config.templates, &state.best, report, domain, config.r_max, &dialogue.spec)?;
        state.candidates.clear();
        match dialogue.propose(evaluator, prompt)? {
            Outcome::Evaluated(lookup) => {
                last = state.record(lookup);
                state.candidates.push(last.clone());
                invalid = None;
            }
            Outcome::Invalid { ranks, reason } => invalid = Some((ranks, reason)),
            Outcome::Unparsed => {}
        }
        state.center = state.best.structure.clone();
        state.iterations_done += 1;
        state.best_trace.push(state.best.objective);
        if early_stop_check(&state.best_trace, stopping.patience, stopping.delta) {
            break;
        }
    }

    let dialogue_state = DialogueState {
        transcript: dialogue.transcript,
        best: state.best.clone(),
        last,
        explanations: dialogue.explanations,
        evals_used: state.evals_used,
        failures: dialogue.failures,
    };
    Ok((state, dialogue_state))
}

//! Prompt templates and rendering.
//!
//! Templates are plain text with `{name}` placeholders. Rendering fails if a
//! template names a placeholder that has no value.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::domain::DomainInfo;
use crate::error::{Error, Result};
use crate::objective::EvaluationResult;

pub const BEHAVIOR_TEMPLATE: &str = include_str!("../../templates/behavior.txt");
pub const TASK_TEMPLATE: &str = include_str!("../../templates/task.txt");
pub const OPTIMIZATION_TEMPLATE: &str = include_str!("../../templates/optimization.txt");

/// The output-format block appended to every proposal-requesting prompt.
pub fn format_spec(r_max: usize) -> String {
    format!(
        "End your reply with exactly one line: RANKS: [k_12, k_13, ..., k_(N-1)N] — integers between 1 and {r_max}, upper-triangular order (1,2),(1,3),...,(N-1,N)."
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplates {
    pub behavior: String,
    pub task: String,
    pub optimization: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            behavior: BEHAVIOR_TEMPLATE.to_owned(),
            task: TASK_TEMPLATE.to_owned(),
            optimization: OPTIMIZATION_TEMPLATE.to_owned(),
        }
    }
}

impl PromptTemplates {
    /// Loads `behavior.txt`, `task.txt`, and `optimization.txt` from `dir`,
    /// falling back to the built-in text for any file that is absent.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str, fallback: &str| -> Result<String> {
            let path = dir.join(name);
            if path.exists() {
                fs::read_to_string(&path).map_err(|e| Error::io(path, e))
            } else {
                Ok(fallback.to_owned())
            }
        };
        Ok(Self {
            behavior: read("behavior.txt", BEHAVIOR_TEMPLATE)?,
            task: read("task.txt", TASK_TEMPLATE)?,
            optimization: read("optimization.txt", OPTIMIZATION_TEMPLATE)?,
        })
    }
}

/// Substitutes `{name}` placeholders in a single pass; substituted values are
/// not rescanned.
pub fn render_template(template: &str, values: &[(&str, &str)]) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let name_len = after
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
            .unwrap_or(after.len());
        if name_len > 0 && after[name_len..].starts_with('}') {
            let name = &after[..name_len];
            let value = values
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Template(format!("unresolved placeholder {{{name}}}")))?;
            out.push_str(value);
            rest = &after[name_len + 1..];
        } else {
            out.push('{');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

fn rank_bounds(r_max: usize) -> String {
    format!("every rank is an integer between 1 and {r_max}")
}

/// Renders a structure as its rank vector followed by the pair each rank belongs to.
pub fn describe_structure(result: &EvaluationResult) -> String {
    let s = &result.structure;
    let pairs: Vec<String> = (0..s.num_vars())
        .map(|v| {
            let (i, j) = s.pair_of(v);
            format!("({},{})={}", i + 1, j + 1, s.ranks()[v])
        })
        .collect();
    format!("{s} (pairs {})", pairs.join(", "))
}

/// The system message. `lambda` is printed with Rust's shortest round-trip form.
pub fn render_behavior_prompt(templates: &PromptTemplates, lambda: f64) -> Result<String> {
    render_template(&templates.behavior, &[("lambda", &lambda.to_string())])
}

/// The first user message, asking for an initial structure.
pub fn render_task_prompt(
    templates: &PromptTemplates,
    domain: &DomainInfo,
    shape: &[usize],
    r_max: usize,
    format_spec: &str,
) -> Result<String> {
    domain.check_shape(shape)?;
    render_template(
        &templates.task,
        &[
            ("tensor_order", &shape.len().to_string()),
            ("mode_table", &domain.mode_table()),
            ("rank_bounds", &rank_bounds(r_max)),
            ("format_spec", format_spec),
        ],
    )
}

/// What the optimization prompt reports about the most recent proposal.
#[derive(Debug, Clone, Copy)]
pub enum LastProposal<'a> {
    Evaluated(&'a EvaluationResult),
    /// The proposal could not be evaluated; the text says why.
    Invalid { ranks: &'a [usize], reason: &'a str },
}

/// The iterative user message carrying the best and most recent structures.
pub fn render_optimization_prompt(
    templates: &PromptTemplates,
    best: &EvaluationResult,
    last: LastProposal<'_>,
    domain: &DomainInfo,
    r_max: usize,
    format_spec: &str,
) -> Result<String> {
    if let LastProposal::Evaluated(last) = last {
        if last.objective < best.objective {
            return Err(Error::InvalidArgument(format!(
                "best objective {} is worse than last objective {}",
                best.objective, last.objective
            )));
        }
    }
    let (last_structure, last_objective) = match last {
        LastProposal::Evaluated(r) => (describe_structure(r), format!("{:.4}", r.objective)),
        LastProposal::Invalid { ranks, reason } => (
            format!("{ranks:?} (invalid structure: {reason})"),
            "not available (invalid structure)".to_owned(),
        ),
    };
    render_template(
        &templates.optimization,
        &[
            ("tensor_order", &domain.order().to_string()),
            ("mode_table", &domain.mode_table()),
            ("best_structure", &describe_structure(best)),
            ("best_objective", &format!("{:.4}", best.objective)),
            ("last_structure", &last_structure),
            ("last_objective", &last_objective),
            ("rank_bounds", &rank_bounds(r_max)),
            ("format_spec", format_spec),
        ],
    )
}

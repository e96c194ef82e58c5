use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::run::{BestReport, BEST_FILE};
use super::runlog::{read_run_log, RunLogRecord, EXPLANATIONS_FILE, RUN_LOG_FILE};
use crate::error::{Error, Result};

const EXCERPT_CHARS: usize = 240;

#[derive(Debug, Clone, PartialEq)]
pub struct LogSummary {
    pub best: RunLogRecord,
    /// `eval_index` of the first record attaining the minimum objective.
    pub evals_to_best: usize,
    /// Running minimum of the objective, one entry per record.
    pub best_so_far: Vec<f64>,
}

pub fn summarize_log(records: &[RunLogRecord]) -> Option<LogSummary> {
    let mut best: Option<&RunLogRecord> = None;
    let mut best_so_far = Vec::with_capacity(records.len());
    for r in records {
        if best.is_none_or(|b| r.objective < b.objective) {
            best = Some(r);
        }
        best_so_far.push(best.expect("set above").objective);
    }
    let best = best?.clone();
    Some(LogSummary {
        evals_to_best: best.eval_index,
        best,
        best_so_far,
    })
}

fn excerpts(markdown: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for section in markdown.split("\n## ").skip(1) {
        let (heading, body) = section.split_once('\n').unwrap_or((section, ""));
        let body = body.trim();
        let mut text: String = body.chars().take(EXCERPT_CHARS).collect();
        if body.chars().count() > EXCERPT_CHARS {
            text.push_str("...");
        }
        out.push((heading.trim().to_owned(), text));
    }
    out
}

/// Text summary of a run directory.
pub fn cmd_report(dir: &Path) -> Result<String> {
    let log_path = dir.join(RUN_LOG_FILE);
    let records = read_run_log(&log_path)?;
    let summary = summarize_log(&records).ok_or_else(|| Error::bundle(&log_path, "run log is empty"))?;

    let mut out = String::new();
    let _ = writeln!(out, "evaluations: {}", records.len());
    let _ = writeln!(
        out,
        "best: {:?} objective {:.4} (phi {:.4}, mean relative error {:.3e}, source {})",
        summary.best.ranks, summary.best.objective, summary.best.phi, summary.best.mean_relative_error, summary.best.source
    );
    let best_path = dir.join(BEST_FILE);
    if best_path.exists() {
        let text = fs::read_to_string(&best_path).map_err(|e| Error::io(&best_path, e))?;
        let best: BestReport =
            serde_json::from_str(&text).map_err(|e| Error::bundle(&best_path, e.to_string()))?;
        let _ = writeln!(out, "train objective: {:.4}", best.train.objective);
        match best.test {
            Some(test) => {
                let _ = writeln!(out, "test objective: {:.4}", test.objective);
            }
            None => out.push_str("test objective: n/a\n"),
        }
    }
    let _ = writeln!(out, "evals to best: {}", summary.evals_to_best);
    out.push_str("best-so-far (eval_index objective):\n");
    for (r, v) in records.iter().zip(&summary.best_so_far) {
        let _ = writeln!(out, "{} {v:.6}", r.eval_index);
    }

    let md_path = dir.join(EXPLANATIONS_FILE);
    if md_path.exists() {
        let md = fs::read_to_string(&md_path).map_err(|e| Error::io(&md_path, e))?;
        out.push_str("explanations:\n");
        for (heading, text) in excerpts(&md) {
            let _ = writeln!(out, "[{heading}] {}", text.replace('\n', " "));
        }
    }
    Ok(out)
}

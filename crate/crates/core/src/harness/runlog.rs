use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{EvaluationResult, Source};

pub const RUN_LOG_FILE: &str = "run.jsonl";
pub const EXPLANATIONS_FILE: &str = "explanations.md";

/// One line of `run.jsonl`: a distinct evaluated structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogRecord {
    pub eval_index: usize,
    pub ranks: Vec<usize>,
    pub phi: f64,
    pub mean_relative_error: f64,
    pub objective: f64,
    pub source: Source,
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explanation: Option<String>,
}

impl RunLogRecord {
    pub fn from_result(result: &EvaluationResult) -> Self {
        let timestamp_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_millis() as u64)
            .unwrap_or(0);
        Self {
            eval_index: result.eval_index,
            ranks: result.structure.ranks().to_vec(),
            phi: result.phi,
            mean_relative_error: result.mean_relative_error,
            objective: result.objective,
            source: result.source,
            timestamp_ms,
            explanation: (result.source == Source::Llm).then(|| explanation_anchor(result.eval_index)),
        }
    }
}

/// Where the reasoning behind an LLM-proposed evaluation lives.
pub fn explanation_anchor(eval_index: usize) -> String {
    format!("{EXPLANATIONS_FILE}#eval-{eval_index}")
}

/// Appends records as they arrive, flushing each line. Write errors are
/// held until `finish`.
#[derive(Debug)]
pub struct RunLogWriter {
    path: PathBuf,
    inner: Mutex<(File, Option<std::io::Error>)>,
}

impl RunLogWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_owned(),
            inner: Mutex::new((file, None)),
        })
    }

    pub fn append(&self, record: &RunLogRecord) {
        let mut guard = self.inner.lock().expect("run log lock poisoned");
        let (file, err) = &mut *guard;
        if err.is_some() {
            return;
        }
        let mut line = serde_json::to_string(record).expect("record serializes");
        line.push('\n');
        if let Err(e) = file.write_all(line.as_bytes()).and_then(|_| file.flush()) {
            *err = Some(e);
        }
    }

    pub fn finish(self) -> Result<()> {
        let (_, err) = self.inner.into_inner().expect("run log lock poisoned");
        match err {
            Some(e) => Err(Error::io(self.path, e)),
            None => Ok(()),
        }
    }
}

pub fn read_run_log(path: &Path) -> Result<Vec<RunLogRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RunLogRecord = serde_json::from_str(&line)
            .map_err(|e| Error::bundle(path, format!("line {}: {e}", n + 1)))?;
        if let Some(prev) = records.last().map(|r: &RunLogRecord| r.eval_index) {
            if record.eval_index <= prev {
                return Err(Error::bundle(
                    path,
                    format!("line {}: eval_index {} does not increase", n + 1, record.eval_index),
                ));
            }
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::TNStructure;

    fn result(idx: usize, objective: f64, source: Source) -> EvaluationResult {
        EvaluationResult {
            structure: TNStructure::from_ranks(vec![idx, 1, 1]).unwrap(),
            phi: 0.5,
            mean_relative_error: 0.01,
            objective,
            param_count: 12,
            eval_index: idx,
            source,
        }
    }

    #[test]
    fn writes_and_reads_back() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(RUN_LOG_FILE);
        let writer = RunLogWriter::create(&path).unwrap();
        writer.append(&RunLogRecord::from_result(&result(1, -0.5, Source::Llm)));
        writer.append(&RunLogRecord::from_result(&result(2, -0.7, Source::Neighborhood)));
        writer.finish().unwrap();
        let back = read_run_log(&path).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].explanation.as_deref(), Some("explanations.md#eval-1"));
        assert_eq!(back[1].explanation, None);
        assert_eq!(back[1].ranks, vec![2, 1, 1]);
    }

    #[test]
    fn rejects_corrupt_or_unordered_logs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(RUN_LOG_FILE);
        fs::write(&path, "{not json}\n").unwrap();
        assert!(read_run_log(&path).is_err());
        let a = serde_json::to_string(&RunLogRecord::from_result(&result(2, -0.5, Source::Init))).unwrap();
        let b = serde_json::to_string(&RunLogRecord::from_result(&result(1, -0.5, Source::Init))).unwrap();
        fs::write(&path, format!("{a}\n{b}\n")).unwrap();
        assert!(read_run_log(&path).is_err());
    }
}

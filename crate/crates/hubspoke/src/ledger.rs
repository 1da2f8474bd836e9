//! Append-only evidence ledger: one JSON object per line, synced before `append` returns.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use chrono::{DateTime, SecondsFormat, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{PlatformError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WorkflowKind {
    A,
    B,
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LedgerVerdict {
    Committed,
    Rejected,
    Violation,
}

impl std::fmt::Display for LedgerVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LedgerVerdict::Committed => "committed",
            LedgerVerdict::Rejected => "rejected",
            LedgerVerdict::Violation => "violation",
        })
    }
}

/// Offending hub/spoke pair, with the nearest compliant spoke when one exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub hub: Vec<f64>,
    pub spoke: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nearest: Option<Vec<f64>>,
    pub reason: String,
}

/// Everything but the sequence number and timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct NewEntry {
    pub workflow: WorkflowKind,
    pub hub: Option<Vec<f64>>,
    pub spoke: Option<Vec<f64>>,
    pub relation_id: String,
    pub map_id: Option<String>,
    pub verdict: LedgerVerdict,
    pub metrics: BTreeMap<String, f64>,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub seq: u64,
    pub timestamp: String,
    pub workflow: WorkflowKind,
    pub hub: Option<Vec<f64>>,
    pub spoke: Option<Vec<f64>>,
    pub relation_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub map_id: Option<String>,
    pub verdict: LedgerVerdict,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl LedgerEntry {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("ledger entry serializes");
        s.push('\n');
        s
    }
}

pub trait Clock: Send {
    fn now(&self) -> DateTime<Utc>;
}

pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Deterministic clock: `start`, then one `step` later on every call.
pub struct FixedClock {
    start: DateTime<Utc>,
    step: TimeDelta,
    ticks: AtomicU64,
}

impl FixedClock {
    pub fn new(start: DateTime<Utc>, step: TimeDelta) -> Self {
        Self { start, step, ticks: AtomicU64::new(0) }
    }

    /// 2024-01-01T00:00:00Z, one second per tick.
    pub fn epoch() -> Self {
        Self::new(DateTime::from_timestamp(1_704_067_200, 0).expect("valid instant"), TimeDelta::seconds(1))
    }
}

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        let k = self.ticks.fetch_add(1, Ordering::SeqCst) as i32;
        self.start + self.step * k
    }
}

/// Parses every line; a bad line is reported with its 1-based number.
pub fn read_entries(path: &Path) -> Result<Vec<LedgerEntry>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut out: Vec<LedgerEntry> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let format = |msg: String| PlatformError::Format { path: path.to_path_buf(), line: i + 1, msg };
        let e: LedgerEntry = serde_json::from_str(&line).map_err(|e| format(e.to_string()))?;
        if let Some(prev) = out.last() {
            if e.seq <= prev.seq {
                return Err(format(format!("seq {} does not follow {}", e.seq, prev.seq)));
            }
        }
        out.push(e);
    }
    Ok(out)
}

/// Writes `entries` as a fresh ledger file.
pub fn write_entries(path: &Path, entries: &[LedgerEntry]) -> Result<()> {
    let mut f = File::create(path)?;
    for e in entries {
        f.write_all(e.to_line().as_bytes())?;
    }
    f.sync_all()?;
    Ok(())
}

/// Single-writer handle; appends are serialized through `&mut self`.
pub struct Ledger {
    path: PathBuf,
    file: File,
    last_seq: u64,
    clock: Box<dyn Clock>,
}

impl Ledger {
    pub fn open(path: &Path, clock: Box<dyn Clock>) -> Result<Self> {
        let last_seq = read_entries(path)?.last().map_or(0, |e| e.seq);
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { path: path.to_path_buf(), file, last_seq, clock })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    /// Persists the entry before returning it; on failure the file is cut back to its old length.
    pub fn append(&mut self, new: NewEntry) -> Result<LedgerEntry> {
        let entry = LedgerEntry {
            seq: self.last_seq + 1,
            timestamp: self.clock.now().to_rfc3339_opts(SecondsFormat::Micros, true),
            workflow: new.workflow,
            hub: new.hub,
            spoke: new.spoke,
            relation_id: new.relation_id,
            map_id: new.map_id,
            verdict: new.verdict,
            metrics: new.metrics,
            witness: new.witness,
        };
        if entry.metrics.values().any(|v| !v.is_finite()) {
            return Err(crate::error::invalid("ledger metrics must be finite"));
        }
        let before = self.file.metadata()?.len();
        let written = self.file.write_all(entry.to_line().as_bytes()).and_then(|_| self.file.sync_data());
        if let Err(e) = written {
            let _ = self.file.set_len(before);
            return Err(e.into());
        }
        self.last_seq = entry.seq;
        Ok(entry)
    }

    pub fn entries(&self) -> Result<Vec<LedgerEntry>> {
        read_entries(&self.path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(verdict: LedgerVerdict) -> NewEntry {
        NewEntry {
            workflow: WorkflowKind::A,
            hub: Some(vec![0.3, 0.5, 0.2]),
            spoke: None,
            relation_id: "r1".into(),
            map_id: None,
            verdict,
            metrics: BTreeMap::from([("d".to_string(), 0.125)]),
            witness: None,
        }
    }

    #[test]
    fn sequence_numbers_start_at_one_and_survive_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.jsonl");
        let mut l = Ledger::open(&path, Box::new(FixedClock::epoch())).unwrap();
        assert_eq!(l.append(entry(LedgerVerdict::Committed)).unwrap().seq, 1);
        let second = l.append(entry(LedgerVerdict::Rejected)).unwrap();
        assert_eq!(second.seq, 2);
        assert_eq!(second.timestamp, "2024-01-01T00:00:01.000000Z");
        drop(l);
        let mut l = Ledger::open(&path, Box::new(SystemClock)).unwrap();
        assert_eq!(l.entries().unwrap()[1], second);
        assert_eq!(l.append(entry(LedgerVerdict::Violation)).unwrap().seq, 3);
    }

    #[test]
    fn non_finite_metrics_are_refused_without_writing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.jsonl");
        let mut l = Ledger::open(&path, Box::new(FixedClock::epoch())).unwrap();
        let mut bad = entry(LedgerVerdict::Committed);
        bad.metrics.insert("x".into(), f64::NAN);
        assert!(l.append(bad).is_err());
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 0);
        assert_eq!(l.append(entry(LedgerVerdict::Committed)).unwrap().seq, 1);
    }

    #[test]
    fn bad_lines_report_their_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l.jsonl");
        let mut l = Ledger::open(&path, Box::new(FixedClock::epoch())).unwrap();
        l.append(entry(LedgerVerdict::Committed)).unwrap();
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{not json\n").unwrap();
        match read_entries(&path) {
            Err(PlatformError::Format { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected a format error, got {other:?}"),
        }
    }
}

//! Event-sourced tile labels: an append-only JSONL log, its replay into an
//! effective label per tile, and the exported snapshot used for training.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::slide::TumorLabel;

pub const LOG_FILE: &str = "labels.log.jsonl";
pub const SNAPSHOT_FILE: &str = "labels.jsonl";

pub type TileKey = (String, u32, u32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub slide_id: String,
    pub grid_x: u32,
    pub grid_y: u32,
    pub label: TumorLabel,
    pub annotator: String,
    /// UTC seconds.
    pub timestamp: u64,
}

impl LabelRecord {
    pub fn key(&self) -> TileKey {
        (self.slide_id.clone(), self.grid_x, self.grid_y)
    }
}

/// Tombstone cancelling the label written at line `target`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndoRecord {
    pub undo: bool,
    pub annotator: String,
    pub target: u64,
    pub timestamp: u64,
}

/// One log line. `seq` equals the zero-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LogEntry {
    Undo {
        seq: u64,
        #[serde(flatten)]
        record: UndoRecord,
    },
    Label {
        seq: u64,
        #[serde(flatten)]
        record: LabelRecord,
    },
}

impl LogEntry {
    pub fn seq(&self) -> u64 {
        match self {
            LogEntry::Undo { seq, .. } | LogEntry::Label { seq, .. } => *seq,
        }
    }
}

/// Resolved label of one tile, as written to the snapshot file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TileLabel {
    pub slide_id: String,
    pub grid_x: u32,
    pub grid_y: u32,
    pub label: TumorLabel,
}

impl TileLabel {
    pub fn key(&self) -> TileKey {
        (self.slide_id.clone(), self.grid_x, self.grid_y)
    }
}

/// Label lines still in force after applying every tombstone, by sequence
/// number.
fn live_labels(entries: &[LogEntry]) -> Result<BTreeMap<u64, &LabelRecord>> {
    let mut live = BTreeMap::new();
    for (line, e) in entries.iter().enumerate() {
        if e.seq() != line as u64 {
            return Err(Error::MalformedLog(format!("label log line {line} has seq {}", e.seq())));
        }
        match e {
            LogEntry::Label { seq, record } => {
                live.insert(*seq, record);
            }
            LogEntry::Undo { record, .. } => match live.get(&record.target) {
                Some(r) if r.annotator == record.annotator => {
                    live.remove(&record.target);
                }
                _ => {
                    return Err(Error::MalformedLog(format!(
                        "label log line {line} undoes {} which is not a live label of `{}`",
                        record.target, record.annotator
                    )))
                }
            },
        }
    }
    Ok(live)
}

/// Effective label per tile: the latest live record wins.
pub fn replay(entries: &[LogEntry]) -> Result<BTreeMap<TileKey, TumorLabel>> {
    let mut state = BTreeMap::new();
    for record in live_labels(entries)?.into_values() {
        state.insert(record.key(), record.label);
    }
    Ok(state)
}

pub fn export_labels(entries: &[LogEntry]) -> Result<Vec<TileLabel>> {
    Ok(replay(entries)?
        .into_iter()
        .map(|((slide_id, grid_x, grid_y), label)| TileLabel { slide_id, grid_x, grid_y, label })
        .collect())
}

pub fn write_labels(path: &Path, labels: &[TileLabel]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for l in labels {
        serde_json::to_writer(&mut w, l)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<TileLabel>> {
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

pub fn read_log(path: &Path) -> Result<Vec<LogEntry>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Append-only label log with its replayed state held in memory.
///
/// Every write is flushed and synced before the call returns.
#[derive(Debug)]
pub struct LabelLog {
    path: PathBuf,
    file: File,
    entries: Vec<LogEntry>,
    state: BTreeMap<TileKey, TumorLabel>,
}

impl LabelLog {
    pub fn open(path: &Path) -> Result<Self> {
        let entries = read_log(path)?;
        let state = replay(&entries)?;
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { path: path.to_path_buf(), file, entries, state })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn entries(&self) -> &[LogEntry] {
        &self.entries
    }

    pub fn state(&self) -> &BTreeMap<TileKey, TumorLabel> {
        &self.state
    }

    pub fn label_of(&self, key: &TileKey) -> Option<TumorLabel> {
        self.state.get(key).copied()
    }

    fn write(&mut self, entry: LogEntry) -> Result<()> {
        let mut line = serde_json::to_vec(&entry)?;
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.flush()?;
        self.file.sync_data()?;
        self.entries.push(entry);
        self.state = replay(&self.entries)?;
        Ok(())
    }

    pub fn append_label(&mut self, record: LabelRecord) -> Result<u64> {
        let seq = self.entries.len() as u64;
        self.write(LogEntry::Label { seq, record })?;
        Ok(seq)
    }

    /// Cancels the annotator's most recent live label and returns it.
    pub fn undo_last(&mut self, annotator: &str, timestamp: u64) -> Result<LabelRecord> {
        let live = live_labels(&self.entries)?;
        let (target, record) = live
            .iter()
            .rev()
            .find(|(_, r)| r.annotator == annotator)
            .map(|(s, r)| (*s, (*r).clone()))
            .ok_or_else(|| Error::NothingToUndo(annotator.to_string()))?;
        let seq = self.entries.len() as u64;
        let undo = UndoRecord { undo: true, annotator: annotator.to_string(), target, timestamp };
        self.write(LogEntry::Undo { seq, record: undo })?;
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(x: u32, label: TumorLabel, who: &str) -> LabelRecord {
        LabelRecord { slide_id: "s1".into(), grid_x: x, grid_y: 0, label, annotator: who.into(), timestamp: 1 }
    }

    #[test]
    fn last_write_wins() {
        let dir = tempfile::tempdir().unwrap();
        let mut log = LabelLog::open(&dir.path().join(LOG_FILE)).unwrap();
        log.append_label(rec(0, TumorLabel::Tumor, "a")).unwrap();
        log.append_label(rec(0, TumorLabel::NonTumor, "a")).unwrap();
        assert_eq!(log.label_of(&("s1".into(), 0, 0)), Some(TumorLabel::NonTumor));
    }

    #[test]
    fn undo_reverts_and_survives_restart() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(LOG_FILE);
        let mut log = LabelLog::open(&path).unwrap();
        log.append_label(rec(0, TumorLabel::Tumor, "a")).unwrap();
        log.append_label(rec(1, TumorLabel::Tumor, "b")).unwrap();
        let undone = log.undo_last("a", 2).unwrap();
        assert_eq!(undone.grid_x, 0);
        assert_eq!(log.label_of(&("s1".into(), 0, 0)), None);
        assert!(matches!(log.undo_last("a", 3), Err(Error::NothingToUndo(_))));
        let state = log.state().clone();
        drop(log);
        let reopened = LabelLog::open(&path).unwrap();
        assert_eq!(reopened.state(), &state);
        assert_eq!(reopened.entries().len(), 3);
    }

    #[test]
    fn undo_restores_previous_label() {
        let dir = tempfile::tempdir().unwrap();
        let mut log = LabelLog::open(&dir.path().join(LOG_FILE)).unwrap();
        log.append_label(rec(0, TumorLabel::Tumor, "a")).unwrap();
        log.append_label(rec(0, TumorLabel::NonTumor, "a")).unwrap();
        log.undo_last("a", 5).unwrap();
        assert_eq!(log.label_of(&("s1".into(), 0, 0)), Some(TumorLabel::Tumor));
    }

    #[test]
    fn log_lines_parse_both_kinds() {
        let label = r#"{"seq":0,"slide_id":"s","grid_x":1,"grid_y":2,"label":"tumor","annotator":"a","timestamp":9}"#;
        let undo = r#"{"seq":1,"undo":true,"annotator":"a","target":0,"timestamp":10}"#;
        let entries: Vec<LogEntry> = [label, undo].iter().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert!(matches!(entries[0], LogEntry::Label { .. }));
        assert!(matches!(entries[1], LogEntry::Undo { .. }));
        assert!(replay(&entries).unwrap().is_empty());
    }

    #[test]
    fn export_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let labels = vec![
            TileLabel { slide_id: "a".into(), grid_x: 0, grid_y: 1, label: TumorLabel::Tumor },
            TileLabel { slide_id: "b".into(), grid_x: 3, grid_y: 0, label: TumorLabel::NonTumor },
        ];
        let p = dir.path().join(SNAPSHOT_FILE);
        write_labels(&p, &labels).unwrap();
        assert_eq!(read_labels(&p).unwrap(), labels);
        assert!(export_labels(&[]).unwrap().is_empty());
    }
}

//! Append-only record storage.
//!
//! On disk every session is a directory `sessions/<id>/` holding `meta.json`
//! and `records.jsonl` (one JSON record per line). Uploaded archives live in
//! `glyphs/<id>.mglyph`. A store without a directory keeps everything in
//! memory, which is what simulations use.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exchange::ARCHIVE_EXTENSION;
use crate::staircase::{Answer, StaircaseConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub session_id: String,
    pub glyph_id: String,
    pub sequence_number: u64,
    pub t: u32,
    pub d: f64,
    pub c: f64,
    pub x1: f64,
    pub x2: f64,
    pub is_equal: bool,
    pub presented_at: String,
    pub answer: Answer,
    pub correct: bool,
    pub response_ms: Option<u64>,
}

impl TrialRecord {
    /// One `records.jsonl` line, without the newline.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serialization")
    }
}

/// Serializes records as newline-terminated JSON lines.
pub fn records_to_jsonl(records: &[TrialRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_json_line());
        out.push('\n');
    }
    out
}

/// Parses JSON lines, ignoring blank lines.
pub fn records_from_jsonl(text: &str) -> Result<Vec<TrialRecord>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Active,
    Finished,
    Abandoned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    pub created_at: String,
    pub config: StaircaseConfig,
    pub glyphs: Vec<String>,
    pub status: SessionStatus,
}

impl SessionMeta {
    pub fn total_trials(&self) -> u64 {
        self.glyphs.len() as u64 * self.config.trials_per_glyph as u64
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("unknown session {0:?}")]
    NotFound(String),
    #[error("session {0:?} already exists")]
    Exists(String),
    #[error("session {id:?} is {status:?}")]
    State { id: String, status: SessionStatus },
    #[error("session {id:?} expects record {expected}, got {got}")]
    Sequence { id: String, expected: u64, got: u64 },
    #[error("glyph {glyph:?} is not part of session {id:?} or has no trials left")]
    Glyph { id: String, glyph: String },
    #[error("invalid session id {0:?}")]
    InvalidId(String),
    #[error("{path}: line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Which records a snapshot covers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Filter {
    pub session_id: Option<String>,
    pub glyph_id: Option<String>,
}

impl Filter {
    pub fn all() -> Self {
        Filter::default()
    }

    pub fn session(id: impl Into<String>) -> Self {
        Filter {
            session_id: Some(id.into()),
            glyph_id: None,
        }
    }

    pub fn glyph(mut self, id: impl Into<String>) -> Self {
        self.glyph_id = Some(id.into());
        self
    }

    fn matches(&self, r: &TrialRecord) -> bool {
        self.session_id.as_ref().is_none_or(|s| *s == r.session_id)
            && self.glyph_id.as_ref().is_none_or(|g| *g == r.glyph_id)
    }
}

#[derive(Debug)]
struct SessionLog {
    meta: SessionMeta,
    records: Vec<TrialRecord>,
}

#[derive(Debug, Default)]
struct Index {
    order: Vec<String>,
    sessions: HashMap<String, SessionLog>,
}

/// The response database. Cheap to share behind an `Arc`; each session must
/// have a single writer, readers are unrestricted.
#[derive(Debug)]
pub struct Store {
    root: Option<PathBuf>,
    durable: bool,
    index: RwLock<Index>,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.')
        && !id.starts_with('.')
}

impl Store {
    pub fn in_memory() -> Self {
        Store {
            root: None,
            durable: false,
            index: RwLock::new(Index::default()),
        }
    }

    /// Opens (creating if needed) a store rooted at `data_dir` and loads every
    /// session. A torn final line in a record file is dropped and truncated away.
    pub fn open(data_dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = data_dir.as_ref().to_path_buf();
        fs::create_dir_all(root.join("sessions"))?;
        fs::create_dir_all(root.join("glyphs"))?;
        let mut logs = Vec::new();
        for entry in fs::read_dir(root.join("sessions"))? {
            let dir = entry?.path();
            let meta_path = dir.join("meta.json");
            if !meta_path.is_file() {
                continue;
            }
            let meta: SessionMeta = serde_json::from_str(&fs::read_to_string(&meta_path)?)
                .map_err(|e| StoreError::Corrupt {
                    path: meta_path.clone(),
                    line: e.line(),
                    message: e.to_string(),
                })?;
            let records = load_records(&dir.join("records.jsonl"))?;
            logs.push(SessionLog { meta, records });
        }
        logs.sort_by(|a, b| {
            (&a.meta.created_at, &a.meta.session_id).cmp(&(&b.meta.created_at, &b.meta.session_id))
        });
        let mut index = Index::default();
        for log in logs {
            index.order.push(log.meta.session_id.clone());
            index.sessions.insert(log.meta.session_id.clone(), log);
        }
        Ok(Store {
            root: Some(root),
            durable: false,
            index: RwLock::new(index),
        })
    }

    /// Flush every append to stable storage before acknowledging it.
    pub fn durable(mut self, durable: bool) -> Self {
        self.durable = durable;
        self
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    fn session_dir(&self, id: &str) -> Option<PathBuf> {
        self.root.as_ref().map(|r| r.join("sessions").join(id))
    }

    pub fn create_session(&self, meta: SessionMeta) -> Result<(), StoreError> {
        if !valid_id(&meta.session_id) {
            return Err(StoreError::InvalidId(meta.session_id));
        }
        let mut index = self.index.write().expect("store lock");
        if index.sessions.contains_key(&meta.session_id) {
            return Err(StoreError::Exists(meta.session_id));
        }
        if let Some(dir) = self.session_dir(&meta.session_id) {
            fs::create_dir_all(&dir)?;
            write_meta(&dir, &meta, self.durable)?;
            File::create(dir.join("records.jsonl"))?;
        }
        index.order.push(meta.session_id.clone());
        index.sessions.insert(
            meta.session_id.clone(),
            SessionLog {
                meta,
                records: Vec::new(),
            },
        );
        Ok(())
    }

    /// Appends one record. The session becomes finished when its last quota fills.
    pub fn append(&self, record: &TrialRecord) -> Result<(), StoreError> {
        let mut index = self.index.write().expect("store lock");
        let log = index
            .sessions
            .get_mut(&record.session_id)
            .ok_or_else(|| StoreError::NotFound(record.session_id.clone()))?;
        if log.meta.status != SessionStatus::Active {
            return Err(StoreError::State {
                id: record.session_id.clone(),
                status: log.meta.status,
            });
        }
        let expected = log.records.last().map_or(1, |r| r.sequence_number + 1);
        if record.sequence_number != expected {
            return Err(StoreError::Sequence {
                id: record.session_id.clone(),
                expected,
                got: record.sequence_number,
            });
        }
        let quota = log.meta.config.trials_per_glyph as usize;
        let done = |g: &str| log.records.iter().filter(|r| r.glyph_id == g).count();
        if !log.meta.glyphs.contains(&record.glyph_id) || done(&record.glyph_id) >= quota {
            return Err(StoreError::Glyph {
                id: record.session_id.clone(),
                glyph: record.glyph_id.clone(),
            });
        }
        if let Some(dir) = self.session_dir(&record.session_id) {
            let mut line = record.to_json_line();
            line.push('\n');
            let mut f = OpenOptions::new().append(true).open(dir.join("records.jsonl"))?;
            f.write_all(line.as_bytes())?;
            if self.durable {
                f.sync_data()?;
            }
        }
        log.records.push(record.clone());
        if log.records.len() as u64 >= log.meta.total_trials() {
            log.meta.status = SessionStatus::Finished;
            if let Some(dir) = self.session_dir(&record.session_id) {
                write_meta(&dir, &log.meta, self.durable)?;
            }
        }
        Ok(())
    }

    /// Marks an active session abandoned; further appends are refused.
    pub fn abandon(&self, session_id: &str) -> Result<(), StoreError> {
        let mut index = self.index.write().expect("store lock");
        let log = index
            .sessions
            .get_mut(session_id)
            .ok_or_else(|| StoreError::NotFound(session_id.to_string()))?;
        if log.meta.status != SessionStatus::Active {
            return Err(StoreError::State {
                id: session_id.to_string(),
                status: log.meta.status,
            });
        }
        log.meta.status = SessionStatus::Abandoned;
        if let Some(dir) = self.session_dir(session_id) {
            write_meta(&dir, &log.meta, self.durable)?;
        }
        Ok(())
    }

    pub fn meta(&self, session_id: &str) -> Option<SessionMeta> {
        let index = self.index.read().expect("store lock");
        index.sessions.get(session_id).map(|l| l.meta.clone())
    }

    /// Sessions in creation order.
    pub fn sessions(&self) -> Vec<SessionMeta> {
        let index = self.index.read().expect("store lock");
        index
            .order
            .iter()
            .map(|id| index.sessions[id].meta.clone())
            .collect()
    }

    /// A point-in-time copy of the matching records in append order (sessions
    /// in creation order).
    pub fn snapshot(&self, filter: &Filter) -> Vec<TrialRecord> {
        let index = self.index.read().expect("store lock");
        let ids: Vec<&String> = match &filter.session_id {
            Some(id) => index.sessions.get_key_value(id).map(|(k, _)| k).into_iter().collect(),
            None => index.order.iter().collect(),
        };
        ids.into_iter()
            .flat_map(|id| index.sessions[id].records.iter())
            .filter(|r| filter.matches(r))
            .cloned()
            .collect()
    }

    /// Stores uploaded archive bytes under `glyphs/<id>.mglyph`.
    pub fn save_glyph(&self, glyph_id: &str, bytes: &[u8]) -> Result<(), StoreError> {
        if !valid_id(glyph_id) {
            return Err(StoreError::InvalidId(glyph_id.to_string()));
        }
        if let Some(root) = &self.root {
            let path = root.join("glyphs").join(format!("{glyph_id}.{ARCHIVE_EXTENSION}"));
            if !path.exists() {
                write_atomic(&path, bytes, self.durable)?;
            }
        }
        Ok(())
    }

    /// Every stored archive as `(id, bytes)`, sorted by id.
    pub fn load_glyphs(&self) -> Result<Vec<(String, Vec<u8>)>, StoreError> {
        let Some(root) = &self.root else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for entry in fs::read_dir(root.join("glyphs"))? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some(ARCHIVE_EXTENSION) {
                continue;
            }
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.push((stem.to_string(), fs::read(&path)?));
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(out)
    }
}

/// Shared handle used by the service.
pub type SharedStore = Arc<Store>;

fn write_meta(dir: &Path, meta: &SessionMeta, durable: bool) -> Result<(), StoreError> {
    let mut text = serde_json::to_string_pretty(meta).expect("meta serialization");
    text.push('\n');
    write_atomic(&dir.join("meta.json"), text.as_bytes(), durable)
}

fn write_atomic(path: &Path, bytes: &[u8], durable: bool) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        if durable {
            f.sync_all()?;
        }
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn load_records(path: &Path) -> Result<Vec<TrialRecord>, StoreError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut valid_len = 0u64;
    let mut line = String::new();
    let mut number = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line)?;
        if n == 0 {
            break;
        }
        number += 1;
        let complete = line.ends_with('\n');
        match serde_json::from_str::<TrialRecord>(line.trim_end()) {
            Ok(r) if complete => {
                records.push(r);
                valid_len += n as u64;
            }
            // an unterminated or unparsable final line is a torn write
            _ if !complete => break,
            Ok(_) => unreachable!(),
            Err(e) => {
                let mut rest = String::new();
                if reader.read_line(&mut rest)? == 0 {
                    break;
                }
                return Err(StoreError::Corrupt {
                    path: path.to_path_buf(),
                    line: number,
                    message: e.to_string(),
                });
            }
        }
    }
    let len = fs::metadata(path)?.len();
    if len != valid_len {
        OpenOptions::new().write(true).open(path)?.set_len(valid_len)?;
    }
    Ok(records)
}

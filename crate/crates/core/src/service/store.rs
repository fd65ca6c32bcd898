use super::ServiceError;
use crate::emotion::TranscriptEmotionSummary;
use crate::scorer::DimensionScoreSet;
use chrono::{DateTime, Utc};
use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub video_id: String,
    pub scored_at: DateTime<Utc>,
    /// Hex SHA-256 of the transcript text.
    pub transcript_digest: String,
    pub scores: Option<DimensionScoreSet>,
    pub emotion: Option<TranscriptEmotionSummary>,
    pub news_probability: Option<f64>,
}

impl ScoreRecord {
    pub fn validate(&self) -> Result<(), ServiceError> {
        if self.video_id.is_empty() {
            return Err(ServiceError::Store("record without video_id".into()));
        }
        if self.scores.is_none() && self.emotion.is_none() && self.news_probability.is_none() {
            return Err(ServiceError::Store("record holds no analysis result".into()));
        }
        Ok(())
    }
}

pub fn transcript_digest(text: &str) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Default)]
struct Index {
    by_key: HashMap<(String, String), Arc<ScoreRecord>>,
    /// Per video, ascending `scored_at`, ties in write order.
    by_video: HashMap<String, Vec<Arc<ScoreRecord>>>,
    all: Vec<Arc<ScoreRecord>>,
}

impl Index {
    fn add(&mut self, rec: Arc<ScoreRecord>) {
        self.by_key
            .insert((rec.video_id.clone(), rec.transcript_digest.clone()), rec.clone());
        let list = self.by_video.entry(rec.video_id.clone()).or_default();
        let at = list.partition_point(|r| r.scored_at <= rec.scored_at);
        list.insert(at, rec.clone());
        let at = self.all.partition_point(|r| r.scored_at <= rec.scored_at);
        self.all.insert(at, rec);
    }
}

/// Append-only JSON-lines log of score records with an in-memory index
/// keyed by (video id, transcript digest). Writes go through one lock.
pub struct ScoreStore {
    index: RwLock<Index>,
    writer: Mutex<Option<File>>,
    path: Option<PathBuf>,
}

impl ScoreStore {
    pub fn in_memory() -> Self {
        ScoreStore {
            index: RwLock::new(Index::default()),
            writer: Mutex::new(None),
            path: None,
        }
    }

    /// Open or create the log. A torn final line from an interrupted write
    /// is dropped; corruption anywhere else is an error.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let io = |e: std::io::Error| ServiceError::Store(format!("{}: {e}", path.display()));
        let mut index = Index::default();
        let mut good_len = 0u64;
        if path.exists() {
            let mut reader = BufReader::new(File::open(path).map_err(io)?);
            let mut line = String::new();
            let mut n = 0;
            loop {
                line.clear();
                let read = reader.read_line(&mut line).map_err(io)?;
                if read == 0 {
                    break;
                }
                n += 1;
                if !line.ends_with('\n') {
                    tracing::warn!(path = %path.display(), line = n, "dropping torn record");
                    break;
                }
                let rec: ScoreRecord = serde_json::from_str(line.trim_end())
                    .map_err(|e| ServiceError::Store(format!("{}:{n}: {e}", path.display())))?;
                index.add(Arc::new(rec));
                good_len += read as u64;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
        file.set_len(good_len).map_err(io)?;
        Ok(ScoreStore {
            index: RwLock::new(index),
            writer: Mutex::new(Some(file)),
            path: Some(path.to_path_buf()),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, video_id: &str, digest: &str) -> Option<Arc<ScoreRecord>> {
        self.index
            .read()
            .by_key
            .get(&(video_id.to_string(), digest.to_string()))
            .cloned()
    }

    pub fn put(&self, record: ScoreRecord) -> Result<Arc<ScoreRecord>, ServiceError> {
        record.validate()?;
        let mut writer = self.writer.lock();
        if let Some(f) = writer.as_mut() {
            let mut line = serde_json::to_string(&record).map_err(|e| ServiceError::Store(e.to_string()))?;
            line.push('\n');
            f.write_all(line.as_bytes())
                .and_then(|_| f.flush())
                .map_err(|e| ServiceError::Store(e.to_string()))?;
        }
        let rec = Arc::new(record);
        self.index.write().add(rec.clone());
        Ok(rec)
    }

    /// Records of one video (or all videos), oldest first.
    pub fn history(&self, video_id: Option<&str>, offset: usize, limit: usize) -> (Vec<Arc<ScoreRecord>>, usize) {
        let idx = self.index.read();
        let list: &[Arc<ScoreRecord>] = match video_id {
            Some(v) => idx.by_video.get(v).map_or(&[], Vec::as_slice),
            None => &idx.all,
        };
        let page = list.iter().skip(offset).take(limit).cloned().collect();
        (page, list.len())
    }

    pub fn len(&self) -> usize {
        self.index.read().all.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

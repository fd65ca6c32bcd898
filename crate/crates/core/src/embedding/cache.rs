use super::{EmbeddingError, EmbeddingVector};
use crate::nn::EMBEDDING_DIM;
use parking_lot::Mutex;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

/// SHA-256 over `model_id`, a zero byte, then `text`.
pub fn content_hash(model_id: &str, text: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(model_id.as_bytes());
    h.update([0u8]);
    h.update(text.as_bytes());
    h.finalize().into()
}

/// On-disk record: 64 hex digest bytes, i64 unix seconds, 1536 f64, all LE.
pub const RECORD_LEN: usize = 64 + 8 + EMBEDDING_DIM * 8;

#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub vector: EmbeddingVector,
    pub created_at: i64,
}

struct Inner {
    index: HashMap<[u8; 32], CacheEntry>,
    file: Option<File>,
}

/// Content-addressed embedding cache, optionally persisted to an append-only
/// file. Later records for the same digest win on reload.
pub struct EmbeddingCache {
    path: Option<PathBuf>,
    inner: Mutex<Inner>,
}

impl EmbeddingCache {
    pub fn in_memory() -> Self {
        EmbeddingCache {
            path: None,
            inner: Mutex::new(Inner {
                index: HashMap::new(),
                file: None,
            }),
        }
    }

    /// Open or create the cache file and index its records. A torn final
    /// record (from a crash mid-append) is dropped and the file truncated.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, EmbeddingError> {
        let path = path.as_ref().to_path_buf();
        let io = |e: std::io::Error| EmbeddingError::Cache(format!("{}: {e}", path.display()));
        let mut bytes = Vec::new();
        if path.exists() {
            File::open(&path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(io)?;
        }
        let whole = bytes.len() / RECORD_LEN * RECORD_LEN;
        let mut index = HashMap::new();
        for rec in bytes[..whole].chunks_exact(RECORD_LEN) {
            let (digest, entry) = decode_record(rec)?;
            index.insert(digest, entry);
        }
        let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        if whole != bytes.len() {
            tracing::warn!(path = %path.display(), dropped = bytes.len() - whole, "dropping torn cache record");
            file.set_len(whole as u64).map_err(io)?;
        }
        Ok(EmbeddingCache {
            path: Some(path),
            inner: Mutex::new(Inner {
                index,
                file: Some(file),
            }),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, digest: &[u8; 32]) -> Option<CacheEntry> {
        self.inner.lock().index.get(digest).cloned()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Store and, when file-backed, append one record. Re-inserting an existing
    /// digest is a no-op: identical content maps to identical vectors.
    pub fn insert(&self, digest: [u8; 32], vector: EmbeddingVector) -> Result<(), EmbeddingError> {
        let mut inner = self.inner.lock();
        if inner.index.contains_key(&digest) {
            return Ok(());
        }
        let created_at = chrono::Utc::now().timestamp();
        if let Some(file) = inner.file.as_mut() {
            let rec = encode_record(&digest, created_at, &vector);
            file.write_all(&rec)
                .and_then(|_| file.flush())
                .map_err(|e| EmbeddingError::Cache(e.to_string()))?;
        }
        inner.index.insert(digest, CacheEntry { vector, created_at });
        Ok(())
    }
}

fn encode_record(digest: &[u8; 32], created_at: i64, v: &EmbeddingVector) -> Vec<u8> {
    let mut out = Vec::with_capacity(RECORD_LEN);
    out.extend_from_slice(hex::encode(digest).as_bytes());
    out.extend_from_slice(&created_at.to_le_bytes());
    for x in v.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

fn decode_record(rec: &[u8]) -> Result<([u8; 32], CacheEntry), EmbeddingError> {
    let mut digest = [0u8; 32];
    hex::decode_to_slice(&rec[..64], &mut digest)
        .map_err(|e| EmbeddingError::Cache(format!("bad digest in cache record: {e}")))?;
    let created_at = i64::from_le_bytes(rec[64..72].try_into().unwrap());
    let values = rec[72..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        .collect();
    let vector = EmbeddingVector::new(values).map_err(|e| EmbeddingError::Cache(e.to_string()))?;
    Ok((digest, CacheEntry { vector, created_at }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::stub_embed;

    #[test]
    fn digest_separates_model_and_text() {
        assert_ne!(content_hash("m", "ab"), content_hash("ma", "b"));
        assert_eq!(
            hex::encode(content_hash("", "")),
            // sha256 of a single zero byte
            "6e340b9cffb37a989ca544e6bb780a2c78901d3fb33738768511a30617afa01d"
        );
    }

    #[test]
    fn persists_across_reopen_and_drops_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.bin");
        let (a, b) = (content_hash("m", "a"), content_hash("m", "b"));
        {
            let c = EmbeddingCache::open(&path).unwrap();
            c.insert(a, stub_embed("a")).unwrap();
            c.insert(b, stub_embed("b")).unwrap();
            c.insert(b, stub_embed("b")).unwrap();
        }
        assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, 2 * RECORD_LEN);
        // simulate a crash mid-append
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(&[1, 2, 3]).unwrap();
        drop(f);
        let c = EmbeddingCache::open(&path).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.get(&a).unwrap().vector, stub_embed("a"));
        assert_eq!(std::fs::metadata(&path).unwrap().len() as usize, 2 * RECORD_LEN);
    }
}

use super::CorpusError;
use crate::label::PeaceLabel;
use crate::nn::TrainExample;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub country: String,
    pub label: PeaceLabel,
    pub embedding: Vec<f64>,
}

impl LabeledExample {
    pub fn to_train_example(&self) -> TrainExample {
        TrainExample::new(self.embedding.clone(), self.label)
    }
}

pub const DATASET_MAGIC: &[u8; 4] = b"PLDS";
pub const DATASET_VERSION: u16 = 1;

// Layout, little endian:
//   magic[4] version:u16 count:u32 dim:u32
//   count x { id_len:u16 id country_len:u16 country label:u8 dim x f64 }

fn put_str(out: &mut Vec<u8>, s: &str) -> Result<(), CorpusError> {
    let len = u16::try_from(s.len())
        .map_err(|_| CorpusError::InvalidConfig(format!("string too long for dataset: {} bytes", s.len())))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

pub fn encode_dataset(examples: &[LabeledExample]) -> Result<Vec<u8>, CorpusError> {
    let dim = examples.first().map_or(0, |e| e.embedding.len());
    if let Some(bad) = examples.iter().find(|e| e.embedding.len() != dim) {
        return Err(CorpusError::InvalidConfig(format!(
            "example {} has dimension {}, expected {dim}",
            bad.id,
            bad.embedding.len()
        )));
    }
    let mut out = Vec::with_capacity(14 + examples.len() * (dim * 8 + 32));
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    out.extend_from_slice(&(examples.len() as u32).to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    for e in examples {
        put_str(&mut out, &e.id)?;
        put_str(&mut out, &e.country)?;
        out.push(e.label.bit());
        for v in &e.embedding {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a>(&'a [u8]);

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CorpusError> {
        if self.0.len() < n {
            return Err(CorpusError::CorruptDataset("truncated".into()));
        }
        let (head, tail) = self.0.split_at(n);
        self.0 = tail;
        Ok(head)
    }
    fn u16(&mut self) -> Result<u16, CorpusError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<u32, CorpusError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn string(&mut self) -> Result<String, CorpusError> {
        let n = self.u16()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| CorpusError::CorruptDataset(e.to_string()))
    }
}

pub fn decode_dataset(bytes: &[u8]) -> Result<Vec<LabeledExample>, CorpusError> {
    let mut c = Cursor(bytes);
    if c.take(4)? != DATASET_MAGIC {
        return Err(CorpusError::CorruptDataset("bad magic".into()));
    }
    let version = c.u16()?;
    if version != DATASET_VERSION {
        return Err(CorpusError::CorruptDataset(format!("unsupported version {version}")));
    }
    let count = c.u32()? as usize;
    let dim = c.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(bytes.len() / 8 + 1));
    for _ in 0..count {
        let id = c.string()?;
        let country = c.string()?;
        let label = PeaceLabel::from_bit(c.take(1)?[0])
            .ok_or_else(|| CorpusError::CorruptDataset(format!("bad label for {id}")))?;
        let embedding = c
            .take(dim * 8)?
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        out.push(LabeledExample {
            id,
            country,
            label,
            embedding,
        });
    }
    if !c.0.is_empty() {
        return Err(CorpusError::CorruptDataset(format!("{} trailing bytes", c.0.len())));
    }
    Ok(out)
}

pub fn write_dataset(path: impl AsRef<Path>, examples: &[LabeledExample]) -> Result<(), CorpusError> {
    let bytes = encode_dataset(examples)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<LabeledExample>, CorpusError> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(|source| CorpusError::Unreadable {
            path: path.display().to_string(),
            source,
        })?
        .read_to_end(&mut bytes)?;
    decode_dataset(&bytes)
}

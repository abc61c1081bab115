//! Line-delimited JSON persistence between pipeline stages.
//!
//! Every output file can carry the checksum of the run manifest it was
//! produced under as a header line; readers skip and surface it.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("i/o on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Header line tying an output file to the manifest that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestStamp {
    pub manifest_checksum: String,
}

fn io_err(path: &Path, source: std::io::Error) -> JsonlError {
    JsonlError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn write_jsonl<'a, T: Serialize + 'a>(
    path: &Path,
    stamp: Option<&ManifestStamp>,
    records: impl IntoIterator<Item = &'a T>,
) -> Result<(), JsonlError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    if let Some(stamp) = stamp {
        serde_json::to_writer(&mut w, stamp).map_err(|e| io_err(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    for record in records {
        serde_json::to_writer(&mut w, record).map_err(|e| io_err(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(
    path: &Path,
) -> Result<(Option<ManifestStamp>, Vec<T>), JsonlError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut stamp = None;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if i == 0 {
            if let Ok(s) = serde_json::from_str::<ManifestStamp>(trimmed) {
                stamp = Some(s);
                continue;
            }
        }
        let record = serde_json::from_str(trimmed).map_err(|source| JsonlError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            source,
        })?;
        records.push(record);
    }
    Ok((stamp, records))
}

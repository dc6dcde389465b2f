//! Append-only JSONL persistence for records and shot counts.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{channel, Sender};
use std::thread::JoinHandle;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::Counts;
use crate::zne::QvRecord;

/// Records are flushed to disk in groups of this size.
pub const FLUSH_INTERVAL: usize = 250;

/// Counts of one simulated (or externally executed) circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsEntry {
    pub circuit_id: usize,
    pub lambda: f64,
    pub instance: usize,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitOutput {
    pub record: QvRecord,
    pub counts: Vec<CountsEntry>,
}

#[derive(Debug, Clone)]
pub struct RunPaths {
    pub dir: PathBuf,
}

impl RunPaths {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        RunPaths { dir: dir.into() }
    }
    pub fn records(&self) -> PathBuf {
        self.dir.join("records.jsonl")
    }
    pub fn counts(&self) -> PathBuf {
        self.dir.join("counts.jsonl")
    }
    pub fn config(&self) -> PathBuf {
        self.dir.join("config.json")
    }
    pub fn summary(&self) -> PathBuf {
        self.dir.join("summary.json")
    }
    pub fn timing(&self) -> PathBuf {
        self.dir.join("timing.json")
    }
}

pub fn to_json_line<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("record serializes")
}

/// Reads every line; any malformed line is an error.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| Error::json(format!("{} line {}", path.display(), i + 1), e))?,
        );
    }
    Ok(out)
}

/// Reads the parsable lines of a possibly truncated log; a missing file is empty.
pub fn read_jsonl_lenient<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let Ok(line) = line else { break };
        if let Ok(v) = serde_json::from_str(&line) {
            out.push(v);
        }
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        writeln!(w, "{}", to_json_line(item)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Single writer thread that owns both logs.
pub struct LogWriter {
    sender: Option<Sender<CircuitOutput>>,
    handle: Option<JoinHandle<Result<()>>>,
}

impl LogWriter {
    pub fn open(paths: &RunPaths) -> Result<Self> {
        let open = |p: PathBuf| -> Result<(PathBuf, BufWriter<File>)> {
            let f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&p)
                .map_err(|e| Error::io(&p, e))?;
            Ok((p, BufWriter::new(f)))
        };
        let (rp, mut records) = open(paths.records())?;
        let (cp, mut counts) = open(paths.counts())?;
        let (tx, rx) = channel::<CircuitOutput>();
        let handle = std::thread::spawn(move || -> Result<()> {
            let mut pending = 0usize;
            for out in rx {
                for c in &out.counts {
                    writeln!(counts, "{}", to_json_line(c)).map_err(|e| Error::io(&cp, e))?;
                }
                writeln!(records, "{}", to_json_line(&out.record)).map_err(|e| Error::io(&rp, e))?;
                pending += 1;
                if pending == FLUSH_INTERVAL {
                    counts.flush().map_err(|e| Error::io(&cp, e))?;
                    records.flush().map_err(|e| Error::io(&rp, e))?;
                    pending = 0;
                }
            }
            counts.flush().map_err(|e| Error::io(&cp, e))?;
            records.flush().map_err(|e| Error::io(&rp, e))
        });
        Ok(LogWriter {
            sender: Some(tx),
            handle: Some(handle),
        })
    }

    pub fn sender(&self) -> Sender<CircuitOutput> {
        self.sender.clone().expect("writer open")
    }

    /// Flushes and joins the writer thread.
    pub fn finish(mut self) -> Result<()> {
        self.sender.take();
        match self.handle.take() {
            Some(h) => h.join().unwrap_or_else(|_| Err(Error::InvalidArgument("log writer panicked".into()))),
            None => Ok(()),
        }
    }
}

impl Drop for LogWriter {
    fn drop(&mut self) {
        self.sender.take();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

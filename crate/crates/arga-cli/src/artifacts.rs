//! Artifact plumbing: atomic writes, checksums, TSV codecs, and the run
//! manifest that seals every command.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use arga_core::train::Hyperparams;
use arga_core::{Error, Mat, Result};

pub fn io_err(op: &str, path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("cannot {op} {}: {e}", path.display()))
}

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| io_err("read", path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes through a temporary sibling and renames, so an interrupted run
/// never leaves a truncated file under the final name.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| io_err("write", &tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err("rename into", path, e))
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::Config(format!("cannot encode JSON: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// The unified metric report: link and clustering commands fill their own
/// fields and leave the rest null.
#[derive(Serialize)]
pub struct MetricsReport<'a> {
    pub dataset: &'a str,
    pub variant: String,
    pub seed: u64,
    pub auc: Option<f64>,
    pub ap: Option<f64>,
    pub acc: Option<f64>,
    pub nmi: Option<f64>,
    pub f1: Option<f64>,
    pub precision: Option<f64>,
    pub ari: Option<f64>,
    pub config_echo: Option<&'a Hyperparams>,
}

impl<'a> MetricsReport<'a> {
    pub fn empty(dataset: &'a str, variant: String, seed: u64) -> Self {
        MetricsReport {
            dataset,
            variant,
            seed,
            auc: None,
            ap: None,
            acc: None,
            nmi: None,
            f1: None,
            precision: None,
            ari: None,
            config_echo: None,
        }
    }
}

#[derive(Serialize)]
pub struct ArtifactRecord {
    pub name: String,
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct DatasetEcho {
    pub name: String,
    pub nodes: String,
    pub edges: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    dataset: Option<&'a DatasetEcho>,
    config_echo: Option<&'a Hyperparams>,
    seeds: &'a [u64],
    outputs: &'a [ArtifactRecord],
    duration_seconds: f64,
}

/// Collects everything a command writes under one directory; `finish` seals
/// the run with manifest.json listing each artifact's checksum.
pub struct RunWriter {
    dir: PathBuf,
    outputs: Vec<ArtifactRecord>,
    started: Instant,
}

impl RunWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| io_err("create directory", dir, e))?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// `name` is relative to the run directory and may contain subdirectories
    /// (per-seed runs).
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| io_err("create directory", parent, e))?;
        }
        atomic_write(&path, bytes)?;
        self.outputs.push(ArtifactRecord {
            name: name.to_string(),
            path: path.display().to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Records a file that was written directly to `self.dir().join(name)`.
    pub fn record(&mut self, name: &str) -> Result<()> {
        let path = self.dir.join(name);
        let bytes = read_bytes(&path)?;
        self.outputs.push(ArtifactRecord {
            name: name.to_string(),
            path: path.display().to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(&bytes),
        });
        Ok(())
    }

    pub fn finish(
        self,
        command: &str,
        dataset: Option<&DatasetEcho>,
        config_echo: Option<&Hyperparams>,
        seeds: &[u64],
    ) -> Result<()> {
        let manifest = Manifest {
            command,
            dataset,
            config_echo,
            seeds,
            outputs: &self.outputs,
            duration_seconds: self.started.elapsed().as_secs_f64(),
        };
        atomic_write(&self.dir.join("manifest.json"), &to_json_bytes(&manifest)?)
    }
}

/// `node_id<TAB>v1..vd`, one row per node, 17 significant digits per value.
pub fn embedding_tsv(node_ids: &[String], z: &Mat) -> String {
    let mut out = String::new();
    for (i, id) in node_ids.iter().enumerate() {
        out.push_str(id);
        for v in z.row(i) {
            out.push('\t');
            out.push_str(&format!("{v:.16e}"));
        }
        out.push('\n');
    }
    out
}

pub fn read_embedding_tsv(path: &Path) -> Result<(Vec<String>, Mat)> {
    let name = path.display().to_string();
    let text = String::from_utf8(read_bytes(path)?)
        .map_err(|e| Error::Config(format!("{name} is not UTF-8: {e}")))?;
    let mut ids = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = lineno + 1;
        let mut fields = line.split('\t');
        let id = fields.next().unwrap_or_default();
        let row: Vec<f64> = fields
            .map(|raw| {
                raw.parse().map_err(|_| Error::Format {
                    path: name.clone(),
                    line: lineno,
                    msg: format!("unparseable value {raw:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if row.is_empty() {
            return Err(Error::Format {
                path: name.clone(),
                line: lineno,
                msg: "row has an id but no values".into(),
            });
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Format {
                    path: name.clone(),
                    line: lineno,
                    msg: format!(
                        "ragged row: {} values where previous rows had {}",
                        row.len(),
                        first.len()
                    ),
                });
            }
        }
        ids.push(id.to_string());
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Config(format!("{name} holds no embedding rows")));
    }
    Ok((ids, Mat::from_rows(&rows)?))
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

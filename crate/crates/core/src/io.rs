//! CSV and JSON persistence with metadata sidecars.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleStats;
use crate::spectrum::{ModeTarget, Selector, TargetKind};
use crate::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Flat row of the ensemble table. The first ten columns are the stable
/// interchange format; the rest carry what the analysis stages need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub n_qubits: usize,
    pub disorder_w: f64,
    pub target_kind: String,
    /// Empty for band-edge targets.
    pub target_k: Option<f64>,
    pub selector: String,
    pub n_real: u64,
    pub gamma_typ: f64,
    pub gamma_avg: f64,
    pub ln_gamma_std: f64,
    pub master_seed: u64,
    pub ln_gamma_mean: f64,
    pub xi_phi_typ: f64,
    pub n_failed: u64,
    pub phi: f64,
    pub gamma: f64,
}

impl From<&EnsembleStats> for EnsembleRecord {
    fn from(s: &EnsembleStats) -> Self {
        let target_k = match s.target.kind {
            TargetKind::FixedK(k) => Some(k),
            _ => None,
        };
        EnsembleRecord {
            n_qubits: s.n_qubits,
            disorder_w: s.disorder_w,
            target_kind: s.target.kind_str().to_string(),
            target_k,
            selector: s.target.selector.as_str().to_string(),
            n_real: s.n_realizations,
            gamma_typ: s.gamma_typ,
            gamma_avg: s.gamma_avg,
            ln_gamma_std: s.ln_gamma_std,
            master_seed: s.master_seed,
            ln_gamma_mean: s.ln_gamma_mean,
            xi_phi_typ: s.xi_phi_typ,
            n_failed: s.n_failed,
            phi: s.phi,
            gamma: s.gamma,
        }
    }
}

impl EnsembleRecord {
    pub fn target(&self) -> Result<ModeTarget> {
        let kind = match (self.target_kind.as_str(), self.target_k) {
            ("band_edge_low", _) => TargetKind::BandEdgeLow,
            ("band_edge_high", _) => TargetKind::BandEdgeHigh,
            ("fixed_k", Some(k)) => TargetKind::FixedK(k),
            (other, k) => return Err(Error::Data(format!("unknown target {other:?} (k = {k:?})"))),
        };
        let selector: Selector = self.selector.parse()?;
        Ok(ModeTarget { kind, selector })
    }
}

/// Sidecar written next to every data file as `<file>.meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub artifact: String,
    pub version: String,
    pub command: String,
    /// Hex SHA-256 of the canonical resolved configuration.
    pub config_hash: String,
    pub master_seed: u64,
    pub rows: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

impl Metadata {
    pub fn new(command: &str, config_hash: &str, master_seed: u64) -> Self {
        Metadata {
            artifact: "subradiance".into(),
            version: VERSION.into(),
            command: command.into(),
            config_hash: config_hash.into(),
            master_seed,
            rows: 0,
            config: None,
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes a CSV from explicit headers and string cells.
pub fn write_table(path: &Path, headers: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(headers)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(open(path)?)?)
}

/// CSV plus its metadata sidecar.
pub fn write_csv_with_meta<T: Serialize>(path: &Path, rows: &[T], meta: &Metadata) -> Result<()> {
    write_csv(path, rows)?;
    write_json(
        &sidecar_path(path),
        &Metadata {
            rows: rows.len(),
            ..meta.clone()
        },
    )
}

pub fn write_table_with_meta(path: &Path, headers: &[&str], rows: &[Vec<String>], meta: &Metadata) -> Result<()> {
    write_table(path, headers, rows)?;
    write_json(
        &sidecar_path(path),
        &Metadata {
            rows: rows.len(),
            ..meta.clone()
        },
    )
}

/// JSON document plus its metadata sidecar.
pub fn write_json_with_meta<T: Serialize + ?Sized>(path: &Path, value: &T, meta: &Metadata) -> Result<()> {
    write_json(path, value)?;
    write_json(&sidecar_path(path), meta)
}

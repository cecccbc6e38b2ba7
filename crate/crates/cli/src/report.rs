//! CSV/JSON report emission and run manifests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use parisian_core::mc_engine::ComparisonRow;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// A homogeneous report row with a fixed CSV header.
pub trait Row: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

fn render<R: Row>(rows: &[R], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            let fail = |e: csv::Error| CliError::Usage(format!("csv encoding failed: {e}"));
            w.write_record(R::HEADER).map_err(fail)?;
            for r in rows {
                w.write_record(r.cells()).map_err(fail)?;
            }
            w.into_inner().map_err(|e| CliError::Usage(format!("csv encoding failed: {e}")))
        }
        Format::Json => {
            let mut out = serde_json::to_vec_pretty(rows).map_err(|e| CliError::Usage(format!("json encoding failed: {e}")))?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

/// Writes `rows` to `path`, or to stdout when `path` is `None`.
pub fn write_report<R: Row>(rows: &[R], format: Format, path: Option<&Path>) -> Result<()> {
    let bytes = render(rows, format)?;
    match path {
        Some(p) => write_file(p, &bytes),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(&bytes)
                .and_then(|_| lock.flush())
                .map_err(|e| CliError::io("<stdout>", e))
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let f = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn read_json_rows<R: Row>(path: &Path) -> Result<Vec<R>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub configuration: serde_json::Value,
    pub master_seed: Option<u64>,
    pub replicates: Option<u64>,
    pub workers: Option<usize>,
    pub grid: Option<serde_json::Value>,
    pub wall_seconds: f64,
    pub version: String,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn manifest_path(out: &Path) -> PathBuf {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }

    /// Digests `out` and writes the manifest next to it.
    pub fn write_for(mut self, out: &Path) -> Result<PathBuf> {
        let bytes = std::fs::read(out).map_err(|e| CliError::io(out, e))?;
        self.outputs.push(OutputDigest {
            path: out.to_path_buf(),
            sha256: sha256_hex(&bytes),
        });
        let path = Self::manifest_path(out);
        let mut text = serde_json::to_vec_pretty(&self).map_err(|e| CliError::Usage(format!("json encoding failed: {e}")))?;
        text.push(b'\n');
        write_file(&path, &text)?;
        Ok(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRow {
    pub t: f64,
    pub value: f64,
}

impl Row for PathRow {
    const HEADER: &'static [&'static str] = &["t", "value"];
    fn cells(&self) -> Vec<String> {
        vec![fmt_f64(self.t), fmt_f64(self.value)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub sup_inf: f64,
    pub threshold: Option<f64>,
    pub event: Option<bool>,
    pub window_len: usize,
    pub rounding_slack: f64,
}

impl Row for EvalRow {
    const HEADER: &'static [&'static str] = &["sup_inf", "threshold", "event", "window_len", "rounding_slack"];
    fn cells(&self) -> Vec<String> {
        vec![
            fmt_f64(self.sup_inf),
            fmt_opt(self.threshold),
            self.event.map(|e| e.to_string()).unwrap_or_default(),
            self.window_len.to_string(),
            fmt_f64(self.rounding_slack),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeRow {
    pub t_star: f64,
    pub kind: String,
    pub sigma_star: f64,
    pub a_minus: f64,
    pub gamma_minus: f64,
    pub a_plus: f64,
    pub gamma_plus: f64,
    pub alpha: f64,
    pub d_corr: f64,
    pub nu: f64,
    pub zeta: f64,
    pub branch: String,
}

impl Row for AnalyzeRow {
    const HEADER: &'static [&'static str] = &[
        "t_star",
        "kind",
        "sigma_star",
        "a_minus",
        "gamma_minus",
        "a_plus",
        "gamma_plus",
        "alpha",
        "d_corr",
        "nu",
        "zeta",
        "branch",
    ];
    fn cells(&self) -> Vec<String> {
        vec![
            fmt_f64(self.t_star),
            self.kind.clone(),
            fmt_f64(self.sigma_star),
            fmt_f64(self.a_minus),
            fmt_f64(self.gamma_minus),
            fmt_f64(self.a_plus),
            fmt_f64(self.gamma_plus),
            fmt_f64(self.alpha),
            fmt_f64(self.d_corr),
            fmt_f64(self.nu),
            fmt_f64(self.zeta),
            self.branch.clone(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub n: Option<f64>,
    pub u: f64,
    pub value: f64,
    pub log_value: f64,
    pub prefactor: f64,
    pub power: f64,
    pub branch: String,
    pub formula: String,
}

impl Row for AsymptoticRow {
    const HEADER: &'static [&'static str] = &["n", "u", "value", "log_value", "prefactor", "power", "branch", "formula"];
    fn cells(&self) -> Vec<String> {
        vec![
            fmt_opt(self.n),
            fmt_f64(self.u),
            fmt_f64(self.value),
            fmt_f64(self.log_value),
            fmt_f64(self.prefactor),
            fmt_f64(self.power),
            self.branch.clone(),
            self.formula.clone(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantRow {
    pub alpha: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub lambda: f64,
    pub grid_step: f64,
    pub convention: String,
    pub normalization: String,
    pub value: f64,
    pub stderr: f64,
    pub replicates: u64,
    pub seed: u64,
}

impl Row for ConstantRow {
    const HEADER: &'static [&'static str] = &[
        "alpha",
        "T",
        "lambda",
        "grid_step",
        "convention",
        "normalization",
        "value",
        "stderr",
        "replicates",
        "seed",
    ];
    fn cells(&self) -> Vec<String> {
        vec![
            fmt_f64(self.alpha),
            fmt_f64(self.t),
            fmt_f64(self.lambda),
            fmt_f64(self.grid_step),
            self.convention.clone(),
            self.normalization.clone(),
            fmt_f64(self.value),
            fmt_f64(self.stderr),
            self.replicates.to_string(),
            self.seed.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinRow {
    pub u: f64,
    pub hits: u64,
    pub replicates: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub dt: f64,
    pub grid_start: f64,
    pub grid_end: f64,
    pub window_len: usize,
    pub t_u: f64,
    pub delta_minus: Option<f64>,
    pub delta_plus: Option<f64>,
    pub seed: u64,
}

impl Row for RuinRow {
    const HEADER: &'static [&'static str] = &[
        "u",
        "hits",
        "replicates",
        "p_hat",
        "ci_lo",
        "ci_hi",
        "dt",
        "grid_start",
        "grid_end",
        "window_len",
        "t_u",
        "delta_minus",
        "delta_plus",
        "seed",
    ];
    fn cells(&self) -> Vec<String> {
        vec![
            fmt_f64(self.u),
            self.hits.to_string(),
            self.replicates.to_string(),
            fmt_f64(self.p_hat),
            fmt_f64(self.ci_lo),
            fmt_f64(self.ci_hi),
            fmt_f64(self.dt),
            fmt_f64(self.grid_start),
            fmt_f64(self.grid_end),
            self.window_len.to_string(),
            fmt_f64(self.t_u),
            fmt_opt(self.delta_minus),
            fmt_opt(self.delta_plus),
            self.seed.to_string(),
        ]
    }
}

impl Row for ComparisonRow {
    const HEADER: &'static [&'static str] = &["u", "p_mc", "ci_lo", "ci_hi", "p_asym", "ratio", "branch", "seconds"];
    fn cells(&self) -> Vec<String> {
        vec![
            fmt_f64(self.u),
            fmt_f64(self.p_mc),
            fmt_f64(self.ci_lo),
            fmt_f64(self.ci_hi),
            fmt_f64(self.p_asym),
            fmt_f64(self.ratio),
            self.branch.as_str().to_string(),
            fmt_f64(self.seconds),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 6.02e23, -0.0, 2.5e-7] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        let bytes = render::<ComparisonRow>(&[], Format::Csv).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "u,p_mc,ci_lo,ci_hi,p_asym,ratio,branch,seconds\n");
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(
            RunManifest::manifest_path(Path::new("out/run.csv")),
            PathBuf::from("out/run.csv.manifest.json")
        );
    }
}

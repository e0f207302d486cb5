//! Artifacts of a run: the JSON report, `sweep.csv`, extra tables and a
//! MANIFEST with content hashes. Nothing time- or host-dependent is written.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::experiments::Outcome;
use crate::spec::ExperimentSpec;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "GRADLAB_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";
pub const MANIFEST: &str = "MANIFEST";
pub const SWEEP_CSV: &str = "sweep.csv";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// `explicit` wins; otherwise `$GRADLAB_OUTPUT_ROOT` (or `runs`) joined with
/// the spec's `output` entry (or its name). Absolute `output` entries are kept.
pub fn output_dir(spec: &ExperimentSpec, explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT));
    root.join(spec.output.as_deref().unwrap_or(&spec.name))
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> io::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

/// Inputs recorded in the MANIFEST.
pub struct RunInputs<'a> {
    pub spec: &'a ExperimentSpec,
    pub spec_file: &'a str,
    pub spec_text: &'a str,
    pub overrides: &'a [String],
}

/// Writes every artifact and returns `(file, sha256)` in MANIFEST order.
pub fn write_artifacts(dir: &Path, inputs: &RunInputs, outcome: &Outcome) -> io::Result<Vec<(String, String)>> {
    fs::create_dir_all(dir)?;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut json = serde_json::to_vec_pretty(&outcome.to_json()).map_err(io::Error::other)?;
    json.push(b'\n');
    files.push((outcome.kind.report_file().to_string(), json));
    let (header, rows) = outcome.sweep_table();
    files.push((SWEEP_CSV.to_string(), csv_bytes(&header, &rows)?));
    for t in &outcome.tables {
        files.push((t.file.to_string(), csv_bytes(&t.header, &t.rows)?));
    }
    let mut listed = Vec::with_capacity(files.len());
    for (name, bytes) in &files {
        fs::write(dir.join(name), bytes)?;
        listed.push((name.clone(), sha256_hex(bytes)));
    }

    let spec = inputs.spec;
    let mut m = String::new();
    let _ = writeln!(m, "tool {}", crate::TOOL);
    let _ = writeln!(m, "experiment {}", spec.experiment);
    let _ = writeln!(m, "name {}", spec.name);
    let _ = writeln!(m, "spec {}", inputs.spec_file);
    let _ = writeln!(m, "spec_sha256 {}", sha256_hex(inputs.spec_text.as_bytes()));
    let _ = writeln!(m, "seed {}", spec.seed);
    if spec.grid.is_some() {
        let _ = writeln!(m, "h {:e}", spec.h());
    }
    let _ = writeln!(m, "entries {}", outcome.runs.len());
    for o in inputs.overrides {
        let _ = writeln!(m, "override {o}");
    }
    let _ = writeln!(m, "pass {}", outcome.pass());
    for (name, hash) in &listed {
        let _ = writeln!(m, "output {name} {hash}");
    }
    fs::write(dir.join(MANIFEST), m)?;
    Ok(listed)
}

#[derive(Debug)]
pub struct ReportSummary {
    pub report_file: PathBuf,
    pub json: Value,
    /// Files whose hash no longer matches the MANIFEST.
    pub modified: Vec<String>,
}

impl ReportSummary {
    pub fn pass(&self) -> bool {
        self.json["pass"].as_bool().unwrap_or(false) && self.modified.is_empty()
    }
}

/// Reads a run directory back.
pub fn read_report(dir: &Path) -> io::Result<ReportSummary> {
    let manifest = fs::read_to_string(dir.join(MANIFEST))
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", dir.join(MANIFEST).display())))?;
    let mut report_file = None;
    let mut modified = Vec::new();
    for line in manifest.lines() {
        let mut parts = line.split_whitespace();
        if parts.next() != Some("output") {
            continue;
        }
        let (Some(name), Some(hash)) = (parts.next(), parts.next()) else {
            return Err(io::Error::new(io::ErrorKind::InvalidData, format!("malformed MANIFEST line '{line}'")));
        };
        let path = dir.join(name);
        match fs::read(&path) {
            Ok(bytes) if sha256_hex(&bytes) == hash => {}
            _ => modified.push(name.to_string()),
        }
        if name.ends_with("_report.json") {
            report_file = Some(path);
        }
    }
    let report_file =
        report_file.ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, "MANIFEST lists no report"))?;
    let json: Value = serde_json::from_slice(&fs::read(&report_file)?).map_err(io::Error::other)?;
    Ok(ReportSummary { report_file, json, modified })
}

//! Output files. Every file opens with the tool version, the config digest and the seed;
//! nothing time-dependent is written, so reruns are byte-identical.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// SHA-256 of the canonical TOML, leaving out the fields that do not change results.
pub fn digest(config: &ExperimentConfig) -> String {
    let canonical = ExperimentConfig {
        threads: None,
        out: None,
        ..config.clone()
    };
    let hash = Sha256::digest(canonical.to_toml().as_bytes());
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest round-trip decimal, `inf`/`-inf`/`NaN` for the rest.
pub fn fmt(v: f64) -> String {
    format!("{v}")
}

/// JSON has no infinities; those go out as strings.
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(fmt(v))
    }
}

pub struct Emitter {
    dir: PathBuf,
    digest: String,
    seed: u64,
    written: Vec<String>,
}

impl Emitter {
    pub fn new(dir: &Path, config: &ExperimentConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Emitter {
            dir: dir.to_path_buf(),
            digest: digest(config),
            seed: config.seed,
            written: Vec::new(),
        })
    }

    pub fn header(&self, comment: &str) -> String {
        format!(
            "{comment} csbp {VERSION}\n{comment} config-sha256: {}\n{comment} seed: {}\n",
            self.digest, self.seed
        )
    }

    pub fn meta(&self) -> Value {
        json!({ "tool": format!("csbp {VERSION}"), "config_sha256": self.digest, "seed": self.seed })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        f.write_all(body.as_bytes()).map_err(|e| CliError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Comma-separated table with `#` header lines.
    pub fn csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut body = self.header("#");
        body.push_str(&columns.join(","));
        body.push('\n');
        for r in rows {
            body.push_str(&r.join(","));
            body.push('\n');
        }
        self.write(name, &body)
    }

    /// A CSV whose rows are produced by a writer callback, for large dumps.
    pub fn csv_with<F>(&mut self, name: &str, columns: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    {
        let mut body = self.header("#").into_bytes();
        body.extend_from_slice(columns.as_bytes());
        body.push(b'\n');
        fill(&mut body).map_err(|e| CliError::io(&self.dir.join(name), e))?;
        let text = String::from_utf8(body).expect("csv output is utf-8");
        self.write(name, &text)
    }

    /// A JSON document whose `csbp` key carries the header fields.
    pub fn json(&mut self, name: &str, mut value: Value) -> Result<(), CliError> {
        if let Value::Object(m) = &mut value {
            m.insert("csbp".into(), self.meta());
        }
        let mut body = serde_json::to_string_pretty(&value).expect("json values serialize");
        body.push('\n');
        self.write(name, &body)
    }

    /// A plot script: the shared CSV-reading preamble followed by `body`.
    pub fn script(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("#!/usr/bin/env python3\n{}{PLOT_PREAMBLE}{body}", self.header("#"));
        self.write(name, &text)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Left-aligned columns separated by two spaces.
pub fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Shared preamble of the emitted plot scripts: a CSV reader that skips `#` lines.
pub const PLOT_PREAMBLE: &str = r##"import csv
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def read(name):
    with open(os.path.join(HERE, name)) as f:
        rows = list(csv.DictReader(line for line in f if not line.startswith("#")))
    return rows


def col(rows, key):
    return [float(r[key]) for r in rows]

"##;

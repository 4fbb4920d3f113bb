//! Result tables: CSV with a provenance line, plus a JSON metadata sidecar.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Bumped whenever a header row changes.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    /// Summary lines written after the rows, each prefixed with `# `.
    pub footers: Vec<String>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
            footers: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Formats a float with the shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x}")
}

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub format_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config_sha256: String,
    pub inputs: Vec<InputDigest>,
    /// Effective parameters after command-line overrides.
    pub parameters: serde_json::Value,
}

impl Provenance {
    /// Digest over the config text, the effective parameters, and every input
    /// file's contents.
    pub fn new(
        command: &'static str,
        seed: u64,
        config_text: &str,
        parameters: serde_json::Value,
        inputs: &[(PathBuf, Vec<u8>)],
    ) -> Self {
        let mut h = Sha256::new();
        h.update(config_text.as_bytes());
        h.update([0]);
        h.update(parameters.to_string().as_bytes());
        let mut digests = Vec::new();
        for (path, bytes) in inputs {
            h.update([0]);
            h.update(bytes);
            digests.push(InputDigest {
                path: path.clone(),
                sha256: hex::encode(Sha256::digest(bytes)),
            });
        }
        Self {
            format_version: FORMAT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config_sha256: hex::encode(h.finalize()),
            inputs: digests,
            parameters,
        }
    }
}

pub fn render_csv(table: &Table, prov: &Provenance) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# incoherent-results format={} version={} command={} seed={} config_sha256={}",
        prov.format_version, prov.tool_version, prov.command, prov.seed, prov.config_sha256
    );
    out.push_str(&table.header.join(","));
    out.push('\n');
    for row in &table.rows {
        let fields: Vec<String> = row.iter().map(|f| quote(f)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    for f in &table.footers {
        let _ = writeln!(out, "# {f}");
    }
    out
}

#[derive(Serialize)]
struct Sidecar<'a> {
    #[serde(flatten)]
    provenance: &'a Provenance,
    csv: String,
    rows: usize,
    checks: usize,
    failed_checks: usize,
    invalid_entries: usize,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    csv.with_file_name(name)
}

pub fn render_sidecar(
    prov: &Provenance,
    csv: &Path,
    rows: usize,
    checks: usize,
    failed: usize,
    invalid: usize,
) -> String {
    let s = Sidecar {
        provenance: prov,
        csv: csv
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        rows,
        checks,
        failed_checks: failed,
        invalid_entries: invalid,
    };
    let mut text = serde_json::to_string_pretty(&s).expect("sidecar serializes");
    text.push('\n');
    text
}

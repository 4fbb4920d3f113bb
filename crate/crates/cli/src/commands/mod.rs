pub mod bounds;
pub mod injection;
pub mod toy;
pub mod verify;

use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::output::Table;

/// Slack for checks on exactly computed quantities.
pub const EXACT_SLACK: f64 = 1e-9;

/// Slack for checks against the search-based diamond norm.
pub const DIAMOND_SLACK: f64 = 1e-6;

/// Everything a command needs after config loading and flag overrides.
#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: ExperimentConfig,
    pub seed: u64,
    pub shots: Option<usize>,
    pub measure_diamond: bool,
    pub sweep: Option<(f64, f64, usize)>,
}

#[derive(Debug)]
pub struct Report {
    pub table: Table,
    pub checks: usize,
    pub failed: usize,
    /// Entries rejected as invalid input while the rest of the table was
    /// still produced.
    pub invalid: usize,
    pub inputs: Vec<(PathBuf, Vec<u8>)>,
    pub parameters: serde_json::Value,
}

impl Report {
    fn new(table: Table, parameters: serde_json::Value) -> Self {
        Self {
            table,
            checks: 0,
            failed: 0,
            invalid: 0,
            inputs: Vec::new(),
            parameters,
        }
    }

    /// Records a bound check and returns the cell text for it.
    fn check(&mut self, ok: bool) -> String {
        self.checks += 1;
        if ok {
            "pass".into()
        } else {
            self.failed += 1;
            "FAIL".into()
        }
    }
}

/// Input problems: reported with exit status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

pub(crate) fn read_input(path: &Path) -> Result<(String, Vec<u8>), InputError> {
    let bytes = std::fs::read(path)
        .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| InputError(format!("{} is not UTF-8 text", path.display())))?;
    Ok((text, bytes))
}

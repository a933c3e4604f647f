use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Delimited table built in memory and written in one go.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> CliResult<Self> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> CliResult
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn into_bytes(self) -> CliResult<Vec<u8>> {
        self.writer
            .into_inner()
            .map_err(|e| CliError::Data(format!("csv: {}", e.error())))
    }

    pub fn write_to(self, path: &Path) -> CliResult {
        let bytes = self.into_bytes()?;
        fs::write(path, bytes).map_err(|e| CliError::io(path, e))
    }
}

/// `<out>.<suffix>`, e.g. `runs.csv` -> `runs.csv.summary.csv`.
pub fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub parameters: BTreeMap<String, Value>,
    pub master_seed: u64,
    pub tool_version: String,
    pub outputs: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn start(command: &str, master_seed: u64) -> Self {
        Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            parameters: BTreeMap::new(),
            master_seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: Vec::new(),
            started_at: now(),
            finished_at: String::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let value = serde_json::to_value(value).expect("parameter serializes");
        self.parameters.insert(key.to_string(), value);
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.display().to_string());
        self
    }

    /// Stamps the finish time and writes `<out>.manifest.json`.
    pub fn finish(mut self, out: &Path) -> CliResult {
        self.finished_at = now();
        let path = sidecar(out, "manifest.json");
        let mut text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(path, e))
    }
}

/// Refuses to write over an input file.
pub fn check_distinct(out: &Path, input: Option<&Path>) -> CliResult {
    let Some(input) = input else { return Ok(()) };
    let same = match (fs::canonicalize(out), fs::canonicalize(input)) {
        (Ok(a), Ok(b)) => a == b,
        _ => out == input,
    };
    if same {
        return Err(CliError::Usage(format!(
            "--out {} would overwrite the input record",
            out.display()
        )));
    }
    Ok(())
}

pub fn fmt3(x: f64) -> String {
    format!("{x:.3}")
}

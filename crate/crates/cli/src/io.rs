//! Scenario ingestion and output files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    /// Bad input; exit code 2.
    Validation(String),
    /// The computation failed or produced non-finite numbers; exit code 3.
    Numerical(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

/// Errors raised by the library on valid-looking input are numerical unless
/// they describe the input itself.
pub fn numerical<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

pub fn invalid<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

/// Parses a JSON scenario, reporting syntax and schema errors with their
/// line and column.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    parse_json(&text).map_err(|m| CliError::Validation(format!("{}:{m}", path.display())))
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    serde_json::from_str(text).map_err(|e| format!("{}:{}: {e}", e.line(), e.column()))
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", root.display())))?;
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let p = self.path(name);
        fs::write(&p, bytes).map_err(|e| CliError::Validation(format!("cannot write {}: {e}", p.display())))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = to_json(value)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes a numeric table; any non-finite entry aborts with exit code 3.
    pub fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(invalid)?;
        for (i, row) in rows.iter().enumerate() {
            if let Some(j) = row.iter().position(|x| !x.is_finite()) {
                return Err(CliError::Numerical(format!(
                    "{name}: non-finite value in row {i}, column {}",
                    header[j]
                )));
            }
            w.write_record(row.iter().map(|x| format!("{x:e}"))).map_err(invalid)?;
        }
        let bytes = w.into_inner().map_err(invalid)?;
        self.write_bytes(name, &bytes)
    }

    /// Flat little-endian `f64` blocks, concatenated in the given order.
    pub fn write_binary(&self, name: &str, blocks: &[&[f64]]) -> Result<(), CliError> {
        let mut bytes = Vec::with_capacity(blocks.iter().map(|b| 8 * b.len()).sum());
        for b in blocks {
            for x in *b {
                if !x.is_finite() {
                    return Err(CliError::Numerical(format!("{name}: non-finite snapshot value")));
                }
                bytes.write_all(&x.to_le_bytes()).expect("in-memory write");
            }
        }
        self.write_bytes(name, &bytes)
    }
}

/// Pretty JSON; rejects non-finite numbers, which JSON cannot carry.
pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let v = serde_json::to_value(value).map_err(numerical)?;
    if has_non_finite(&v) {
        return Err(CliError::Numerical("non-finite value in JSON output".into()));
    }
    serde_json::to_string_pretty(&v).map_err(numerical)
}

fn has_non_finite(v: &serde_json::Value) -> bool {
    match v {
        // serde_json turns NaN and infinities into null
        serde_json::Value::Null => true,
        serde_json::Value::Array(a) => a.iter().any(has_non_finite),
        serde_json::Value::Object(o) => o.values().any(has_non_finite),
        _ => false,
    }
}

pub fn mat_rows<const R: usize, const C: usize>(
    m: &nalgebra::SMatrix<f64, R, C>,
) -> Vec<Vec<f64>> {
    (0..R).map(|r| (0..C).map(|c| m[(r, c)]).collect()).collect()
}

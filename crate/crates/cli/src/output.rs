use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) | CliError::Io(_) | CliError::Csv(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl From<betaop_core::Error> for CliError {
    fn from(e: betaop_core::Error) -> Self {
        use betaop_core::Error as E;
        match e {
            E::Budget(m) => CliError::Budget(m),
            E::Verification(m) => CliError::Verification(m),
            E::InvalidParams { .. }
            | E::InvalidArgument(_)
            | E::Parse(_)
            | E::OutOfDomain(_)
            | E::DegreeCap(_)
            | E::NonRational(_)
            | E::ParamsMismatch(..) => CliError::Usage(e.to_string()),
            E::DivisionByZero | E::NotInSpan(_) => CliError::Verification(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Fifteen significant digits; `{:e}` rounds the exact binary value to nearest, ties to even.
pub fn dec(x: f64) -> String {
    format!("{x:.14e}")
}

/// What a command produced: the document, whether its checks passed, a one-line
/// summary for stderr and extra fields for the manifest.
pub struct Report {
    pub body: Vec<u8>,
    pub passed: bool,
    pub summary: Option<String>,
    pub extra: serde_json::Value,
}

impl Report {
    pub fn new(body: Vec<u8>) -> Self {
        Report {
            body,
            passed: true,
            summary: None,
            extra: serde_json::Value::Null,
        }
    }

    pub fn passed(mut self, passed: bool) -> Self {
        self.passed = passed;
        self
    }

    pub fn summary(mut self, s: impl Into<String>) -> Self {
        self.summary = Some(s.into());
        self
    }

    pub fn extra(mut self, v: serde_json::Value) -> Self {
        self.extra = v;
        self
    }
}

pub fn json_body<T: Serialize>(doc: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("report serializes");
    out.push(b'\n');
    out
}

pub fn csv_body<R: Serialize>(rows: impl IntoIterator<Item = R>) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

pub fn emit(out: Option<&Path>, body: &[u8]) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, body),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(body)?;
            stdout.flush()
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub schema: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub command: &'static str,
    pub parameters: serde_json::Value,
    pub threads: usize,
    pub output: Option<&'a Path>,
    pub elapsed_ms: f64,
    pub exit_code: u8,
    pub error: Option<String>,
    pub result: serde_json::Value,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_have_fifteen_significant_digits() {
        assert_eq!(dec(1.0), "1.00000000000000e0");
        assert_eq!(dec(-0.1), "-1.00000000000000e-1");
        assert_eq!(dec(std::f64::consts::PI), "3.14159265358979e0");
        // 0.125 -> ties to even at the last kept digit
        assert_eq!(format!("{:.1e}", 0.125), "1.2e-1");
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(manifest_path(Path::new("/tmp/r.csv")), PathBuf::from("/tmp/r.csv.manifest.json"));
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        let cases = [
            (betaop_core::Error::Budget("x".into()), 3),
            (betaop_core::Error::Verification("x".into()), 1),
            (betaop_core::Error::InvalidArgument("x".into()), 2),
        ];
        for (e, code) in cases {
            assert_eq!(CliError::from(e).exit_code(), code);
        }
    }
}

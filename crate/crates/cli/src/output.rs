use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use abp_core::emit::{canonical_json, write_trace_csv, write_trace_jsonl};
use abp_core::AbpError;
use clap::ValueEnum;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flag value; exit 2.
    Config { flag: String, reason: String },
    /// Output could not be written; exit 3.
    Output { path: PathBuf, reason: String },
    /// Anything else that went wrong during a run; exit 1.
    Run(String),
}

impl CliError {
    pub fn config(flag: &str, reason: impl Into<String>) -> Self {
        CliError::Config {
            flag: flag.to_string(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Output { .. } => 3,
            CliError::Run(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config { flag, reason } => write!(f, "invalid {flag}: {reason}"),
            CliError::Output { path, reason } => write!(f, "cannot write {}: {reason}", path.display()),
            CliError::Run(msg) => f.write_str(msg),
        }
    }
}

impl From<AbpError> for CliError {
    fn from(e: AbpError) -> Self {
        match e {
            AbpError::InvalidArgument { name, reason } => CliError::Config {
                flag: format!("--{}", name.replace('_', "-")),
                reason,
            },
            AbpError::InvalidConfig(reason) => CliError::Config {
                flag: "configuration".into(),
                reason,
            },
            other => CliError::Run(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// An output file opened before any work starts, so an unwritable path fails fast.
pub struct Sink {
    path: PathBuf,
    out: BufWriter<File>,
}

impl Sink {
    pub fn create(path: &Path) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::Output {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Ok(Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        })
    }

    fn fail(&self, e: impl fmt::Display) -> CliError {
        CliError::Output {
            path: self.path.clone(),
            reason: e.to_string(),
        }
    }

    pub fn trace<V: Serialize, F: Serialize>(mut self, format: Format, values: &[V], feedbacks: &[F]) -> CliResult<()> {
        let written = match format {
            Format::Csv => write_trace_csv(&mut self.out, values, feedbacks),
            Format::Json => write_trace_jsonl(&mut self.out, values, feedbacks),
        };
        written.map_err(|e| self.fail(e))?;
        self.finish()
    }

    pub fn json<T: Serialize + ?Sized>(mut self, value: &T) -> CliResult<()> {
        let text = canonical_json(value)?;
        writeln!(self.out, "{text}").map_err(|e| self.fail(e))?;
        self.finish()
    }

    /// Header plus rows of already-formatted fields.
    pub fn table(mut self, header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
        let written = write_rows(&mut self.out, header, rows);
        written.map_err(|e| self.fail(e))?;
        self.finish()
    }

    fn finish(mut self) -> CliResult<()> {
        self.out.flush().map_err(|e| self.fail(e))
    }
}

/// Picks the format from `--format`, then from the output extension, then the default.
pub fn resolve_format(explicit: Option<Format>, out: Option<&Path>, default: Format) -> Format {
    explicit
        .or_else(|| match out?.extension()?.to_str()? {
            "csv" => Some(Format::Csv),
            "json" | "jsonl" => Some(Format::Json),
            _ => None,
        })
        .unwrap_or(default)
}

fn write_rows(out: impl Write, header: &[&str], rows: Vec<Vec<String>>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

use std::fmt::Display;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Deserialize;

use switchcal::eval::RunConfig;
use switchcal::{Error, ErrorKind};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_NUMERIC: u8 = 4;
pub const EXIT_ALIGNMENT: u8 = 5;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Display) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.to_string(),
        }
    }

    pub fn io(path: &Path, e: impl Display) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("{}: {e}", path.display()),
        }
    }
}

pub fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => EXIT_CONFIG,
        ErrorKind::Io => EXIT_IO,
        ErrorKind::Numeric => EXIT_NUMERIC,
        ErrorKind::Alignment => EXIT_ALIGNMENT,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(e.kind()),
            message: e.to_string(),
        }
    }
}

/// A `run` or `wrap` config: a single `run` or a list of `runs`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub run: Option<RunConfig>,
    #[serde(default)]
    pub runs: Vec<RunConfig>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let file: Self = read_json(path)?;
        match (&file.run, file.runs.is_empty()) {
            (Some(_), false) => Err(CliError::config(format!(
                "{}: give either `run` or `runs`, not both",
                path.display()
            ))),
            (None, true) => Err(CliError::config(format!(
                "{}: no `run` or `runs` entry",
                path.display()
            ))),
            _ => Ok(file),
        }
    }

    pub fn into_runs(self) -> Vec<RunConfig> {
        match self.run {
            Some(run) => vec![run],
            None => self.runs,
        }
    }
}

/// Relative paths inside a config resolve against the config's directory.
pub fn base_dir(config_path: &Path) -> PathBuf {
    match config_path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_json(&text).map_err(|m| CliError::config(format!("{}: {m}", path.display())))
}

pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    serde_json::from_str(text).map_err(|e| match byte_offset(text, &e) {
        Some(offset) => format!("{e} (byte offset {offset})"),
        None => e.to_string(),
    })
}

/// serde_json reports 1-based lines and columns; columns count bytes.
fn byte_offset(text: &str, e: &serde_json::Error) -> Option<usize> {
    let (line, column) = (e.line(), e.column());
    if line == 0 {
        return None;
    }
    if e.is_eof() {
        return Some(text.len());
    }
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line - 1)
        .map(str::len)
        .sum();
    Some((line_start + column.saturating_sub(1)).min(text.len()))
}

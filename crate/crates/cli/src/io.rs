use std::io::Write;
use std::path::Path;

use lebesgue::Error;
use sha2::{Digest, Sha256};

pub const EXIT_INTERNAL: u8 = 1;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug)]
pub struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }

    /// Names the file the error came from.
    pub fn prefixed(mut self, path: &str) -> Self {
        self.message = format!("{path}: {}", self.message);
        self
    }

    pub fn code(&self) -> u8 {
        self.code
    }

    pub fn message(&self) -> &str {
        &self.message
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = if e.is_invalid_input() {
            EXIT_INVALID
        } else if matches!(e, Error::NoConvergence { .. } | Error::OracleDisagreement { .. }) {
            EXIT_NUMERICAL
        } else {
            EXIT_INTERNAL
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub struct Input {
    pub text: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_input(path: &str) -> CliResult<Input> {
    let bytes = std::fs::read(path).map_err(|e| CliError::invalid(format!("cannot read {path}: {e}")))?;
    let sha256 = sha256_hex(&bytes);
    let text = String::from_utf8(bytes).map_err(|_| CliError::invalid(format!("{path} is not UTF-8 text")))?;
    Ok(Input { text, sha256 })
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &str, contents: &[u8]) -> CliResult<()> {
    let target = Path::new(path);
    let dir = match target.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::internal(format!("cannot write {path}: {e}"));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(target).map_err(|e| fail(e.error))?;
    Ok(())
}

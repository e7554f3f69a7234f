use std::io;
use std::path::PathBuf;

use cortexsim_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("step {index} (line {line}): {msg}")]
    Step { index: usize, line: usize, msg: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("unsupported snapshot version {found}, this build reads version {supported}")]
    Version { found: u32, supported: u32 },
    #[error("snapshot checksum mismatch or truncated file")]
    Checksum,
    #[error("malformed snapshot: {0}")]
    Snapshot(String),
    #[error("{0}")]
    Usage(String),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Self::Parse { line, msg: msg.into() }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;

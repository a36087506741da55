use std::io;
use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    /// A problem tied to one line of an input file.
    #[error("{}:{line}: {message}", path.display())]
    Line {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    File { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] spiceu_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn line(path: &Path, line: usize, message: impl ToString) -> Self {
        Self::Line {
            path: path.to_path_buf(),
            line,
            message: message.to_string(),
        }
    }

    pub fn file(path: &Path, message: impl ToString) -> Self {
        Self::File {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }

    /// Attaches a file to a core error, keeping its line number when it has one.
    pub fn in_file(path: &Path, err: spiceu_core::Error) -> Self {
        match err {
            spiceu_core::Error::Parse { line, message } => Self::line(path, line, message),
            other => Self::file(path, other),
        }
    }
}

use thiserror::Error;

/// Errors from parsing ASF/AMC text.
#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] gaitlab_core::Error),
}

impl ParseError {
    pub fn syntax(line: usize, message: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            message: message.into(),
        }
    }
}

/// Errors from reading or writing archive files.
#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("header is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("not a gaitlab archive (bad magic)")]
    BadMagic,
    #[error("unsupported archive version {found}")]
    UnsupportedVersion { found: u32 },
    #[error("archive kind is `{found}`, expected `{expected}`")]
    WrongKind { expected: &'static str, found: String },
    #[error("payload checksum mismatch; file is corrupt or truncated")]
    ChecksumMismatch,
    #[error("archive is inconsistent: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Core(#[from] gaitlab_core::Error),
}

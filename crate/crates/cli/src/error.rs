//! Failure kinds and their process exit codes.

use std::fmt;
use std::path::Path;

use crossalign::{DiagnosticsError, Error, StoreError, StsError, TransformError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Bad or missing flags, inconsistent options.
    Usage,
    /// Unreadable/unwritable files and malformed file contents.
    Io,
    /// Numeric failures and violated preconditions.
    Numeric,
}

impl Kind {
    pub fn exit_code(self) -> i32 {
        match self {
            Kind::Usage => 1,
            Kind::Io => 2,
            Kind::Numeric => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { kind: Kind::Usage, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        CliError { kind: Kind::Io, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError { kind: Kind::Numeric, message: message.into() }
    }

    /// Prefixes the message with the file it concerns.
    pub fn in_file(mut self, path: &Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;

fn store_kind(e: &StoreError) -> Kind {
    match e {
        StoreError::AlreadyPreprocessed | StoreError::EmptySentence => Kind::Numeric,
        _ => Kind::Io,
    }
}

fn transform_kind(e: &TransformError) -> Kind {
    match e {
        TransformError::Io(_)
        | TransformError::MalformedDictionary { .. }
        | TransformError::MalformedMatrix { .. } => Kind::Io,
        TransformError::InvalidConfig(_) => Kind::Usage,
        _ => Kind::Numeric,
    }
}

fn sts_kind(e: &StsError) -> Kind {
    match e {
        StsError::InvalidRank | StsError::MissingIdf(_) => Kind::Usage,
        StsError::DimensionMismatch(..) => Kind::Numeric,
        StsError::Transform(t) => transform_kind(t),
    }
}

fn diagnostics_kind(e: &DiagnosticsError) -> Kind {
    match e {
        DiagnosticsError::Io(_) => Kind::Io,
        DiagnosticsError::Sts(s) => sts_kind(s),
        _ => Kind::Numeric,
    }
}

macro_rules! from_core {
    ($ty:ty, $kind:ident) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError { kind: $kind(&e), message: e.to_string() }
            }
        }
    };
}

from_core!(StoreError, store_kind);
from_core!(TransformError, transform_kind);
from_core!(StsError, sts_kind);
from_core!(DiagnosticsError, diagnostics_kind);

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Store(e) => e.into(),
            Error::Transform(e) => e.into(),
            Error::Sts(e) => e.into(),
            Error::Diagnostics(e) => e.into(),
        }
    }
}

use std::io;
use std::sync::Arc;

/// Errors raised by the library. The variant name is part of the CLI
/// contract: `Error::name` is printed verbatim on failure.
#[derive(Clone, Debug, thiserror::Error)]
pub enum Error {
    #[error("DimensionError: {0}")]
    Dimension(String),
    #[error("EnumerationUnsupported: {0}")]
    EnumerationUnsupported(String),
    #[error("EmptyLanguage: the language slice has no members")]
    EmptyLanguage,
    #[error("DigestTooWide: k+1 = {digest_bits} exceeds n = {n}")]
    DigestTooWide { digest_bits: usize, n: usize },
    #[error("NotInLanguage: {0}")]
    NotInLanguage(String),
    #[error("ConfigError: {0}")]
    Config(String),
    #[error("SeedSpaceExhausted: no seed in [0, {space}) satisfies the predicate")]
    SeedSpaceExhausted { space: u64 },
    #[error("CorruptRecord: no member of the language matches the record")]
    CorruptRecord,
    #[error("AmbiguousRecord: {survivors} members match the record")]
    AmbiguousRecord { survivors: u64 },
    #[error("FormatError: {0}")]
    Format(String),
    #[error("IngestError: {0}")]
    Ingest(String),
    #[error("IoError: {0}")]
    Io(Arc<io::Error>),
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::Dimension(_) => "DimensionError",
            Error::EnumerationUnsupported(_) => "EnumerationUnsupported",
            Error::EmptyLanguage => "EmptyLanguage",
            Error::DigestTooWide { .. } => "DigestTooWide",
            Error::NotInLanguage(_) => "NotInLanguage",
            Error::Config(_) => "ConfigError",
            Error::SeedSpaceExhausted { .. } => "SeedSpaceExhausted",
            Error::CorruptRecord => "CorruptRecord",
            Error::AmbiguousRecord { .. } => "AmbiguousRecord",
            Error::Format(_) => "FormatError",
            Error::Ingest(_) => "IngestError",
            Error::Io(_) => "IoError",
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(Arc::new(e))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::fmt;

/// Subband named in a degenerate-input error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subband {
    Input,
    Highpass,
    Lowpass,
}

impl fmt::Display for Subband {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Subband::Input => "input",
            Subband::Highpass => "highpass",
            Subband::Lowpass => "lowpass",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("format error at byte offset {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("method mismatch: decomposition uses {found}, compensator is {expected}")]
    MethodMismatch {
        expected: crate::Method,
        found: crate::Method,
    },

    #[error("degenerate input: {0} subband has zero variance")]
    Degenerate(Subband),

    #[error("slice {index}: {source}")]
    AtSlice {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn format(offset: usize, reason: impl Into<String>) -> Self {
        Error::Format {
            offset: offset as u64,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_slice(self, index: usize) -> Self {
        Error::AtSlice {
            index,
            source: Box::new(self),
        }
    }

    /// True for errors caused by malformed input files.
    pub fn is_format(&self) -> bool {
        match self {
            Error::Format { .. } => true,
            Error::AtSlice { source, .. } => source.is_format(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

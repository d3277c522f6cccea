use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised anywhere in the pipeline.
///
/// Each variant maps to one process exit status (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    /// Input failed schema or contract validation.
    #[error("{0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A distribution fit was refused (too few samples, degenerate data).
    #[error("fit failure: {0}")]
    Fit(String),

    /// A numerical contract was broken during training or explanation.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Wraps a failure with the pipeline stage that raised it.
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        match self {
            Error::Stage { .. } => self,
            other => Error::Stage {
                stage,
                source: Box::new(other),
            },
        }
    }

    /// Process exit status: 1 validation, 2 I/O, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) => 1,
            Error::Io { .. } => 2,
            Error::Fit(_) | Error::Numerical(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}

/// Maps a csv error on `path` to an I/O or validation error.
pub(crate) fn from_csv(path: &std::path::Path, err: csv::Error) -> Error {
    let row = err.position().map(|p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => {
            let at = row.map(|l| format!(" (line {l})")).unwrap_or_default();
            Error::invalid(format!("{}{at}: {kind:?}", path.display()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_wrapped_cause() {
        assert_eq!(Error::invalid("x").exit_code(), 1);
        let io = Error::io("a.csv", std::io::Error::from(std::io::ErrorKind::NotFound));
        assert_eq!(io.exit_code(), 2);
        assert_eq!(Error::Fit("m".into()).in_stage("spi").exit_code(), 3);
        let nested = Error::invalid("x").in_stage("prepare").in_stage("run-all");
        assert!(nested.to_string().starts_with("stage `prepare`"));
    }
}

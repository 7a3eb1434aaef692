use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aqrm_core::Error;
use serde_json::{json, Map, Value};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_IO: u8 = 4;

/// A command failure, reported as one JSON object on stderr.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
    pub code: u8,
    pub extra: Map<String, Value>,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Failure {
        Failure {
            kind: "usage",
            message: message.into(),
            code: EXIT_USAGE,
            extra: Map::new(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Failure {
        let mut f = Failure {
            kind: "io",
            message: format!("{}: {err}", path.display()),
            code: EXIT_IO,
            extra: Map::new(),
        };
        f.extra.insert("path".into(), json!(path.display().to_string()));
        f
    }

    pub fn with(mut self, key: &str, value: Value) -> Failure {
        self.extra.insert(key.into(), value);
        self
    }

    /// Records where the partial output went, if anywhere.
    pub fn with_partial(self, written: &[PathBuf]) -> Failure {
        let paths: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
        self.with("partial_outputs", json!(paths))
    }

    pub fn report(self) -> ExitCode {
        let mut body = Map::new();
        body.insert("kind".into(), json!(self.kind));
        body.insert("message".into(), json!(self.message));
        body.insert("exit_code".into(), json!(self.code));
        body.extend(self.extra);
        eprintln!("{}", json!({ "error": body }));
        ExitCode::from(self.code)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let message = e.to_string();
        let (kind, code) = match &e {
            Error::InvalidParameter(_) => ("invalid_parameter", EXIT_USAGE),
            Error::NonFinite(_) => ("non_finite", EXIT_USAGE),
            Error::Shape(_) => ("shape", EXIT_USAGE),
            Error::TooShort { .. } => ("too_short", EXIT_USAGE),
            Error::InvalidPartition(_) => ("invalid_partition", EXIT_USAGE),
            Error::MissingLabels => ("missing_labels", EXIT_USAGE),
            Error::NotConverged { .. } => ("not_converged", EXIT_NOT_CONVERGED),
            Error::Io(_) => ("io", EXIT_IO),
        };
        let mut f = Failure {
            kind,
            message,
            code,
            extra: Map::new(),
        };
        if let Error::NotConverged {
            requested,
            certified,
            trunc,
            ..
        } = e
        {
            f = f
                .with("requested", json!(requested))
                .with("certified", json!(certified))
                .with("truncation", json!(trunc));
        }
        f
    }
}

//! Scenario files, run reports, grid CSV files and the pieces of the
//! `confine` command line that are worth testing on their own.
//!
//! All numerics live in [`confine_core`]; this crate only wires them to
//! files and processes.

// `!(x > 0.0)` deliberately rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod desc;
pub mod grid_csv;
pub mod json;
pub mod scenario;
pub mod sweep;

use std::io;
use std::path::PathBuf;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CONFINE_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// The input text could not be parsed.
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    /// Parsed input that violates a constraint; `what` names the offending
    /// field.
    #[error("invalid {what}: {reason}")]
    Invalid { what: String, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("malformed grid file: {0}")]
    Format(String),
}

impl Error {
    pub fn invalid(what: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::Invalid {
            what: what.into(),
            reason: reason.into(),
        }
    }

    /// Usage and parse errors, as opposed to failures while running.
    pub fn is_usage(&self) -> bool {
        matches!(self, Self::Parse { .. } | Self::Invalid { .. })
    }

    fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

/// Output directory: the explicit choice, else the environment variable,
/// else `confine_out`.
pub fn resolve_out_dir(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("confine_out"))
}

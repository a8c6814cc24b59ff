//! Getting graphs in and out: the JSON interchange document, the review
//! metadata sidecar, and synthetic graph generators.

mod document;
mod sidecar;
pub mod synthetic;

use thiserror::Error;

use crate::graph::ValidationReport;

pub use document::{
    parse_document, parse_graph, serialize_graph, EdgeRecord, GraphDocument, NodeRecord,
    SCHEMA_VERSION,
};
pub use sidecar::{load_metadata, MetadataEntry, MetadataLoad, MetadataPatch, MetadataSidecar};
pub use synthetic::{generate_synthetic, Profile, SyntheticError, SyntheticProfile};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("graph rejected with {} violation(s): {}", .0.len(), list(.0))]
    Invalid(ValidationReport),
}

fn list(report: &ValidationReport) -> String {
    report
        .violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Two-stage parse: syntax first (with position), then shape (with field path).
pub(crate) fn from_json_bytes<T: serde::de::DeserializeOwned>(
    bytes: &[u8],
) -> Result<T, IngestError> {
    let value: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| IngestError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        IngestError::Schema {
            path,
            message: e.into_inner().to_string(),
        }
    })
}

/// Pretty-printed, two-space indented, newline-terminated.
pub(crate) fn to_canonical_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("in-memory serialization");
    out.push(b'\n');
    out
}

use std::collections::BTreeMap;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{from_json_bytes, to_canonical_bytes, IngestError};
use crate::graph::{Confidence, DependencyGraph, NodeMetadata, Progress};

/// Review state for one declaration. `hasSorry` is not stored here: it comes
/// from the exported graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MetadataEntry {
    #[serde(default)]
    pub confidence: Confidence,
    #[serde(default)]
    pub proof_progress: Progress,
    #[serde(default)]
    pub def_progress: Progress,
    #[serde(serialize_with = "ser_time", deserialize_with = "de_time")]
    pub last_modified: DateTime<Utc>,
}

fn format_time(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn ser_time<S: Serializer>(t: &DateTime<Utc>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_time(t))
}

fn de_time<'de, D: Deserializer<'de>>(d: D) -> Result<DateTime<Utc>, D::Error> {
    let raw = String::deserialize(d)?;
    DateTime::parse_from_rfc3339(&raw)
        .map(|t| t.with_timezone(&Utc))
        .map_err(serde::de::Error::custom)
}

/// Partial update to a declaration's review state.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MetadataPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confidence: Option<Confidence>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proof_progress: Option<Progress>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub def_progress: Option<Progress>,
}

impl MetadataPatch {
    pub fn merge_into(&self, meta: &mut NodeMetadata) {
        if let Some(c) = self.confidence {
            meta.confidence = c;
        }
        if let Some(p) = self.proof_progress {
            meta.proof_progress = p;
        }
        if let Some(p) = self.def_progress {
            meta.def_progress = p;
        }
    }
}

/// Name-keyed review metadata, persisted separately from the graph document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MetadataSidecar {
    pub entries: BTreeMap<String, MetadataEntry>,
}

#[derive(Debug, Clone)]
pub struct MetadataLoad {
    pub graph: DependencyGraph,
    /// Entries whose name is not declared in the graph.
    pub stale: Vec<String>,
}

impl MetadataSidecar {
    pub fn parse(bytes: &[u8]) -> Result<Self, IngestError> {
        from_json_bytes(bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        to_canonical_bytes(self)
    }

    pub fn get(&self, name: &str) -> Option<&MetadataEntry> {
        self.entries.get(name)
    }

    /// Current timestamp at the precision the sidecar stores.
    pub fn now() -> DateTime<Utc> {
        DateTime::from_timestamp_millis(Utc::now().timestamp_millis()).expect("clock in range")
    }

    /// Merges `patch` onto the entry for `name` (starting from `base` when no
    /// entry exists yet) and stamps it with `at`.
    pub fn update(
        &mut self,
        name: &str,
        base: NodeMetadata,
        patch: &MetadataPatch,
        at: DateTime<Utc>,
    ) -> MetadataEntry {
        let mut meta = self
            .entries
            .get(name)
            .map(|e| e.overlay(base))
            .unwrap_or(base);
        patch.merge_into(&mut meta);
        let entry = MetadataEntry {
            confidence: meta.confidence,
            proof_progress: meta.proof_progress,
            def_progress: meta.def_progress,
            last_modified: at,
        };
        self.entries.insert(name.to_string(), entry);
        entry
    }

    pub fn apply(&self, graph: &DependencyGraph) -> MetadataLoad {
        let updates = self.entries.iter().filter_map(|(name, entry)| {
            graph
                .get(name)
                .map(|d| (name.as_str(), entry.overlay(d.metadata)))
        });
        let (graph_with, _) = graph.with_metadata(updates);
        let stale = self
            .entries
            .keys()
            .filter(|name| !graph.contains(name))
            .cloned()
            .collect();
        MetadataLoad {
            graph: graph_with,
            stale,
        }
    }
}

impl MetadataEntry {
    /// `lastModified` as stored, e.g. `2026-10-14T06:30:00.250Z`.
    pub fn last_modified_string(&self) -> String {
        format_time(&self.last_modified)
    }

    /// Review fields from this entry, `hasSorry` from `base`.
    pub fn overlay(&self, base: NodeMetadata) -> NodeMetadata {
        NodeMetadata {
            confidence: self.confidence,
            proof_progress: self.proof_progress,
            def_progress: self.def_progress,
            has_sorry: base.has_sorry,
        }
    }
}

pub fn load_metadata(bytes: &[u8], graph: &DependencyGraph) -> Result<MetadataLoad, IngestError> {
    Ok(MetadataSidecar::parse(bytes)?.apply(graph))
}

use serde::{Deserialize, Serialize};

use super::{from_json_bytes, to_canonical_bytes, IngestError};
use crate::graph::{
    DeclKind, Declaration, DepEdge, DepSite, DependencyGraph, GraphError, NodeMetadata, ProjectInfo,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct GraphDocument {
    pub schema_version: u32,
    pub project: ProjectInfo,
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct NodeRecord {
    pub name: String,
    pub kind: DeclKind,
    #[serde(default)]
    pub module: String,
    #[serde(default)]
    pub has_sorry: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub source: String,
    pub target: String,
    pub site: DepSite,
}

impl GraphDocument {
    /// Canonical document for a graph: nodes by name, edges by source then target.
    pub fn from_graph(graph: &DependencyGraph) -> Self {
        GraphDocument {
            schema_version: SCHEMA_VERSION,
            project: graph.project().clone(),
            nodes: graph
                .nodes()
                .iter()
                .map(|d| NodeRecord {
                    name: d.name.clone(),
                    kind: d.kind,
                    module: d.module.clone(),
                    has_sorry: d.metadata.has_sorry,
                })
                .collect(),
            edges: graph
                .edges()
                .iter()
                .map(|e| EdgeRecord {
                    source: e.source.clone(),
                    target: e.target.clone(),
                    site: e.site,
                })
                .collect(),
        }
    }

    pub fn declarations(&self) -> Vec<Declaration> {
        self.nodes
            .iter()
            .map(|n| Declaration {
                name: n.name.clone(),
                kind: n.kind,
                module: n.module.clone(),
                metadata: NodeMetadata {
                    has_sorry: n.has_sorry,
                    ..NodeMetadata::default()
                },
            })
            .collect()
    }

    pub fn dep_edges(&self) -> Vec<DepEdge> {
        self.edges
            .iter()
            .map(|e| DepEdge::new(e.source.clone(), e.target.clone(), e.site))
            .collect()
    }

    pub fn into_graph(self) -> Result<DependencyGraph, IngestError> {
        let decls = self.declarations();
        let edges = self.dep_edges();
        DependencyGraph::from_parts(self.project, decls, edges).map_err(|e| match e {
            GraphError::Invalid(report) => IngestError::Invalid(report),
            GraphError::NotFound(name) => unreachable!("construction does not look up {name}"),
        })
    }
}

/// Parses and shape-checks a document without building the graph.
pub fn parse_document(bytes: &[u8]) -> Result<GraphDocument, IngestError> {
    let doc: GraphDocument = from_json_bytes(bytes)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(IngestError::Schema {
            path: "schemaVersion".into(),
            message: format!(
                "unsupported schema version {}, expected {SCHEMA_VERSION}",
                doc.schema_version
            ),
        });
    }
    Ok(doc)
}

pub fn parse_graph(bytes: &[u8]) -> Result<DependencyGraph, IngestError> {
    parse_document(bytes)?.into_graph()
}

pub fn serialize_graph(graph: &DependencyGraph) -> Vec<u8> {
    to_canonical_bytes(&GraphDocument::from_graph(graph))
}

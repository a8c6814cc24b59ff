//! Review-cone analysis for proof-assistant dependency graphs.
//!
//! Given a graph of project declarations (theorems, definitions, axioms and
//! friends) whose edges record whether a dependency sits in a declaration's
//! type or only in its value, this crate
//!
//! * classifies every edge into one of eight kinds ([`graph::EdgeKind`]),
//! * computes, for a set of target theorems, the declarations a human has to
//!   read to trust what the targets *say* ([`compass::run_compass`]), and
//! * reports how much smaller that set is than the full dependency cone
//!   ([`report::build_report`]).
//!
//! Graphs come in through a JSON interchange document ([`ingest`]), and
//! review metadata lives in a separate sidecar file.

pub mod compass;
pub mod filter;
pub mod graph;
pub mod ingest;
pub mod report;

pub use compass::{
    brute_force_compass, reduction_rate, review_cone, run_compass, should_traverse, CompassError,
    CompassOptions, CompassResult, Reduction,
};
pub use filter::{apply_filters, apply_filters_with, FilterError, FilterSpec, GraphView, Scope};
pub use graph::{
    aggregate_kind, reachable, validate_graph, AggKind, Confidence, DeclKind, Declaration, DepEdge,
    DepSite, DependencyGraph, EdgeKind, GraphBuilder, GraphError, NodeMetadata, Progress,
    ProjectInfo, ValidationReport, Violation,
};
pub use ingest::{
    generate_synthetic, load_metadata, parse_graph, serialize_graph, IngestError, MetadataSidecar,
    Profile, SyntheticProfile,
};
pub use report::{build_report, render_report, ProjectReport, ReportFormat, TargetReport};

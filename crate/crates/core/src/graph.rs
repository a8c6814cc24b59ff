//! Declaration dependency graph: node and edge model, the 8-kind edge
//! classification, structural validation and generic reachability.
//!
//! A [`DependencyGraph`] is immutable once built. Nodes are kept sorted by
//! name and edges by `(source, target)`, so iteration order is canonical and
//! every derived output (documents, reports, views) is byte-stable.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Declaration kind as reported by the exporter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeclKind {
    Theorem,
    Definition,
    Inductive,
    Structure,
    Abbreviation,
    Axiom,
}

impl DeclKind {
    pub const ALL: [DeclKind; 6] = [
        DeclKind::Theorem,
        DeclKind::Definition,
        DeclKind::Inductive,
        DeclKind::Structure,
        DeclKind::Abbreviation,
        DeclKind::Axiom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DeclKind::Theorem => "theorem",
            DeclKind::Definition => "definition",
            DeclKind::Inductive => "inductive",
            DeclKind::Structure => "structure",
            DeclKind::Abbreviation => "abbreviation",
            DeclKind::Axiom => "axiom",
        }
    }

    pub fn aggregate(self) -> AggKind {
        aggregate_kind(self)
    }
}

/// Collapses the six exporter kinds into theorem / definition / axiom.
pub fn aggregate_kind(kind: DeclKind) -> AggKind {
    match kind {
        DeclKind::Theorem => AggKind::Theorem,
        DeclKind::Definition
        | DeclKind::Inductive
        | DeclKind::Structure
        | DeclKind::Abbreviation => AggKind::Definition,
        DeclKind::Axiom => AggKind::Axiom,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggKind {
    Theorem,
    Definition,
    Axiom,
}

impl AggKind {
    pub const ALL: [AggKind; 3] = [AggKind::Theorem, AggKind::Definition, AggKind::Axiom];

    pub fn as_str(self) -> &'static str {
        match self {
            AggKind::Theorem => "theorem",
            AggKind::Definition => "definition",
            AggKind::Axiom => "axiom",
        }
    }
}

/// Where the dependency occurs: in the declaration's type, or only in its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepSite {
    Type,
    Value,
}

impl DepSite {
    pub const ALL: [DepSite; 2] = [DepSite::Type, DepSite::Value];

    pub fn as_str(self) -> &'static str {
        match self {
            DepSite::Type => "type",
            DepSite::Value => "value",
        }
    }
}

/// Reviewer confidence in a declaration's semantic correctness. Ordered from
/// `Unreviewed` (lowest) to `Verified` (highest).
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Confidence {
    #[default]
    Unreviewed,
    Low,
    Medium,
    High,
    Verified,
}

impl Confidence {
    pub const ALL: [Confidence; 5] = [
        Confidence::Unreviewed,
        Confidence::Low,
        Confidence::Medium,
        Confidence::High,
        Confidence::Verified,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Confidence::Unreviewed => "unreviewed",
            Confidence::Low => "low",
            Confidence::Medium => "medium",
            Confidence::High => "high",
            Confidence::Verified => "verified",
        }
    }
}

#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "camelCase")]
pub enum Progress {
    #[default]
    NotStarted,
    InProgress,
    Complete,
}

impl Progress {
    pub const ALL: [Progress; 3] = [
        Progress::NotStarted,
        Progress::InProgress,
        Progress::Complete,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Progress::NotStarted => "notStarted",
            Progress::InProgress => "inProgress",
            Progress::Complete => "complete",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NodeMetadata {
    pub confidence: Confidence,
    pub proof_progress: Progress,
    pub def_progress: Progress,
    pub has_sorry: bool,
}

/// One of the 8 edge kinds: source axis x site x target axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    ThmTypeToDef,
    ThmTypeToThm,
    ThmValueToDef,
    ThmValueToThm,
    DefTypeToDef,
    DefTypeToThm,
    DefValueToDef,
    DefValueToThm,
}

impl EdgeKind {
    pub const ALL: [EdgeKind; 8] = [
        EdgeKind::ThmTypeToDef,
        EdgeKind::ThmTypeToThm,
        EdgeKind::ThmValueToDef,
        EdgeKind::ThmValueToThm,
        EdgeKind::DefTypeToDef,
        EdgeKind::DefTypeToThm,
        EdgeKind::DefValueToDef,
        EdgeKind::DefValueToThm,
    ];

    /// Builds the kind from the two endpoint kinds and the site. Axioms sit on
    /// the definition axis on both ends.
    pub fn from_parts(source: DeclKind, site: DepSite, target: DeclKind) -> EdgeKind {
        let src_thm = source.aggregate() == AggKind::Theorem;
        let dst_thm = target.aggregate() == AggKind::Theorem;
        match (src_thm, site, dst_thm) {
            (true, DepSite::Type, false) => EdgeKind::ThmTypeToDef,
            (true, DepSite::Type, true) => EdgeKind::ThmTypeToThm,
            (true, DepSite::Value, false) => EdgeKind::ThmValueToDef,
            (true, DepSite::Value, true) => EdgeKind::ThmValueToThm,
            (false, DepSite::Type, false) => EdgeKind::DefTypeToDef,
            (false, DepSite::Type, true) => EdgeKind::DefTypeToThm,
            (false, DepSite::Value, false) => EdgeKind::DefValueToDef,
            (false, DepSite::Value, true) => EdgeKind::DefValueToThm,
        }
    }

    /// Proof-level dependencies: theorem source, value site.
    pub fn pruned(self) -> bool {
        matches!(self, EdgeKind::ThmValueToDef | EdgeKind::ThmValueToThm)
    }

    pub fn site(self) -> DepSite {
        match self {
            EdgeKind::ThmTypeToDef
            | EdgeKind::ThmTypeToThm
            | EdgeKind::DefTypeToDef
            | EdgeKind::DefTypeToThm => DepSite::Type,
            _ => DepSite::Value,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeKind::ThmTypeToDef => "thm_type_to_def",
            EdgeKind::ThmTypeToThm => "thm_type_to_thm",
            EdgeKind::ThmValueToDef => "thm_value_to_def",
            EdgeKind::ThmValueToThm => "thm_value_to_thm",
            EdgeKind::DefTypeToDef => "def_type_to_def",
            EdgeKind::DefTypeToThm => "def_type_to_thm",
            EdgeKind::DefValueToDef => "def_value_to_def",
            EdgeKind::DefValueToThm => "def_value_to_thm",
        }
    }
}

macro_rules! str_enum {
    ($ty:ident, $what:literal) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = UnknownVariant;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                $ty::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str() == s)
                    .ok_or_else(|| UnknownVariant {
                        what: $what,
                        value: s.to_string(),
                    })
            }
        }
    };
}

str_enum!(DeclKind, "declaration kind");
str_enum!(AggKind, "aggregate kind");
str_enum!(DepSite, "dependency site");
str_enum!(Confidence, "confidence");
str_enum!(Progress, "progress");
str_enum!(EdgeKind, "edge kind");

/// A string that is not a member of the enumeration it was parsed as.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {what} `{value}`")]
pub struct UnknownVariant {
    pub what: &'static str,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Declaration {
    pub name: String,
    pub kind: DeclKind,
    pub module: String,
    pub metadata: NodeMetadata,
}

impl Declaration {
    pub fn new(name: impl Into<String>, kind: DeclKind) -> Self {
        Declaration {
            name: name.into(),
            kind,
            module: String::new(),
            metadata: NodeMetadata::default(),
        }
    }

    pub fn with_module(mut self, module: impl Into<String>) -> Self {
        self.module = module.into();
        self
    }

    pub fn with_sorry(mut self, has_sorry: bool) -> Self {
        self.metadata.has_sorry = has_sorry;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DepEdge {
    pub source: String,
    pub target: String,
    pub site: DepSite,
}

impl DepEdge {
    pub fn new(source: impl Into<String>, target: impl Into<String>, site: DepSite) -> Self {
        DepEdge {
            source: source.into(),
            target: target.into(),
            site,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectInfo {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision: Option<String>,
}

impl ProjectInfo {
    pub fn named(name: impl Into<String>) -> Self {
        ProjectInfo {
            name: name.into(),
            revision: None,
        }
    }
}

/// A structural problem found by [`validate_graph`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "violation", rename_all = "camelCase")]
pub enum Violation {
    InvalidName {
        name: String,
    },
    DuplicateName {
        name: String,
    },
    SelfEdge {
        name: String,
    },
    DanglingEdge {
        source: String,
        target: String,
        missing: String,
    },
    DuplicatePair {
        source: String,
        target: String,
    },
    AxiomValueDependency {
        source: String,
        target: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidName { name } => write!(f, "invalid name `{name}`"),
            Violation::DuplicateName { name } => write!(f, "duplicate name `{name}`"),
            Violation::SelfEdge { name } => write!(f, "self edge on `{name}`"),
            Violation::DanglingEdge {
                source,
                target,
                missing,
            } => write!(
                f,
                "dangling edge {source} -> {target}: `{missing}` is not declared"
            ),
            Violation::DuplicatePair { source, target } => {
                write!(f, "duplicate ordered pair {source} -> {target}")
            }
            Violation::AxiomValueDependency { source, target } => {
                write!(f, "axiom value dependency {source} -> {target}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} violations", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("declaration not found: {0}")]
    NotFound(String),
    #[error("invalid graph: {}", summarize(.0))]
    Invalid(ValidationReport),
}

fn summarize(report: &ValidationReport) -> String {
    report
        .violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Dot-separated, non-empty, and no empty components.
pub fn is_valid_name(name: &str) -> bool {
    !name.is_empty() && name.split('.').all(|part| !part.is_empty())
}

/// Checks declarations and edges against the graph invariants. Violations
/// are returned as data; an empty report means the parts form a valid graph.
pub fn validate_graph(decls: &[Declaration], edges: &[DepEdge]) -> ValidationReport {
    let mut violations = Vec::new();
    let mut kinds: HashMap<&str, DeclKind> = HashMap::with_capacity(decls.len());
    let mut reported_dup = HashSet::new();
    for d in decls {
        if !is_valid_name(&d.name) {
            violations.push(Violation::InvalidName {
                name: d.name.clone(),
            });
        }
        if kinds.insert(&d.name, d.kind).is_some() && reported_dup.insert(d.name.as_str()) {
            violations.push(Violation::DuplicateName {
                name: d.name.clone(),
            });
        }
    }

    let mut pairs = HashSet::with_capacity(edges.len());
    let mut reported_pair = HashSet::new();
    for e in edges {
        if e.source == e.target {
            violations.push(Violation::SelfEdge {
                name: e.source.clone(),
            });
        }
        for end in [&e.source, &e.target] {
            if !kinds.contains_key(end.as_str()) {
                violations.push(Violation::DanglingEdge {
                    source: e.source.clone(),
                    target: e.target.clone(),
                    missing: end.clone(),
                });
                if e.source == e.target {
                    break;
                }
            }
        }
        let pair = (e.source.as_str(), e.target.as_str());
        if !pairs.insert(pair) && reported_pair.insert(pair) {
            violations.push(Violation::DuplicatePair {
                source: e.source.clone(),
                target: e.target.clone(),
            });
        }
        if e.site == DepSite::Value && kinds.get(e.source.as_str()) == Some(&DeclKind::Axiom) {
            violations.push(Violation::AxiomValueDependency {
                source: e.source.clone(),
                target: e.target.clone(),
            });
        }
    }
    ValidationReport { violations }
}

/// Dense node index into a [`DependencyGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Borrowed view of an edge together with its endpoint declarations.
#[derive(Debug, Clone, Copy)]
pub struct EdgeRef<'g> {
    pub edge: &'g DepEdge,
    pub source: &'g Declaration,
    pub target: &'g Declaration,
    pub source_id: NodeId,
    pub target_id: NodeId,
}

impl EdgeRef<'_> {
    pub fn kind(&self) -> EdgeKind {
        EdgeKind::from_parts(self.source.kind, self.edge.site, self.target.kind)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependencyGraph {
    project: ProjectInfo,
    nodes: Vec<Declaration>,
    index: HashMap<String, NodeId>,
    edges: Vec<DepEdge>,
    ends: Vec<(NodeId, NodeId)>,
    forward: Vec<Vec<u32>>,
    reverse: Vec<Vec<u32>>,
}

impl DependencyGraph {
    /// Validates the parts and builds the graph, or reports every violation.
    pub fn from_parts(
        project: ProjectInfo,
        mut decls: Vec<Declaration>,
        mut edges: Vec<DepEdge>,
    ) -> Result<Self, GraphError> {
        let report = validate_graph(&decls, &edges);
        if !report.is_empty() {
            return Err(GraphError::Invalid(report));
        }
        decls.sort_by(|a, b| a.name.cmp(&b.name));
        edges.sort_by(|a, b| (&a.source, &a.target).cmp(&(&b.source, &b.target)));

        let index: HashMap<String, NodeId> = decls
            .iter()
            .enumerate()
            .map(|(i, d)| (d.name.clone(), NodeId(i as u32)))
            .collect();
        let mut forward = vec![Vec::new(); decls.len()];
        let mut reverse = vec![Vec::new(); decls.len()];
        let ends = edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let s = index[&e.source];
                let t = index[&e.target];
                forward[s.index()].push(i as u32);
                reverse[t.index()].push(i as u32);
                (s, t)
            })
            .collect();
        Ok(DependencyGraph {
            project,
            nodes: decls,
            index,
            edges,
            ends,
            forward,
            reverse,
        })
    }

    pub fn empty(project: ProjectInfo) -> Self {
        DependencyGraph::from_parts(project, Vec::new(), Vec::new()).expect("empty graph is valid")
    }

    pub fn project(&self) -> &ProjectInfo {
        &self.project
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Declarations in name order.
    pub fn nodes(&self) -> &[Declaration] {
        &self.nodes
    }

    /// Edges in `(source, target)` order.
    pub fn edges(&self) -> &[DepEdge] {
        &self.edges
    }

    pub fn id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<NodeId, GraphError> {
        self.id(name)
            .ok_or_else(|| GraphError::NotFound(name.to_string()))
    }

    pub fn get(&self, name: &str) -> Option<&Declaration> {
        self.id(name).map(|id| self.decl(id))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn decl(&self, id: NodeId) -> &Declaration {
        &self.nodes[id.index()]
    }

    fn edge_ref(&self, i: u32) -> EdgeRef<'_> {
        let (s, t) = self.ends[i as usize];
        EdgeRef {
            edge: &self.edges[i as usize],
            source: &self.nodes[s.index()],
            target: &self.nodes[t.index()],
            source_id: s,
            target_id: t,
        }
    }

    pub fn edge_refs(&self) -> impl Iterator<Item = EdgeRef<'_>> + '_ {
        (0..self.edges.len() as u32).map(move |i| self.edge_ref(i))
    }

    pub fn out_edges(&self, id: NodeId) -> impl Iterator<Item = EdgeRef<'_>> + '_ {
        self.forward[id.index()]
            .iter()
            .map(move |&i| self.edge_ref(i))
    }

    pub fn in_edges(&self, id: NodeId) -> impl Iterator<Item = EdgeRef<'_>> + '_ {
        self.reverse[id.index()]
            .iter()
            .map(move |&i| self.edge_ref(i))
    }

    pub fn axioms(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, d)| d.kind == DeclKind::Axiom)
            .map(|(i, _)| NodeId(i as u32))
    }

    /// Classifies an edge by looking up both endpoints in this graph.
    pub fn classify_edge(&self, edge: &DepEdge) -> Result<EdgeKind, GraphError> {
        let s = self.require(&edge.source)?;
        let t = self.require(&edge.target)?;
        Ok(EdgeKind::from_parts(
            self.decl(s).kind,
            edge.site,
            self.decl(t).kind,
        ))
    }

    /// Re-runs structural validation. A graph built through [`from_parts`]
    /// always yields an empty report.
    ///
    /// [`from_parts`]: DependencyGraph::from_parts
    pub fn validate(&self) -> ValidationReport {
        validate_graph(&self.nodes, &self.edges)
    }

    /// Returns a copy with metadata replaced on the named nodes, plus the names
    /// that did not match any declaration.
    pub fn with_metadata<'a, I>(&self, updates: I) -> (DependencyGraph, Vec<String>)
    where
        I: IntoIterator<Item = (&'a str, NodeMetadata)>,
    {
        let mut next = self.clone();
        let mut unknown = Vec::new();
        for (name, meta) in updates {
            match self.id(name) {
                Some(id) => next.nodes[id.index()].metadata = meta,
                None => unknown.push(name.to_string()),
            }
        }
        (next, unknown)
    }

    /// Visited bitmap of the closure of `start` under edges accepted by `traverse`.
    pub fn reachable_ids<F>(&self, start: &[NodeId], mut traverse: F) -> Vec<bool>
    where
        F: FnMut(&EdgeRef<'_>) -> bool,
    {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::with_capacity(start.len());
        for &s in start {
            if !seen[s.index()] {
                seen[s.index()] = true;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            for e in self.out_edges(u) {
                if !seen[e.target_id.index()] && traverse(&e) {
                    seen[e.target_id.index()] = true;
                    queue.push_back(e.target_id);
                }
            }
        }
        seen
    }

    pub fn names_of(&self, seen: &[bool]) -> BTreeSet<String> {
        seen.iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| self.nodes[i].name.clone())
            .collect()
    }

    pub fn resolve<'a, I>(&self, names: I) -> Result<Vec<NodeId>, GraphError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        names.into_iter().map(|n| self.require(n)).collect()
    }
}

/// Smallest superset of `start` closed under the edges accepted by `traverse`.
pub fn reachable<'a, I, F>(
    graph: &DependencyGraph,
    start: I,
    traverse: F,
) -> Result<BTreeSet<String>, GraphError>
where
    I: IntoIterator<Item = &'a str>,
    F: FnMut(&EdgeRef<'_>) -> bool,
{
    let ids = graph.resolve(start)?;
    Ok(graph.names_of(&graph.reachable_ids(&ids, traverse)))
}

/// Incremental construction with dependency merging: declaring the same
/// ordered pair twice keeps one edge, and a type-site occurrence wins over a
/// value-site one.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    project: ProjectInfo,
    decls: Vec<Declaration>,
    edges: HashMap<(String, String), DepSite>,
}

impl GraphBuilder {
    pub fn new(project: ProjectInfo) -> Self {
        GraphBuilder {
            project,
            ..Default::default()
        }
    }

    pub fn declare(&mut self, name: impl Into<String>, kind: DeclKind) -> &mut Self {
        self.decls.push(Declaration::new(name, kind));
        self
    }

    pub fn declaration(&mut self, decl: Declaration) -> &mut Self {
        self.decls.push(decl);
        self
    }

    pub fn depend(
        &mut self,
        source: impl Into<String>,
        target: impl Into<String>,
        site: DepSite,
    ) -> &mut Self {
        let slot = self
            .edges
            .entry((source.into(), target.into()))
            .or_insert(site);
        if site == DepSite::Type {
            *slot = DepSite::Type;
        }
        self
    }

    pub fn build(self) -> Result<DependencyGraph, GraphError> {
        let edges = self
            .edges
            .into_iter()
            .map(|((source, target), site)| DepEdge {
                source,
                target,
                site,
            })
            .collect();
        DependencyGraph::from_parts(self.project, self.decls, edges)
    }
}

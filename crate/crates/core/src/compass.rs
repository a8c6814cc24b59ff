//! Review-set extraction.
//!
//! Starting from a set of target declarations, follow every dependency
//! except the ones that come from a theorem's proof (theorem source,
//! value site). What is reached, together with the axioms, is the set of
//! declarations whose meaning can still change what the targets state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AggKind, DeclKind, DepEdge, DepSite, DependencyGraph, GraphError, NodeId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase")]
pub struct CompassOptions {
    /// Add axioms to the kept set even when no traversal reaches them.
    pub include_all_axioms: bool,
    /// Only add the axioms that lie inside the union of the review cones.
    /// Has no effect unless `include_all_axioms` is set.
    pub restrict_axioms_to_cone: bool,
}

impl Default for CompassOptions {
    fn default() -> Self {
        CompassOptions {
            include_all_axioms: true,
            restrict_axioms_to_cone: false,
        }
    }
}

impl CompassOptions {
    pub fn all_axioms() -> Self {
        CompassOptions::default()
    }

    pub fn cone_axioms() -> Self {
        CompassOptions {
            include_all_axioms: true,
            restrict_axioms_to_cone: true,
        }
    }

    pub fn no_axioms() -> Self {
        CompassOptions {
            include_all_axioms: false,
            restrict_axioms_to_cone: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompassError {
    #[error("no targets given")]
    EmptyTargets,
    #[error("unknown target(s): {}", .0.join(", "))]
    UnknownTargets(Vec<String>),
    #[error("review cone size must be at least 1")]
    EmptyCone,
}

impl From<GraphError> for CompassError {
    fn from(err: GraphError) -> Self {
        match err {
            GraphError::NotFound(name) => CompassError::UnknownTargets(vec![name]),
            GraphError::Invalid(report) => {
                unreachable!("graphs are validated at construction: {report:?}")
            }
        }
    }
}

/// False exactly for proof-level dependencies: the source aggregates to a
/// theorem and the dependency sits in the value.
pub fn should_traverse(edge: &DepEdge, source_kind: DeclKind) -> bool {
    !(source_kind.aggregate() == AggKind::Theorem && edge.site == DepSite::Value)
}

/// Node reduction `1 - kept / cone`, kept as the two counts so the
/// percentage can be rounded exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Reduction {
    cone: usize,
    kept: usize,
}

impl Reduction {
    pub fn cone_size(&self) -> usize {
        self.cone
    }

    pub fn kept_size(&self) -> usize {
        self.kept
    }

    pub fn ratio(&self) -> f64 {
        (self.cone as f64 - self.kept as f64) / self.cone as f64
    }

    pub fn is_negative(&self) -> bool {
        self.kept > self.cone
    }

    /// The reduction in tenths of a percent, rounded half-up:
    /// `floor(1000 * (cone - kept) / cone + 1/2)`.
    pub fn tenths_of_percent(&self) -> i64 {
        let cone = self.cone as i128;
        let diff = cone - self.kept as i128;
        (2000 * diff + cone).div_euclid(2 * cone) as i64
    }

    /// One decimal place, e.g. `93.8%`.
    pub fn percent(&self) -> String {
        format_tenths(self.tenths_of_percent())
    }
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.percent())
    }
}

pub(crate) fn format_tenths(tenths: i64) -> String {
    let sign = if tenths < 0 { "-" } else { "" };
    let abs = tenths.unsigned_abs();
    format!("{sign}{}.{}%", abs / 10, abs % 10)
}

pub fn reduction_rate(cone_size: usize, kept_size: usize) -> Result<Reduction, CompassError> {
    if cone_size == 0 {
        return Err(CompassError::EmptyCone);
    }
    Ok(Reduction {
        cone: cone_size,
        kept: kept_size,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompassResult {
    pub targets: BTreeSet<String>,
    pub review_cone: BTreeMap<String, BTreeSet<String>>,
    pub kept_nodes: BTreeSet<String>,
    pub axiom_nodes: BTreeSet<String>,
    /// Pruned edges whose source lies in the union of the review cones.
    pub pruned_edge_count: usize,
    /// `|run_compass({m}).keptNodes|` for each target.
    pub per_target_kept: BTreeMap<String, usize>,
    pub per_target_reduction: BTreeMap<String, f64>,
    /// Reduction of the whole kept set against the union of the cones.
    pub combined_reduction: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

pub(crate) fn resolve_targets<'a, I>(
    graph: &DependencyGraph,
    targets: I,
) -> Result<Vec<NodeId>, CompassError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut ids = Vec::new();
    let mut unknown = Vec::new();
    for name in targets {
        match graph.id(name) {
            Some(id) => ids.push(id),
            None => unknown.push(name.to_string()),
        }
    }
    if !unknown.is_empty() {
        unknown.sort();
        unknown.dedup();
        return Err(CompassError::UnknownTargets(unknown));
    }
    if ids.is_empty() {
        return Err(CompassError::EmptyTargets);
    }
    ids.sort();
    ids.dedup();
    Ok(ids)
}

pub(crate) fn cone_ids(graph: &DependencyGraph, start: &[NodeId]) -> Vec<bool> {
    graph.reachable_ids(start, |_| true)
}

/// BFS over traversable edges plus the axiom set chosen by `options`.
/// Returns `(kept, axioms)` bitmaps.
pub(crate) fn kept_ids(
    graph: &DependencyGraph,
    start: &[NodeId],
    options: CompassOptions,
) -> (Vec<bool>, Vec<bool>) {
    let mut kept = graph.reachable_ids(start, |e| should_traverse(e.edge, e.source.kind));
    let mut axioms = vec![false; graph.node_count()];
    if options.include_all_axioms {
        let cone = options
            .restrict_axioms_to_cone
            .then(|| cone_ids(graph, start));
        for a in graph.axioms() {
            if cone.as_ref().is_none_or(|c| c[a.index()]) {
                axioms[a.index()] = true;
                kept[a.index()] = true;
            }
        }
    }
    (kept, axioms)
}

fn count(bits: &[bool]) -> usize {
    bits.iter().filter(|&&b| b).count()
}

/// Runs the pruned traversal for `targets` and gathers the per-target cones
/// and reductions.
pub fn run_compass<'a, I>(
    graph: &DependencyGraph,
    targets: I,
    options: CompassOptions,
) -> Result<CompassResult, CompassError>
where
    I: IntoIterator<Item = &'a str>,
{
    let ids = resolve_targets(graph, targets)?;
    let (kept, axioms) = kept_ids(graph, &ids, options);

    let mut warnings = Vec::new();
    let mut review_cone = BTreeMap::new();
    let mut per_target_kept = BTreeMap::new();
    let mut per_target_reduction = BTreeMap::new();
    let mut union_cone = vec![false; graph.node_count()];
    for &id in &ids {
        let decl = graph.decl(id);
        if decl.kind != DeclKind::Theorem {
            warnings.push(format!(
                "target `{}` is a {}, not a theorem",
                decl.name, decl.kind
            ));
        }
        let cone = cone_ids(graph, &[id]);
        let (single, _) = kept_ids(graph, &[id], options);
        let reduction = reduction_rate(count(&cone), count(&single))?;
        for (u, &c) in union_cone.iter_mut().zip(&cone) {
            *u |= c;
        }
        per_target_kept.insert(decl.name.clone(), count(&single));
        per_target_reduction.insert(decl.name.clone(), reduction.ratio());
        review_cone.insert(decl.name.clone(), graph.names_of(&cone));
    }

    let pruned_edge_count = graph
        .edge_refs()
        .filter(|e| union_cone[e.source_id.index()] && !should_traverse(e.edge, e.source.kind))
        .count();
    let combined = reduction_rate(count(&union_cone), count(&kept))?;

    Ok(CompassResult {
        targets: ids.iter().map(|&id| graph.decl(id).name.clone()).collect(),
        review_cone,
        kept_nodes: graph.names_of(&kept),
        axiom_nodes: graph.names_of(&axioms),
        pruned_edge_count,
        per_target_kept,
        per_target_reduction,
        combined_reduction: combined.ratio(),
        warnings,
    })
}

/// Every declaration reachable from `target` before pruning, the target included.
pub fn review_cone(graph: &DependencyGraph, target: &str) -> Result<BTreeSet<String>, GraphError> {
    let id = graph.require(target)?;
    Ok(graph.names_of(&cone_ids(graph, &[id])))
}

/// Reference implementation of [`run_compass`]'s kept set for testing.
///
/// Materializes the pruned edge list by name and expands the target set until
/// a full pass over the list adds nothing. Shares no traversal code with the
/// queue-based implementation.
pub fn brute_force_compass<'a, I>(
    graph: &DependencyGraph,
    targets: I,
    options: CompassOptions,
) -> Result<BTreeSet<String>, CompassError>
where
    I: IntoIterator<Item = &'a str>,
{
    let targets: Vec<&str> = targets.into_iter().collect();
    let mut unknown: Vec<String> = targets
        .iter()
        .filter(|t| !graph.contains(t))
        .map(|t| t.to_string())
        .collect();
    if !unknown.is_empty() {
        unknown.sort();
        unknown.dedup();
        return Err(CompassError::UnknownTargets(unknown));
    }
    if targets.is_empty() {
        return Err(CompassError::EmptyTargets);
    }

    let kind_of = |name: &str| {
        graph
            .get(name)
            .map(|d| d.kind)
            .expect("edge endpoint exists")
    };
    let pruned: Vec<(&str, &str)> = graph
        .edges()
        .iter()
        .filter(|e| should_traverse(e, kind_of(&e.source)))
        .map(|e| (e.source.as_str(), e.target.as_str()))
        .collect();
    let all: Vec<(&str, &str)> = graph
        .edges()
        .iter()
        .map(|e| (e.source.as_str(), e.target.as_str()))
        .collect();

    let mut kept = fixed_point(&targets, &pruned);
    if options.include_all_axioms {
        let cone = options
            .restrict_axioms_to_cone
            .then(|| fixed_point(&targets, &all));
        for d in graph.nodes() {
            if d.kind == DeclKind::Axiom && cone.as_ref().is_none_or(|c| c.contains(&d.name)) {
                kept.insert(d.name.clone());
            }
        }
    }
    Ok(kept)
}

fn fixed_point(start: &[&str], edges: &[(&str, &str)]) -> BTreeSet<String> {
    let mut set: BTreeSet<String> = start.iter().map(|s| s.to_string()).collect();
    loop {
        let before = set.len();
        for &(s, t) in edges {
            if set.contains(s) && !set.contains(t) {
                set.insert(t.to_string());
            }
        }
        if set.len() == before {
            return set;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Declaration, ProjectInfo};

    fn names(list: &[&str]) -> BTreeSet<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    // T -value-> L -value-> D ; T -type-> E -value-> F ; axiom X
    fn six_node() -> DependencyGraph {
        DependencyGraph::from_parts(
            ProjectInfo::named("fixture"),
            vec![
                Declaration::new("T", DeclKind::Theorem),
                Declaration::new("L", DeclKind::Theorem),
                Declaration::new("D", DeclKind::Definition),
                Declaration::new("E", DeclKind::Definition),
                Declaration::new("F", DeclKind::Definition),
                Declaration::new("X", DeclKind::Axiom),
            ],
            vec![
                DepEdge::new("T", "L", DepSite::Value),
                DepEdge::new("L", "D", DepSite::Value),
                DepEdge::new("T", "E", DepSite::Type),
                DepEdge::new("E", "F", DepSite::Value),
            ],
        )
        .unwrap()
    }

    #[test]
    fn traverse_rule() {
        let v = DepEdge::new("a", "b", DepSite::Value);
        let t = DepEdge::new("a", "b", DepSite::Type);
        assert!(!should_traverse(&v, DeclKind::Theorem));
        assert!(should_traverse(&t, DeclKind::Theorem));
        assert!(should_traverse(&v, DeclKind::Definition));
        assert!(should_traverse(&v, DeclKind::Structure));
        assert!(should_traverse(&t, DeclKind::Axiom));
    }

    #[test]
    fn six_node_fixture() {
        let g = six_node();
        let r = run_compass(&g, ["T"], CompassOptions::default()).unwrap();
        assert_eq!(r.kept_nodes, names(&["E", "F", "T", "X"]));
        assert_eq!(r.axiom_nodes, names(&["X"]));
        assert_eq!(r.review_cone["T"], names(&["D", "E", "F", "L", "T"]));
        assert_eq!(r.pruned_edge_count, 2);
        assert_eq!(r.per_target_kept["T"], 4);
        assert!((r.per_target_reduction["T"] - 0.2).abs() < 1e-12);
        assert!(r.warnings.is_empty());

        let cone = run_compass(&g, ["T"], CompassOptions::cone_axioms()).unwrap();
        assert_eq!(cone.kept_nodes, names(&["E", "F", "T"]));
        assert!(cone.axiom_nodes.is_empty());
        assert_eq!(
            brute_force_compass(&g, ["T"], CompassOptions::default()).unwrap(),
            r.kept_nodes
        );
    }

    #[test]
    fn axiom_source_edge_is_kept() {
        // X (axiom) -type-> T2 (theorem) ; classification def_type_to_thm.
        let g = DependencyGraph::from_parts(
            ProjectInfo::default(),
            vec![
                Declaration::new("T", DeclKind::Theorem),
                Declaration::new("X", DeclKind::Axiom),
                Declaration::new("T2", DeclKind::Theorem),
                Declaration::new("D", DeclKind::Definition),
            ],
            vec![
                DepEdge::new("T", "X", DepSite::Type),
                DepEdge::new("X", "T2", DepSite::Type),
                DepEdge::new("T2", "D", DepSite::Value),
            ],
        )
        .unwrap();
        let kept = run_compass(&g, ["T"], CompassOptions::no_axioms()).unwrap();
        assert_eq!(kept.kept_nodes, names(&["T", "T2", "X"]));
        assert_eq!(
            brute_force_compass(&g, ["T"], CompassOptions::no_axioms()).unwrap(),
            kept.kept_nodes
        );
    }

    #[test]
    fn isolated_theorem() {
        let g = DependencyGraph::from_parts(
            ProjectInfo::default(),
            vec![Declaration::new("T", DeclKind::Theorem)],
            vec![],
        )
        .unwrap();
        let r = run_compass(&g, ["T"], CompassOptions::default()).unwrap();
        assert_eq!(r.kept_nodes, names(&["T"]));
        assert_eq!(r.review_cone["T"], names(&["T"]));
        assert_eq!(r.per_target_reduction["T"], 0.0);
        assert_eq!(r.combined_reduction, 0.0);
    }

    #[test]
    fn target_errors() {
        let g = six_node();
        assert_eq!(
            run_compass(&g, [], CompassOptions::default()).unwrap_err(),
            CompassError::EmptyTargets
        );
        assert_eq!(
            run_compass(&g, ["T", "Q", "P"], CompassOptions::default()).unwrap_err(),
            CompassError::UnknownTargets(vec!["P".into(), "Q".into()])
        );
        assert_eq!(
            brute_force_compass(&g, ["Q"], CompassOptions::default()).unwrap_err(),
            CompassError::UnknownTargets(vec!["Q".into()])
        );
        assert_eq!(
            brute_force_compass(&g, [], CompassOptions::default()).unwrap_err(),
            CompassError::EmptyTargets
        );
    }

    #[test]
    fn non_theorem_target_warns() {
        let g = six_node();
        let r = run_compass(&g, ["E"], CompassOptions::default()).unwrap();
        assert_eq!(
            r.warnings,
            vec!["target `E` is a definition, not a theorem".to_string()]
        );
        assert_eq!(r.kept_nodes, names(&["E", "F", "X"]));
    }

    #[test]
    fn cone_chain() {
        let g = DependencyGraph::from_parts(
            ProjectInfo::default(),
            vec![
                Declaration::new("T", DeclKind::Theorem),
                Declaration::new("A", DeclKind::Theorem),
                Declaration::new("B", DeclKind::Definition),
            ],
            vec![
                DepEdge::new("T", "A", DepSite::Value),
                DepEdge::new("A", "B", DepSite::Value),
            ],
        )
        .unwrap();
        assert_eq!(review_cone(&g, "T").unwrap(), names(&["A", "B", "T"]));
        assert!(review_cone(&g, "nope").is_err());
    }

    #[test]
    fn reduction_values() {
        assert_eq!(reduction_rate(315, 1).unwrap().percent(), "99.7%");
        assert!((reduction_rate(315, 1).unwrap().ratio() - 0.99683).abs() < 1e-5);
        assert_eq!(reduction_rate(9, 8).unwrap().percent(), "11.1%");
        assert_eq!(reduction_rate(4, 2).unwrap().percent(), "50.0%");
        assert_eq!(reduction_rate(227, 14).unwrap().percent(), "93.8%");
        assert_eq!(reduction_rate(7, 7).unwrap().ratio(), 0.0);
        assert_eq!(reduction_rate(7, 7).unwrap().percent(), "0.0%");
        assert_eq!(reduction_rate(0, 0).unwrap_err(), CompassError::EmptyCone);
    }

    #[test]
    fn reduction_rounds_half_up_exactly() {
        // 45/48 = 93.75% sits exactly on the half.
        assert_eq!(reduction_rate(48, 3).unwrap().percent(), "93.8%");
        // 1 - 1/2000 = 99.95%
        assert_eq!(reduction_rate(2000, 1).unwrap().percent(), "100.0%");
        assert_eq!(reduction_rate(1, 0).unwrap().percent(), "100.0%");
    }

    #[test]
    fn negative_reduction_is_surfaced() {
        let r = reduction_rate(4, 5).unwrap();
        assert!(r.is_negative());
        assert_eq!(r.ratio(), -0.25);
        assert_eq!(r.percent(), "-25.0%");
        // -1/3 = -33.333..%
        assert_eq!(reduction_rate(3, 4).unwrap().percent(), "-33.3%");
        // -12.25% rounds half-up towards +inf
        assert_eq!(reduction_rate(400, 449).unwrap().percent(), "-12.2%");
    }
}

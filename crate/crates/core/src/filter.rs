//! Twelve independent filter axes, combined by conjunction.
//!
//! Node axes: declaration kind, aggregate kind, confidence lower and upper
//! bounds, proof progress, definition progress, sorry status, namespace
//! prefix, name glob and scope. Edge axes: edge kind and dependency site.
//! Edge axes only ever drop edges, never nodes.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compass::{cone_ids, kept_ids, resolve_targets, CompassError, CompassOptions};
use crate::graph::{
    AggKind, Confidence, DeclKind, Declaration, DepEdge, DepSite, DependencyGraph, EdgeKind,
    Progress, UnknownVariant,
};

/// Revision of the axis set; bump when axes are added or reinterpreted.
pub const FILTER_AXES_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Scope {
    All,
    ReviewConeOf { targets: Vec<String> },
    CompassKeptOf { targets: Vec<String> },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, rename_all = "camelCase", deny_unknown_fields)]
pub struct FilterSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decl_kind: Option<BTreeSet<DeclKind>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub agg_kind: Option<BTreeSet<AggKind>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence_at_least: Option<Confidence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence_at_most: Option<Confidence>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proof_progress: Option<BTreeSet<Progress>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub def_progress: Option<BTreeSet<Progress>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub has_sorry: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_kind: Option<BTreeSet<EdgeKind>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dep_site: Option<BTreeSet<DepSite>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub namespace_prefix: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name_pattern: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scope: Option<Scope>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FilterError {
    #[error("unknown filter parameter `{0}`")]
    UnknownParameter(String),
    #[error("invalid value for `{param}`: {reason}")]
    InvalidValue { param: String, reason: String },
    #[error("invalid name pattern `{pattern}`: {reason}")]
    Pattern { pattern: String, reason: String },
    #[error("scope `{0}` requires at least one target")]
    MissingTargets(&'static str),
    #[error("`targets` given without a scope")]
    TargetsWithoutScope,
    #[error("unknown scope target(s): {}", .0.join(", "))]
    UnknownTargets(Vec<String>),
}

/// `*` and `?` glob over the characters of a name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Glob {
    pattern: Vec<char>,
}

impl Glob {
    pub fn new(pattern: &str) -> Result<Self, FilterError> {
        if let Some(c) = pattern
            .chars()
            .find(|c| matches!(c, '[' | ']' | '{' | '}' | '\\'))
        {
            return Err(FilterError::Pattern {
                pattern: pattern.to_string(),
                reason: format!("unsupported metacharacter `{c}` (only `*` and `?` are allowed)"),
            });
        }
        Ok(Glob {
            pattern: pattern.chars().collect(),
        })
    }

    pub fn matches(&self, text: &str) -> bool {
        let text: Vec<char> = text.chars().collect();
        let (mut p, mut t) = (0, 0);
        let mut star: Option<(usize, usize)> = None;
        while t < text.len() {
            match self.pattern.get(p) {
                Some('*') => {
                    star = Some((p, t));
                    p += 1;
                }
                Some('?') => {
                    p += 1;
                    t += 1;
                }
                Some(&c) if c == text[t] => {
                    p += 1;
                    t += 1;
                }
                _ => match star {
                    Some((sp, st)) => {
                        p = sp + 1;
                        t = st + 1;
                        star = Some((sp, st + 1));
                    }
                    None => return false,
                },
            }
        }
        self.pattern[p..].iter().all(|&c| c == '*')
    }
}

/// `Foo` matches `Foo` and `Foo.bar` but not `Foobar`; `Foo.` is a plain prefix.
pub fn in_namespace(name: &str, prefix: &str) -> bool {
    if prefix.is_empty() || prefix.ends_with('.') {
        return name.starts_with(prefix);
    }
    name.strip_prefix(prefix)
        .is_some_and(|rest| rest.is_empty() || rest.starts_with('.'))
}

fn set_contains<T: Ord>(set: &Option<BTreeSet<T>>, value: &T) -> bool {
    set.as_ref().is_none_or(|s| s.contains(value))
}

impl FilterSpec {
    pub fn is_empty(&self) -> bool {
        *self == FilterSpec::default()
    }

    fn node_attrs_match(&self, d: &Declaration, glob: Option<&Glob>) -> bool {
        let m = &d.metadata;
        set_contains(&self.decl_kind, &d.kind)
            && set_contains(&self.agg_kind, &d.kind.aggregate())
            && self.confidence_at_least.is_none_or(|c| m.confidence >= c)
            && self.confidence_at_most.is_none_or(|c| m.confidence <= c)
            && set_contains(&self.proof_progress, &m.proof_progress)
            && set_contains(&self.def_progress, &m.def_progress)
            && self.has_sorry.is_none_or(|s| m.has_sorry == s)
            && self
                .namespace_prefix
                .as_deref()
                .is_none_or(|p| in_namespace(&d.name, p))
            && glob.is_none_or(|g| g.matches(&d.name))
    }

    fn edge_attrs_match(&self, kind: EdgeKind, site: DepSite) -> bool {
        set_contains(&self.edge_kind, &kind) && set_contains(&self.dep_site, &site)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GraphView {
    /// Retained declaration names, in name order.
    pub nodes: Vec<String>,
    /// Retained edges, in `(source, target)` order.
    pub edges: Vec<DepEdge>,
    pub spec: FilterSpec,
}

impl GraphView {
    /// The view as a graph of its own: retained declarations with their
    /// metadata, and retained edges only.
    pub fn subgraph(&self, graph: &DependencyGraph) -> DependencyGraph {
        let decls = self
            .nodes
            .iter()
            .map(|n| {
                graph
                    .get(n)
                    .expect("view nodes come from the graph")
                    .clone()
            })
            .collect();
        DependencyGraph::from_parts(graph.project().clone(), decls, self.edges.clone())
            .expect("a view of a valid graph is valid")
    }
}

pub fn apply_filters(graph: &DependencyGraph, spec: &FilterSpec) -> Result<GraphView, FilterError> {
    apply_filters_with(graph, spec, CompassOptions::default())
}

/// Like [`apply_filters`], with explicit options for `compassKeptOf` scopes.
pub fn apply_filters_with(
    graph: &DependencyGraph,
    spec: &FilterSpec,
    options: CompassOptions,
) -> Result<GraphView, FilterError> {
    let glob = spec.name_pattern.as_deref().map(Glob::new).transpose()?;
    let scope = match &spec.scope {
        None | Some(Scope::All) => None,
        Some(Scope::ReviewConeOf { targets }) => {
            let ids = scope_targets(graph, targets, "reviewConeOf")?;
            Some(cone_ids(graph, &ids))
        }
        Some(Scope::CompassKeptOf { targets }) => {
            let ids = scope_targets(graph, targets, "compassKeptOf")?;
            Some(kept_ids(graph, &ids, options).0)
        }
    };

    let keep: Vec<bool> = graph
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, d)| {
            scope.as_ref().is_none_or(|s| s[i]) && spec.node_attrs_match(d, glob.as_ref())
        })
        .collect();
    let nodes = graph
        .nodes()
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(d, _)| d.name.clone())
        .collect();
    let edges = graph
        .edge_refs()
        .filter(|e| {
            keep[e.source_id.index()]
                && keep[e.target_id.index()]
                && spec.edge_attrs_match(e.kind(), e.edge.site)
        })
        .map(|e| e.edge.clone())
        .collect();
    Ok(GraphView {
        nodes,
        edges,
        spec: spec.clone(),
    })
}

fn scope_targets(
    graph: &DependencyGraph,
    targets: &[String],
    scope: &'static str,
) -> Result<Vec<crate::graph::NodeId>, FilterError> {
    resolve_targets(graph, targets.iter().map(String::as_str)).map_err(|e| match e {
        CompassError::EmptyTargets => FilterError::MissingTargets(scope),
        CompassError::UnknownTargets(names) => FilterError::UnknownTargets(names),
        CompassError::EmptyCone => unreachable!("target resolution does not compute cones"),
    })
}

// Flat query-parameter encoding: one parameter per axis, comma-separated sets.

const PARAMS: [&str; 13] = [
    "declKind",
    "aggKind",
    "confidenceAtLeast",
    "confidenceAtMost",
    "proofProgress",
    "defProgress",
    "hasSorry",
    "edgeKind",
    "depSite",
    "namespacePrefix",
    "namePattern",
    "scope",
    "targets",
];

fn invalid(param: &str, reason: impl fmt::Display) -> FilterError {
    FilterError::InvalidValue {
        param: param.to_string(),
        reason: reason.to_string(),
    }
}

fn parse_set<T: FromStr<Err = UnknownVariant> + Ord>(
    param: &str,
    value: &str,
) -> Result<BTreeSet<T>, FilterError> {
    value
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| invalid(param, e)))
        .collect()
}

fn required_targets(
    targets: Option<Vec<String>>,
    scope: &'static str,
) -> Result<Vec<String>, FilterError> {
    match targets {
        Some(t) if !t.is_empty() => Ok(t),
        _ => Err(FilterError::MissingTargets(scope)),
    }
}

fn join<T: fmt::Display>(set: &BTreeSet<T>) -> String {
    set.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

impl FilterSpec {
    /// Decodes already percent-decoded `(name, value)` pairs.
    pub fn from_query_pairs<I, K, V>(pairs: I) -> Result<FilterSpec, FilterError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut spec = FilterSpec::default();
        let mut scope_name: Option<String> = None;
        let mut targets: Option<Vec<String>> = None;
        for (k, v) in pairs {
            let (k, v) = (k.as_ref(), v.as_ref());
            match k {
                "declKind" => spec.decl_kind = Some(parse_set(k, v)?),
                "aggKind" => spec.agg_kind = Some(parse_set(k, v)?),
                "confidenceAtLeast" => {
                    spec.confidence_at_least = Some(v.parse().map_err(|e| invalid(k, e))?)
                }
                "confidenceAtMost" => {
                    spec.confidence_at_most = Some(v.parse().map_err(|e| invalid(k, e))?)
                }
                "proofProgress" => spec.proof_progress = Some(parse_set(k, v)?),
                "defProgress" => spec.def_progress = Some(parse_set(k, v)?),
                "hasSorry" => {
                    spec.has_sorry = Some(match v {
                        "true" => true,
                        "false" => false,
                        _ => return Err(invalid(k, format!("expected true or false, got `{v}`"))),
                    })
                }
                "edgeKind" => spec.edge_kind = Some(parse_set(k, v)?),
                "depSite" => spec.dep_site = Some(parse_set(k, v)?),
                "namespacePrefix" => spec.namespace_prefix = Some(v.to_string()),
                "namePattern" => {
                    Glob::new(v)?;
                    spec.name_pattern = Some(v.to_string());
                }
                "scope" => scope_name = Some(v.to_string()),
                "targets" => {
                    targets = Some(
                        v.split(',')
                            .filter(|s| !s.is_empty())
                            .map(str::to_string)
                            .collect(),
                    )
                }
                other => return Err(FilterError::UnknownParameter(other.to_string())),
            }
        }
        spec.scope = match scope_name.as_deref() {
            None => {
                if targets.is_some() {
                    return Err(FilterError::TargetsWithoutScope);
                }
                None
            }
            Some("all") => {
                if targets.is_some() {
                    return Err(FilterError::TargetsWithoutScope);
                }
                Some(Scope::All)
            }
            Some("reviewConeOf") => Some(Scope::ReviewConeOf {
                targets: required_targets(targets, "reviewConeOf")?,
            }),
            Some("compassKeptOf") => Some(Scope::CompassKeptOf {
                targets: required_targets(targets, "compassKeptOf")?,
            }),
            Some(other) => {
                return Err(invalid(
                    "scope",
                    format!("expected all, reviewConeOf or compassKeptOf, got `{other}`"),
                ))
            }
        };
        Ok(spec)
    }

    /// Parses a raw (percent-encoded) query string such as
    /// `declKind=theorem,axiom&hasSorry=true`.
    pub fn from_query(query: &str) -> Result<FilterSpec, FilterError> {
        FilterSpec::from_query_pairs(form_urlencoded::parse(
            query.trim_start_matches('?').as_bytes(),
        ))
    }

    /// Parameters in a fixed order, values unencoded.
    pub fn to_query_pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        push(PARAMS[0], self.decl_kind.as_ref().map(join));
        push(PARAMS[1], self.agg_kind.as_ref().map(join));
        push(PARAMS[2], self.confidence_at_least.map(|c| c.to_string()));
        push(PARAMS[3], self.confidence_at_most.map(|c| c.to_string()));
        push(PARAMS[4], self.proof_progress.as_ref().map(join));
        push(PARAMS[5], self.def_progress.as_ref().map(join));
        push(PARAMS[6], self.has_sorry.map(|b| b.to_string()));
        push(PARAMS[7], self.edge_kind.as_ref().map(join));
        push(PARAMS[8], self.dep_site.as_ref().map(join));
        push(PARAMS[9], self.namespace_prefix.clone());
        push(PARAMS[10], self.name_pattern.clone());
        match &self.scope {
            None => {}
            Some(Scope::All) => push(PARAMS[11], Some("all".into())),
            Some(Scope::ReviewConeOf { targets }) => {
                push(PARAMS[11], Some("reviewConeOf".into()));
                push(PARAMS[12], Some(targets.join(",")));
            }
            Some(Scope::CompassKeptOf { targets }) => {
                push(PARAMS[11], Some("compassKeptOf".into()));
                push(PARAMS[12], Some(targets.join(",")));
            }
        }
        out
    }

    pub fn to_query(&self) -> String {
        let mut ser = form_urlencoded::Serializer::new(String::new());
        for (k, v) in self.to_query_pairs() {
            ser.append_pair(k, &v);
        }
        ser.finish()
    }
}

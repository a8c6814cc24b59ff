#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use revcone_core::{DeclKind, DepSite, DependencyGraph, GraphBuilder, ProjectInfo};

pub fn kind_strategy() -> impl Strategy<Value = DeclKind> {
    prop::sample::select(DeclKind::ALL.to_vec())
}

pub fn name(i: usize) -> String {
    format!("P.n{i:02}")
}

/// Arbitrary valid graphs with up to `max_nodes` nodes; cycles allowed.
pub fn graph_strategy(max_nodes: usize) -> impl Strategy<Value = DependencyGraph> {
    (1..=max_nodes)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(kind_strategy(), n),
                prop::collection::vec((0..n, 0..n, any::<bool>()), 0..=n * 4),
            )
        })
        .prop_map(|(kinds, edges)| {
            let mut b = GraphBuilder::new(ProjectInfo::named("prop"));
            for (i, k) in kinds.iter().enumerate() {
                b.declare(name(i), *k);
            }
            for (s, t, value) in edges {
                if s == t {
                    continue;
                }
                let site = if value && kinds[s] != DeclKind::Axiom {
                    DepSite::Value
                } else {
                    DepSite::Type
                };
                b.depend(name(s), name(t), site);
            }
            b.build().unwrap()
        })
}

/// Graph plus a non-empty subset of its node names.
pub fn graph_and_targets(
    max_nodes: usize,
) -> impl Strategy<Value = (DependencyGraph, Vec<String>)> {
    graph_strategy(max_nodes).prop_flat_map(|g| {
        let names: Vec<String> = g.nodes().iter().map(|d| d.name.clone()).collect();
        let n = names.len();
        (Just(g), prop::sample::subsequence(names, 1..=n.min(5)))
    })
}

/// Naive closure: rescan the whole edge list until nothing changes.
pub fn closure<F>(g: &DependencyGraph, start: &[String], keep: F) -> BTreeSet<String>
where
    F: Fn(&revcone_core::DepEdge, DeclKind) -> bool,
{
    let mut set: BTreeSet<String> = start.iter().cloned().collect();
    let mut changed = true;
    while changed {
        changed = false;
        for e in g.edges() {
            let kind = g.get(&e.source).unwrap().kind;
            if set.contains(&e.source) && keep(e, kind) && set.insert(e.target.clone()) {
                changed = true;
            }
        }
    }
    set
}

//! Seeded graph generators used in place of a real exporter.
//!
//! [`generate_synthetic`] builds layered graphs: declarations in a layer only
//! depend on earlier layers, except for a small rate of back edges that close
//! cycles. [`random_graph`] is unstructured and is meant for property tests.
//! Both use ChaCha8 so output is identical across platforms for a given seed.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{
    DeclKind, Declaration, DepSite, DependencyGraph, GraphBuilder, NodeId, ProjectInfo,
};

const DEFINITION_KINDS: [DeclKind; 4] = [
    DeclKind::Definition,
    DeclKind::Inductive,
    DeclKind::Structure,
    DeclKind::Abbreviation,
];

/// Probability that a theorem's dependency sits in its value (a proof step).
pub const THEOREM_VALUE_RATE: f64 = 0.8;
/// Probability that a definition's dependency sits in its value.
pub const DEFINITION_VALUE_RATE: f64 = 0.5;
/// Share of forward edges that land in the immediately preceding layer
/// rather than anywhere below.
pub const LOCAL_EDGE_RATE: f64 = 0.5;
pub const DEFAULT_BACK_EDGE_RATE: f64 = 0.02;
pub const DEFAULT_MEAN_OUT_DEGREE: f64 = 5.0;
pub const DEFAULT_AXIOM_COUNT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Profile {
    TheoremHeavy,
    DefinitionHeavy,
    Mixed,
}

impl Profile {
    pub const ALL: [Profile; 3] = [
        Profile::TheoremHeavy,
        Profile::DefinitionHeavy,
        Profile::Mixed,
    ];

    pub fn default_theorem_fraction(self) -> f64 {
        match self {
            Profile::TheoremHeavy => 0.85,
            Profile::DefinitionHeavy => 0.25,
            Profile::Mixed => 0.55,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Profile::TheoremHeavy => "theoremHeavy",
            Profile::DefinitionHeavy => "definitionHeavy",
            Profile::Mixed => "mixed",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Profile {
    type Err = SyntheticError;

    /// Accepts `theoremHeavy` as well as `theorem-heavy`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let folded: String = s
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .flat_map(char::to_lowercase)
            .collect();
        Profile::ALL
            .into_iter()
            .find(|p| p.as_str().to_lowercase() == folded)
            .ok_or_else(|| SyntheticError::UnknownProfile(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyntheticError {
    #[error("unknown profile `{0}` (expected theoremHeavy, definitionHeavy or mixed)")]
    UnknownProfile(String),
    #[error("node count must be at least 1")]
    NoNodes,
    #[error("{field} must be in [0, 1], got {value}")]
    Ratio { field: &'static str, value: f64 },
    #[error("mean out-degree must be positive and finite, got {0}")]
    OutDegree(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SyntheticProfile {
    pub profile: Profile,
    /// Non-axiom declarations; axioms come on top of these.
    pub node_count: usize,
    pub mean_out_degree: f64,
    pub theorem_fraction: f64,
    pub axiom_count: usize,
    pub back_edge_rate: f64,
    pub seed: u64,
}

impl SyntheticProfile {
    pub fn new(profile: Profile, node_count: usize, seed: u64) -> Self {
        SyntheticProfile {
            profile,
            node_count,
            mean_out_degree: DEFAULT_MEAN_OUT_DEGREE,
            theorem_fraction: profile.default_theorem_fraction(),
            axiom_count: DEFAULT_AXIOM_COUNT,
            back_edge_rate: DEFAULT_BACK_EDGE_RATE,
            seed,
        }
    }

    fn check(&self) -> Result<(), SyntheticError> {
        if self.node_count == 0 {
            return Err(SyntheticError::NoNodes);
        }
        for (field, value) in [
            ("theoremFraction", self.theorem_fraction),
            ("backEdgeRate", self.back_edge_rate),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SyntheticError::Ratio { field, value });
            }
        }
        if !(self.mean_out_degree.is_finite() && self.mean_out_degree > 0.0) {
            return Err(SyntheticError::OutDegree(self.mean_out_degree));
        }
        Ok(())
    }
}

/// Binomial(trials, mean / trials) with `trials = ceil(2 * mean)`.
fn draw_degree(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    let trials = (2.0 * mean).ceil().max(1.0) as usize;
    let p = (mean / trials as f64).min(1.0);
    (0..trials).filter(|_| rng.gen_bool(p)).count()
}

fn site_for(rng: &mut ChaCha8Rng, kind: DeclKind) -> DepSite {
    let value_rate = match kind {
        DeclKind::Axiom => 0.0,
        DeclKind::Theorem => THEOREM_VALUE_RATE,
        _ => DEFINITION_VALUE_RATE,
    };
    if rng.gen_bool(value_rate) {
        DepSite::Value
    } else {
        DepSite::Type
    }
}

fn tag(kind: DeclKind) -> &'static str {
    match kind {
        DeclKind::Theorem => "thm",
        DeclKind::Definition => "def",
        DeclKind::Inductive => "ind",
        DeclKind::Structure => "str",
        DeclKind::Abbreviation => "abbrev",
        DeclKind::Axiom => "ax",
    }
}

/// Layered generator. Layers have about `sqrt(node_count)` declarations;
/// axioms sit in layer 0 alongside the first declarations.
pub fn generate_synthetic(profile: &SyntheticProfile) -> Result<DependencyGraph, SyntheticError> {
    profile.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let n = profile.node_count;
    let layers = ((n as f64).sqrt().round() as usize).max(1);
    let width = n.div_ceil(layers);
    let digits = n.max(profile.axiom_count).to_string().len();
    let layer_digits = layers.to_string().len();

    // (name, kind, layer)
    let mut nodes: Vec<(String, DeclKind, usize)> = Vec::with_capacity(n + profile.axiom_count);
    for j in 0..profile.axiom_count {
        nodes.push((format!("Synth.Axioms.ax{j:0digits$}"), DeclKind::Axiom, 0));
    }
    for i in 0..n {
        let kind = if rng.gen_bool(profile.theorem_fraction) {
            DeclKind::Theorem
        } else {
            DEFINITION_KINDS[rng.gen_range(0..DEFINITION_KINDS.len())]
        };
        let layer = i / width;
        nodes.push((
            format!("Synth.L{layer:0layer_digits$}.{}{i:0digits$}", tag(kind)),
            kind,
            layer,
        ));
    }
    // Nodes are pushed in nondecreasing layer order, so a layer's predecessors
    // form a prefix.
    let first_at_layer = |layer: usize| {
        nodes
            .iter()
            .position(|n| n.2 >= layer)
            .unwrap_or(nodes.len())
    };
    let starts: Vec<usize> = (0..=layers).map(first_at_layer).collect();

    let mut builder = GraphBuilder::new(ProjectInfo::named(format!(
        "synthetic-{}-{}-{}",
        profile.profile, n, profile.seed
    )));
    for (name, kind, layer) in &nodes {
        builder.declaration(
            Declaration::new(name.clone(), *kind)
                .with_module(format!("Synth.L{layer:0layer_digits$}")),
        );
    }

    for (idx, (name, kind, layer)) in nodes.iter().enumerate() {
        let earlier = starts[*layer];
        let later = starts[(*layer + 1).min(layers)];
        let degree = draw_degree(&mut rng, profile.mean_out_degree);
        for _ in 0..degree {
            let back = rng.gen_bool(profile.back_edge_rate);
            let target = if back && later < nodes.len() {
                rng.gen_range(later..nodes.len())
            } else if earlier > 0 {
                let prev = starts[layer.saturating_sub(1)];
                if *layer > 0 && rng.gen_bool(LOCAL_EDGE_RATE) {
                    rng.gen_range(prev..earlier)
                } else {
                    rng.gen_range(0..earlier)
                }
            } else {
                continue;
            };
            if target == idx {
                continue;
            }
            let site = site_for(&mut rng, *kind);
            builder.depend(name.clone(), nodes[target].0.clone(), site);
        }
    }
    Ok(builder.build().expect("generator emits valid graphs"))
}

/// Parameters for [`random_graph`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomGraphParams {
    pub max_nodes: usize,
    pub max_mean_out_degree: f64,
    pub seed: u64,
}

/// Unstructured random graph: node count uniform in `1..=max_nodes`, a
/// per-graph random kind mix, edges between arbitrary pairs (so cycles are
/// common) and sites chosen uniformly, except that axioms only get type edges.
pub fn random_graph(params: RandomGraphParams) -> DependencyGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let n = rng.gen_range(1..=params.max_nodes.max(1));
    let weights: Vec<f64> = DeclKind::ALL.iter().map(|_| rng.gen::<f64>()).collect();
    let total: f64 = weights.iter().sum();
    let mut builder = GraphBuilder::new(ProjectInfo::named(format!("random-{}", params.seed)));
    let mut kinds = Vec::with_capacity(n);
    for i in 0..n {
        let mut pick = rng.gen::<f64>() * total;
        let mut kind = DeclKind::Theorem;
        for (k, w) in DeclKind::ALL.iter().zip(&weights) {
            kind = *k;
            if pick < *w {
                break;
            }
            pick -= w;
        }
        kinds.push(kind);
        builder.declare(format!("R.n{i:03}"), kind);
    }
    let mean = rng.gen::<f64>() * params.max_mean_out_degree;
    let edges = (mean * n as f64).round() as usize;
    if n > 1 {
        for _ in 0..edges {
            let s = rng.gen_range(0..n);
            let t = rng.gen_range(0..n);
            if s == t {
                continue;
            }
            let site = if kinds[s] == DeclKind::Axiom || rng.gen_bool(0.5) {
                DepSite::Type
            } else {
                DepSite::Value
            };
            builder.depend(format!("R.n{s:03}"), format!("R.n{t:03}"), site);
        }
    }
    builder.build().expect("random graphs are valid")
}

/// A graph in which theorem `target` has a review cone of exactly `cone`
/// declarations and a kept set of exactly `kept` (no axioms): a chain of
/// `kept - 1` definitions hangs off the target's type, and `cone - kept`
/// lemmas are used only in its proof.
///
/// Panics unless `1 <= kept <= cone`.
pub fn cone_fixture(target: &str, cone: usize, kept: usize) -> DependencyGraph {
    assert!(
        kept >= 1 && kept <= cone,
        "need 1 <= kept <= cone, got {kept}/{cone}"
    );
    let mut b = GraphBuilder::new(ProjectInfo::named(format!("fixture-{cone}-{kept}")));
    b.declare(target, DeclKind::Theorem);
    let mut prev = target.to_string();
    for i in 1..kept {
        let name = format!("Fixture.def{i:04}");
        b.declare(name.clone(), DeclKind::Definition);
        let site = if i == 1 {
            DepSite::Type
        } else {
            DepSite::Value
        };
        b.depend(prev, name.clone(), site);
        prev = name;
    }
    for i in 0..cone - kept {
        let name = format!("Fixture.lemma{i:04}");
        b.declare(name.clone(), DeclKind::Theorem);
        b.depend(target, name, DepSite::Value);
    }
    b.build().expect("fixture graphs are valid")
}

/// Up to `count` distinct theorem names, chosen uniformly with `seed`, in name order.
pub fn sample_theorems(graph: &DependencyGraph, count: usize, seed: u64) -> Vec<String> {
    let theorems: Vec<&str> = graph
        .nodes()
        .iter()
        .filter(|d| d.kind == DeclKind::Theorem)
        .map(|d| d.name.as_str())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = count.min(theorems.len());
    let mut picked: Vec<String> = sample(&mut rng, theorems.len(), take)
        .into_iter()
        .map(|i| theorems[i].to_string())
        .collect();
    picked.sort();
    picked
}

/// Samples `count` targets the way a project's main theorems look: theorems
/// nothing else depends on, topped up with the theorems that have the
/// largest review cones when there are too few such roots. Name order.
pub fn sample_main_theorems(graph: &DependencyGraph, count: usize, seed: u64) -> Vec<String> {
    let theorems: Vec<NodeId> = graph
        .nodes()
        .iter()
        .filter(|d| d.kind == DeclKind::Theorem)
        .map(|d| graph.id(&d.name).expect("own node"))
        .collect();
    let (mut pool, rest): (Vec<NodeId>, Vec<NodeId>) = theorems
        .into_iter()
        .partition(|&id| graph.in_edges(id).next().is_none());
    if pool.len() < count {
        let mut ranked: Vec<(usize, NodeId)> = rest
            .into_iter()
            .map(|id| {
                let cone = graph.reachable_ids(&[id], |_| true);
                (cone.iter().filter(|&&b| b).count(), id)
            })
            .collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let missing = count - pool.len();
        pool.extend(ranked.into_iter().take(missing).map(|(_, id)| id));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = count.min(pool.len());
    let mut picked: Vec<String> = sample(&mut rng, pool.len(), take)
        .into_iter()
        .map(|i| graph.decl(pool[i]).name.clone())
        .collect();
    picked.sort();
    picked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::serialize_graph;

    #[test]
    fn single_theorem() {
        let mut p = SyntheticProfile::new(Profile::TheoremHeavy, 1, 7);
        p.theorem_fraction = 1.0;
        p.axiom_count = 0;
        let g = generate_synthetic(&p).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.nodes()[0].kind, DeclKind::Theorem);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = SyntheticProfile::new(Profile::Mixed, 0, 0);
        assert_eq!(generate_synthetic(&p).unwrap_err(), SyntheticError::NoNodes);
        p.node_count = 10;
        p.theorem_fraction = 1.5;
        assert!(matches!(
            generate_synthetic(&p).unwrap_err(),
            SyntheticError::Ratio {
                field: "theoremFraction",
                ..
            }
        ));
        p.theorem_fraction = 0.5;
        p.back_edge_rate = -0.1;
        assert!(generate_synthetic(&p).is_err());
        p.back_edge_rate = 0.0;
        p.mean_out_degree = 0.0;
        assert_eq!(
            generate_synthetic(&p).unwrap_err(),
            SyntheticError::OutDegree(0.0)
        );
    }

    #[test]
    fn profile_names() {
        assert_eq!(
            "theoremHeavy".parse::<Profile>().unwrap(),
            Profile::TheoremHeavy
        );
        assert_eq!(
            "definition-heavy".parse::<Profile>().unwrap(),
            Profile::DefinitionHeavy
        );
        assert_eq!("MIXED".parse::<Profile>().unwrap(), Profile::Mixed);
        assert!("proofy".parse::<Profile>().is_err());
    }

    #[test]
    fn deterministic_and_valid() {
        for profile in Profile::ALL {
            let p = SyntheticProfile::new(profile, 300, 42);
            let a = generate_synthetic(&p).unwrap();
            let b = generate_synthetic(&p).unwrap();
            assert_eq!(a, b);
            assert_eq!(serialize_graph(&a), serialize_graph(&b));
            assert!(a.validate().is_empty());
            assert_eq!(a.node_count(), 303);
            assert_eq!(a.axioms().count(), 3);
        }
        let a = generate_synthetic(&SyntheticProfile::new(Profile::Mixed, 100, 1)).unwrap();
        let b = generate_synthetic(&SyntheticProfile::new(Profile::Mixed, 100, 2)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn theorem_fraction_is_respected() {
        let g = generate_synthetic(&SyntheticProfile::new(Profile::TheoremHeavy, 2000, 3)).unwrap();
        let thm = g
            .nodes()
            .iter()
            .filter(|d| d.kind == DeclKind::Theorem)
            .count();
        let frac = thm as f64 / 2000.0;
        assert!((frac - 0.85).abs() < 0.03, "{frac}");
        let mean = g.edge_count() as f64 / g.node_count() as f64;
        assert!(mean > 4.0 && mean < 5.2, "{mean}");
    }

    #[test]
    fn layered_with_rare_back_edges() {
        let g = generate_synthetic(&SyntheticProfile::new(Profile::Mixed, 900, 11)).unwrap();
        let layer = |name: &str| g.get(name).unwrap().module.clone();
        let forward = g
            .edges()
            .iter()
            .filter(|e| {
                layer(&e.source) <= layer(&e.target) && !e.source.starts_with("Synth.Axioms")
            })
            .count();
        let rate = forward as f64 / g.edge_count() as f64;
        assert!(rate > 0.0 && rate < 0.05, "{rate}");
        assert!(g
            .edges()
            .iter()
            .filter(|e| g.get(&e.source).unwrap().kind == DeclKind::Axiom)
            .all(|e| e.site == DepSite::Type));
    }

    #[test]
    fn random_graphs_are_valid() {
        for seed in 0..200 {
            let g = random_graph(RandomGraphParams {
                max_nodes: 60,
                max_mean_out_degree: 4.0,
                seed,
            });
            assert!(g.validate().is_empty());
            assert!((1..=60).contains(&g.node_count()));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = generate_synthetic(&SyntheticProfile::new(Profile::Mixed, 200, 5)).unwrap();
        let a = sample_theorems(&g, 20, 9);
        assert_eq!(a, sample_theorems(&g, 20, 9));
        assert_eq!(a.len(), 20);
        assert!(a
            .iter()
            .all(|n| g.get(n).unwrap().kind == DeclKind::Theorem));

        let main = sample_main_theorems(&g, 20, 9);
        assert_eq!(main, sample_main_theorems(&g, 20, 9));
        assert_eq!(main.len(), 20);
        assert!(main
            .iter()
            .all(|n| g.get(n).unwrap().kind == DeclKind::Theorem));
        let roots = main
            .iter()
            .filter(|n| g.in_edges(g.id(n).unwrap()).next().is_none())
            .count();
        assert!(roots > 0);
    }
}

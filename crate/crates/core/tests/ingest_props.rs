mod support;

use std::collections::BTreeMap;

use chrono::DateTime;
use proptest::prelude::*;
use revcone_core::ingest::synthetic::{random_graph, RandomGraphParams};
use revcone_core::ingest::{MetadataEntry, MetadataSidecar};
use revcone_core::{
    generate_synthetic, load_metadata, parse_graph, serialize_graph, Confidence, Declaration,
    DependencyGraph, Profile, Progress, ProjectInfo, SyntheticProfile,
};
use support::graph_strategy;

/// Decorate a structural graph with random module paths, sorry flags and a revision.
fn decorated() -> impl Strategy<Value = DependencyGraph> {
    (
        graph_strategy(25),
        any::<u64>(),
        prop::option::of("[a-f0-9]{7}"),
    )
        .prop_map(|(g, bits, rev)| {
            let decls: Vec<Declaration> = g
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, d)| {
                    let mut d = d.clone();
                    d.metadata.has_sorry = bits >> (i % 64) & 1 == 1;
                    if i % 3 == 0 {
                        d.module = format!("Proj.Mod{}", i % 5);
                    }
                    d
                })
                .collect();
            let project = ProjectInfo {
                name: "decorated \"project\" ✓".into(),
                revision: rev,
            };
            DependencyGraph::from_parts(project, decls, g.edges().to_vec()).unwrap()
        })
}

fn confidence() -> impl Strategy<Value = Confidence> {
    prop::sample::select(Confidence::ALL.to_vec())
}

fn progress() -> impl Strategy<Value = Progress> {
    prop::sample::select(Progress::ALL.to_vec())
}

proptest! {
    #[test]
    fn parse_inverts_serialize(g in decorated()) {
        let bytes = serialize_graph(&g);
        let back = parse_graph(&bytes).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(serialize_graph(&back), bytes);
    }

    #[test]
    fn sidecar_round_trip(
        entries in prop::collection::btree_map(
            "[A-Z][a-z]{0,4}(\\.[a-z]{1,4}){0,2}",
            (confidence(), progress(), progress(), 0i64..4_000_000_000_000),
            0..12,
        )
    ) {
        let sidecar = MetadataSidecar {
            entries: entries
                .into_iter()
                .map(|(k, (c, p, d, ms))| {
                    (k, MetadataEntry {
                        confidence: c,
                        proof_progress: p,
                        def_progress: d,
                        last_modified: DateTime::from_timestamp_millis(ms).unwrap(),
                    })
                })
                .collect::<BTreeMap<_, _>>(),
        };
        let bytes = sidecar.to_bytes();
        let back = MetadataSidecar::parse(&bytes).unwrap();
        prop_assert_eq!(&back, &sidecar);
        prop_assert_eq!(back.to_bytes(), bytes);
    }
}

#[test]
fn generated_graphs_round_trip() {
    for seed in 0..60u64 {
        let profile = Profile::ALL[seed as usize % 3];
        let g = generate_synthetic(&SyntheticProfile::new(
            profile,
            20 + seed as usize * 7,
            seed,
        ))
        .unwrap();
        let bytes = serialize_graph(&g);
        assert_eq!(parse_graph(&bytes).unwrap(), g, "seed {seed}");
        let r = random_graph(RandomGraphParams {
            max_nodes: 60,
            max_mean_out_degree: 4.0,
            seed,
        });
        assert_eq!(parse_graph(&serialize_graph(&r)).unwrap(), r);
    }
}

#[test]
fn seed_42_serializes_identically() {
    let p = SyntheticProfile::new(Profile::Mixed, 250, 42);
    let a = serialize_graph(&generate_synthetic(&p).unwrap());
    let b = serialize_graph(&generate_synthetic(&p).unwrap());
    assert_eq!(a, b);
    assert!(a.ends_with(b"}\n"));
}

#[test]
fn metadata_apply_save_reload() {
    let g = generate_synthetic(&SyntheticProfile::new(Profile::Mixed, 40, 3)).unwrap();
    let mut sidecar = MetadataSidecar::default();
    for (i, d) in g.nodes().iter().enumerate().step_by(3) {
        let patch = revcone_core::ingest::MetadataPatch {
            confidence: Some(Confidence::ALL[i % 5]),
            proof_progress: Some(Progress::ALL[i % 3]),
            def_progress: None,
        };
        sidecar.update(&d.name, d.metadata, &patch, MetadataSidecar::now());
    }
    let first = sidecar.apply(&g).graph;
    let reloaded = load_metadata(&sidecar.to_bytes(), &g).unwrap();
    assert!(reloaded.stale.is_empty());
    assert_eq!(reloaded.graph, first);
    for d in first.nodes() {
        assert_eq!(
            d.metadata.has_sorry,
            g.get(&d.name).unwrap().metadata.has_sorry
        );
    }
}

use std::collections::BTreeSet;

use oda_core::builder::{build_graph, utc_day, BuildOptions, SchemaMode};
use oda_core::fixture::{generate, FixtureParams};
use oda_core::ingest::Dataset;
use oda_core::ontology::{builtin_schema, validate_graph, ViolationKind};
use oda_core::rdf::{Term, Triple};
use oda_core::vocab::{hpc, RDF_TYPE};
use proptest::prelude::*;

fn shape() -> impl Strategy<Value = FixtureParams> {
    (
        any::<u64>(),
        1usize..3,
        1usize..3,
        1usize..6,
        1i64..6,
        0usize..4,
        any::<bool>(),
    )
        .prop_map(
            |(seed, systems, nodes, sensors, steps, jobs, job_centric)| FixtureParams {
                seed,
                systems_per_dc: systems,
                nodes_per_rack: nodes,
                sensors_per_node: sensors,
                sampling_interval: 7_200,
                duration: steps * 7_200,
                jobs_per_system: jobs,
                users_per_system: 2,
                job_centric,
                ..FixtureParams::default()
            },
        )
}

fn without_readings(ds: &Dataset) -> Dataset {
    Dataset {
        jobs: ds.jobs.clone(),
        job_metrics: ds.job_metrics.clone(),
        ..ds.clone_static()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn triple_counts_follow_the_templates(p in shape()) {
        let ds = generate(&p).unwrap();
        let r = ds.readings.len();
        let plugin_of = |node: i64, name: &str| {
            ds.sensors.iter().find(|s| s.node_id == node && s.name == name).unwrap().plugin_name.clone()
        };
        let records: BTreeSet<(String, String)> = ds
            .readings
            .iter()
            .map(|x| (plugin_of(x.node_id, &x.sensor_name), utc_day(x.ts).unwrap()))
            .collect();

        for mode in SchemaMode::ALL {
            let opts = BuildOptions::new(mode);
            let base = build_graph(&without_readings(&ds), &opts).unwrap().len();
            let full = build_graph(&ds, &opts).unwrap();
            let per = if mode == SchemaMode::LegacyOda { 6 } else { 4 };
            let residual = if mode == SchemaMode::LegacyOda { records.len() } else { 0 };
            prop_assert_eq!(full.len(), base + per * r + residual, "{}", mode);
        }

        // Sharing Time nodes: 3 per reading plus one per new instant.
        let opts = BuildOptions::new(SchemaMode::UnifiedUri).with_dedup(true);
        let base = build_graph(&without_readings(&ds), &opts).unwrap().len();
        let job_times: BTreeSet<i64> = ds.jobs.iter().flat_map(|j| [j.start, j.end]).collect();
        let fresh = ds.readings.iter().map(|x| x.ts).filter(|t| !job_times.contains(t)).collect::<BTreeSet<_>>().len();
        prop_assert_eq!(build_graph(&ds, &opts).unwrap().len(), base + 3 * r + fresh);
    }

    #[test]
    fn built_graphs_conform_to_the_ontology(p in shape()) {
        let ds = generate(&p).unwrap();
        let unified = builtin_schema();
        let legacy = builtin_schema().with_legacy_extension();
        for mode in SchemaMode::ALL {
            for dedup in [false, true] {
                let store = build_graph(&ds, &BuildOptions::new(mode).with_dedup(dedup)).unwrap();
                let schema = if mode == SchemaMode::LegacyOda { &legacy } else { &unified };
                let v = validate_graph(schema, &store);
                prop_assert!(v.is_empty(), "{} dedup={}: {}", mode, dedup, v[0]);
            }
        }
    }
}

fn iri(local: &str) -> Term {
    Term::iri(hpc(local)).unwrap()
}

#[test]
fn injected_violations_are_each_reported() {
    let ds = generate(&FixtureParams {
        sampling_interval: 3_600,
        ..FixtureParams::default()
    })
    .unwrap();
    let mut store = build_graph(&ds, &BuildOptions::new(SchemaMode::UnifiedUri)).unwrap();
    let job = iri(&format!("job/{}", ds.jobs[0].id));
    let node = iri(&format!("node/{}", ds.nodes[0].id));
    let rack = iri(&format!("rack/{}", ds.racks[0].id));
    let r = &ds.readings[0];
    let reading = iri(&format!("reading/{}/{}/{}", r.node_id, r.sensor_name, r.ts));
    let gadget = iri("gadget/1");
    let injected = [
        (
            job.clone(),
            iri("hasReading"),
            reading.clone(),
            ViolationKind::DomainViolation,
        ),
        (
            node.clone(),
            iri("hasSensor"),
            rack,
            ViolationKind::RangeViolation,
        ),
        (
            reading,
            iri("value"),
            Term::string("hot"),
            ViolationKind::DatatypeViolation,
        ),
        (
            node,
            iri("hasGizmo"),
            Term::integer(1),
            ViolationKind::UnknownProperty,
        ),
        (
            gadget,
            Term::iri(RDF_TYPE).unwrap(),
            iri("Gadget"),
            ViolationKind::UnknownClass,
        ),
    ];
    assert!(validate_graph(&builtin_schema(), &store).is_empty());
    for (s, p, o, _) in &injected {
        assert!(store
            .insert(Triple::new(s.clone(), p.clone(), o.clone()).unwrap())
            .unwrap());
    }
    let mut found: Vec<_> = validate_graph(&builtin_schema(), &store)
        .into_iter()
        .map(|v| (v.kind, v.triple))
        .collect();
    found.sort();
    let mut expected: Vec<_> = injected
        .into_iter()
        .map(|(s, p, o, k)| (k, Triple::new(s, p, o).unwrap()))
        .collect();
    expected.sort();
    assert_eq!(found, expected);
}

#[test]
fn unified_modes_agree_on_counts() {
    let ds = generate(&FixtureParams {
        nodes_per_rack: 3,
        sampling_interval: 600,
        ..FixtureParams::default()
    })
    .unwrap();
    let uri = build_graph(&ds, &BuildOptions::new(SchemaMode::UnifiedUri))
        .unwrap()
        .stats();
    let bnode = build_graph(&ds, &BuildOptions::new(SchemaMode::UnifiedBnode))
        .unwrap()
        .stats();
    assert_eq!(uri.triple_count, bnode.triple_count);
    assert_eq!(uri.node_count, bnode.node_count);
}

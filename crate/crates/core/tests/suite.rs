use std::path::PathBuf;

use oda_core::bench::{run_suite, Manifest, QUESTION_IDS};
use oda_core::builder::{build_graph, BuildOptions, SchemaMode};
use oda_core::fixture::{generate, FixtureParams};
use oda_core::ingest::Dataset;

fn query_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("queries")
}

pub fn suite_params(seed: u64) -> FixtureParams {
    FixtureParams {
        seed,
        data_centers: 2,
        systems_per_dc: 2,
        racks_per_system: 2,
        nodes_per_rack: 3,
        sensors_per_node: 4,
        sampling_interval: 900,
        duration: 2 * 86_400,
        users_per_system: 3,
        jobs_per_system: 6,
        metrics_per_job: 8,
        job_centric: true,
        ..FixtureParams::default()
    }
}

fn check(ds: &Dataset, opts: BuildOptions) {
    let store = build_graph(ds, &opts).unwrap();
    let mode = opts.mode;
    let manifest = Manifest::derive(ds);
    let result = run_suite(&store, &query_dir(), &manifest, ds);
    assert_eq!(result.entries.len(), QUESTION_IDS.len());
    assert!(result.all_passed(), "{mode}\n{result}");
}

#[test]
fn seeded_fixtures_match_reference_answers() {
    for seed in [1, 2, 3] {
        check(
            &generate(&suite_params(seed)).unwrap(),
            BuildOptions::new(SchemaMode::UnifiedUri),
        );
    }
}

#[test]
fn blank_nodes_and_shared_time_nodes_answer_identically() {
    let ds = generate(&suite_params(7)).unwrap();
    check(&ds, BuildOptions::new(SchemaMode::UnifiedBnode));
    check(
        &ds,
        BuildOptions::new(SchemaMode::UnifiedUri).with_dedup(true),
    );
}

#[test]
fn empty_fixture_gives_empty_answers() {
    let ds = Dataset::default();
    let store = build_graph(&ds, &BuildOptions::new(SchemaMode::UnifiedUri)).unwrap();
    let result = run_suite(&store, &query_dir(), &Manifest::derive(&ds), &ds);
    assert_eq!(result.parsed(), 36, "{result}");
    assert!(result.all_passed(), "{result}");
}

#[test]
fn missing_query_fails_only_its_entry() {
    let dir = tempfile::tempdir().unwrap();
    for id in QUESTION_IDS.iter().filter(|id| **id != "C1.1") {
        std::fs::copy(
            query_dir().join(format!("{id}.rq")),
            dir.path().join(format!("{id}.rq")),
        )
        .unwrap();
    }
    let ds = generate(&suite_params(1)).unwrap();
    let store = build_graph(&ds, &BuildOptions::new(SchemaMode::UnifiedUri)).unwrap();
    let result = run_suite(&store, dir.path(), &Manifest::derive(&ds), &ds);
    assert!(!result.entries[0].parsed);
    assert_eq!(result.matched(), 35);
}

#[test]
fn suite_is_deterministic() {
    let ds = generate(&suite_params(4)).unwrap();
    let store = build_graph(&ds, &BuildOptions::new(SchemaMode::UnifiedUri)).unwrap();
    let m = Manifest::derive(&ds);
    let strip = |r: oda_core::bench::SuiteResult| {
        r.entries
            .into_iter()
            .map(|e| (e.id, e.parsed, e.rows, e.oracle_match))
            .collect::<Vec<_>>()
    };
    assert_eq!(
        strip(run_suite(&store, &query_dir(), &m, &ds)),
        strip(run_suite(&store, &query_dir(), &m, &ds))
    );
}

//! Acceptance checks. Runs without the libtest harness so that each criterion
//! prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::collections::{BTreeSet, HashMap};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use chrono::DateTime;
use oda_core::bench::{
    compare_modes, dry_run_counts, project_mib_to_gib, project_storage, reference, run_suite,
    Manifest, QUESTION_IDS,
};
use oda_core::builder::{build_graph, BuildOptions, SchemaMode};
use oda_core::fixture::{generate, FixtureParams};
use oda_core::ingest::Dataset;
use oda_core::io::{ntriples_size, read_graph, write_graph, RdfFormat};
use oda_core::ontology::{builtin_schema, count_axioms, emit_ontology};
use oda_core::rdf::{Term, Triple, TriplePattern, TripleStore};
use oda_core::sparql::{evaluate_with, parse_query, EvalOptions};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn within(actual: f64, target: f64, tol: f64) -> bool {
    (actual - target).abs() <= tol
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("ontology axiom counts", axiom_counts),
        ("triples per reading", triples_per_reading),
        ("dry-run at published scale", dry_run_scale),
        ("storage reduction on a fixture", storage_reduction),
        ("28-day projections and baseline ratios", projections),
        ("competency suite on three seeds", competency_suite),
        ("property suites", property_suites),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({detail}; {secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({detail}; {secs:.2}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn axiom_counts() -> Check {
    let schema = builtin_schema();
    let (parsed, elapsed) = timed(|| -> Result<_, String> {
        let doc = emit_ontology(&schema, RdfFormat::Turtle).map_err(|e| e.to_string())?;
        let store = read_graph(doc.as_slice(), RdfFormat::Turtle).map_err(|e| e.to_string())?;
        Ok(count_axioms(&store))
    });
    let c = parsed?;
    ensure!(
        (c.classes, c.object_properties, c.data_properties) == (12, 23, 25),
        "classes/object/data = {}/{}/{}",
        c.classes,
        c.object_properties,
        c.data_properties
    );
    ensure!(
        (c.declarations, c.logical, c.total) == (60, 104, 164),
        "declarations/logical/total = {}/{}/{}",
        c.declarations,
        c.logical,
        c.total
    );
    ensure!(c == schema.axiom_counts(), "recount differs from schema");
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!(
        "60 declarations, 104 logical, 164 total in {elapsed:.2?}"
    ))
}

fn without_readings(ds: &Dataset) -> Dataset {
    Dataset {
        jobs: ds.jobs.clone(),
        job_metrics: ds.job_metrics.clone(),
        ..ds.clone_static()
    }
}

fn triples_per_reading() -> Check {
    // One node, four sensors, 2500 instants: exactly 10^4 readings.
    let ds = generate(&FixtureParams {
        seed: 4,
        sampling_interval: 20,
        duration: 2_500 * 20,
        ..FixtureParams::default()
    })
    .map_err(|e| e.to_string())?;
    ensure!(
        ds.readings.len() == 10_000,
        "{} readings",
        ds.readings.len()
    );
    let r = ds.readings.len();
    let records: BTreeSet<(String, String)> = ds
        .readings
        .iter()
        .map(|x| {
            let plugin = &ds
                .sensors
                .iter()
                .find(|s| s.node_id == x.node_id && s.name == x.sensor_name)
                .unwrap()
                .plugin_name;
            (
                plugin.clone(),
                DateTime::from_timestamp(x.ts, 0)
                    .unwrap()
                    .format("%Y-%m-%d")
                    .to_string(),
            )
        })
        .collect();

    let mut per = HashMap::new();
    let mut build_time = Duration::ZERO;
    for mode in [SchemaMode::LegacyOda, SchemaMode::UnifiedUri] {
        let opts = BuildOptions::new(mode);
        let (full, elapsed) = timed(|| build_graph(&ds, &opts));
        build_time += elapsed;
        let full = full.map_err(|e| e.to_string())?.len();
        let base = build_graph(&without_readings(&ds), &opts)
            .map_err(|e| e.to_string())?
            .len();
        let residual = if mode == SchemaMode::LegacyOda {
            records.len()
        } else {
            0
        };
        let reading_triples = full - base - residual;
        ensure!(
            reading_triples % r == 0,
            "{mode}: {reading_triples} triples for {r} readings"
        );
        per.insert(mode, reading_triples / r);
    }
    let (legacy, unified) = (per[&SchemaMode::LegacyOda], per[&SchemaMode::UnifiedUri]);
    ensure!(
        (legacy, unified) == (6, 4),
        "legacy {legacy}, unified {unified}"
    );
    let reduction = (1.0 - unified as f64 / legacy as f64) * 100.0;
    ensure!(within(reduction, 33.33, 0.01), "reduction {reduction:.4}%");
    ensure!(
        build_time < Duration::from_secs(5),
        "builds took {build_time:?}"
    );
    Ok(format!(
        "6 vs 4, {reduction:.2}% fewer reading triples, 10^4 readings built in {build_time:.2?}"
    ))
}

fn dry_run_scale() -> Check {
    let shape = FixtureParams {
        nodes_per_rack: 979,
        sensors_per_node: 1,
        sampling_interval: 20,
        duration: 86_400,
        users_per_system: 0,
        jobs_per_system: 0,
        ..FixtureParams::default()
    };
    let legacy = dry_run_counts(&shape, SchemaMode::LegacyOda, false).map_err(|e| e.to_string())?;
    let unified =
        dry_run_counts(&shape, SchemaMode::UnifiedUri, false).map_err(|e| e.to_string())?;
    ensure!(
        legacy.readings == reference::READINGS,
        "{} readings",
        legacy.readings
    );
    ensure!(
        legacy.reading_triples == 25_375_680,
        "legacy {}",
        legacy.reading_triples
    );
    ensure!(
        unified.reading_triples == 16_917_120,
        "unified {}",
        unified.reading_triples
    );
    ensure!(
        unified.reading_triples == reference::UNIFIED_TRIPLES,
        "unified vs published total"
    );
    let residual = legacy.residual_triples;
    ensure!(residual <= 10, "residual {residual}");
    // The published legacy total exceeds 6R by the same kind of residual.
    let published_residual = reference::LEGACY_TRIPLES - legacy.reading_triples;
    ensure!(
        published_residual <= 10,
        "published residual {published_residual}"
    );
    Ok(format!(
        "R = {}, legacy {}, unified {}, residual {residual}",
        legacy.readings, legacy.reading_triples, unified.reading_triples
    ))
}

fn nt(s: &str, p: &str, o: &str) -> usize {
    format!("{s} {p} {o} .\n").len()
}

/// Expected N-Triples bytes, computed from the reading templates written out
/// by hand on top of the serialized size of everything else.
fn expected_bytes(ds: &Dataset, mode: SchemaMode) -> u64 {
    const H: &str = "http://ontology.hpc.org/";
    const XSD: &str = "http://www.w3.org/2001/XMLSchema#";
    let base = build_graph(&without_readings(ds), &BuildOptions::new(mode)).unwrap();
    let mut total = ntriples_size(&base) as usize;

    let mut sensor_idx = HashMap::new();
    let mut per_node: HashMap<i64, usize> = HashMap::new();
    for s in &ds.sensors {
        assert!(s
            .name
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_'));
        let i = per_node.entry(s.node_id).or_default();
        sensor_idx.insert((s.node_id, s.name.as_str()), (*i, s));
        *i += 1;
    }
    let p = |local: &str| format!("<{H}{local}>");
    let mut records = BTreeSet::new();
    for r in &ds.readings {
        let (idx, sensor) = sensor_idx[&(r.node_id, r.sensor_name.as_str())];
        let s = format!("<{H}sensor/{}/{}>", r.node_id, r.sensor_name);
        let value = format!("\"{}\"^^<{XSD}double>", r.value);
        let uri = format!("<{H}reading/{}/{}/{}>", r.node_id, r.sensor_name, r.ts);
        match mode {
            SchemaMode::LegacyOda => {
                let day = DateTime::from_timestamp(r.ts, 0).unwrap();
                let record = format!(
                    "<{H}datarecord/{}/{}>",
                    sensor.plugin_name,
                    day.format("%Y-%m-%d")
                );
                total += nt(
                    &uri,
                    "<http://www.w3.org/1999/02/22-rdf-syntax-ns#type>",
                    &p("SensorReading"),
                );
                total += nt(&uri, &p("value"), &value);
                let iso = day.format("%Y-%m-%dT%H:%M:%S+00:00");
                total += nt(
                    &uri,
                    &p("readingTimestamp"),
                    &format!("\"{iso}\"^^<{XSD}dateTime>"),
                );
                total += nt(&uri, &p("readingUnit"), &format!("\"{}\"", sensor.unit));
                total += nt(&s, &p("hasReading"), &uri);
                total += nt(&uri, &p("partOfRecord"), &record);
                if records.insert(record.clone()) {
                    total += nt(
                        &record,
                        "<http://www.w3.org/1999/02/22-rdf-syntax-ns#type>",
                        &p("DataRecord"),
                    );
                }
            }
            SchemaMode::UnifiedUri | SchemaMode::UnifiedBnode => {
                let reading = if mode == SchemaMode::UnifiedUri {
                    uri
                } else {
                    format!("_:r{}_{idx}_{}", r.node_id, r.ts)
                };
                let time = format!("_:t{}_{idx}_{}", r.node_id, r.ts);
                total += nt(&s, &p("hasReading"), &reading);
                total += nt(&reading, &p("value"), &value);
                total += nt(&reading, &p("hasTimestamp"), &time);
                total += nt(
                    &time,
                    &p("timestamp"),
                    &format!("\"{}\"^^<{XSD}integer>", r.ts),
                );
            }
        }
    }
    total as u64
}

fn storage_reduction() -> Check {
    let ds = generate(&FixtureParams {
        seed: 17,
        nodes_per_rack: 8,
        sampling_interval: 20,
        duration: 86_400,
        ..FixtureParams::default()
    })
    .map_err(|e| e.to_string())?;
    ensure!(
        ds.readings.len() >= 100_000,
        "{} readings",
        ds.readings.len()
    );
    let (report, elapsed) = timed(|| compare_modes(&ds));
    let report = report.map_err(|e| e.to_string())?;
    for s in &report.stats {
        let expected = expected_bytes(&ds, s.mode);
        ensure!(
            s.bytes == expected,
            "{}: {} bytes, oracle {expected}",
            s.mode,
            s.bytes
        );
    }
    let (a, b) = (
        report.reduction_unified_vs_legacy,
        report.reduction_bnode_vs_unified,
    );
    ensure!((33.0..=45.0).contains(&a), "unified vs legacy {a:.2}%");
    ensure!((20.0..=32.0).contains(&b), "blank nodes vs unified {b:.2}%");
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    Ok(format!(
        "{} readings: unified -{a:.2}% vs legacy, blank nodes -{b:.2}% vs unified, byte oracle exact",
        report.readings
    ))
}

fn projections() -> Check {
    let days = reference::DAYS;
    let cases = [
        ("legacy", reference::LEGACY_MIB, 29.39),
        ("unified", reference::UNIFIED_MIB, 17.97),
        ("blank nodes", reference::BNODE_MIB, 13.15),
    ];
    let mut parts = Vec::new();
    for (name, mib, target) in cases {
        let gib = project_mib_to_gib(mib, days);
        ensure!(
            within(gib, target, 0.01),
            "{name}: {gib:.4} GiB, expected {target}"
        );
        parts.push(format!("{name} {gib:.2} GiB"));
    }
    let unified_ratio = reference::UNIFIED_MIB / reference::BASELINE_MIB;
    let bnode_ratio = reference::BNODE_MIB / reference::BASELINE_MIB;
    ensure!(
        within(unified_ratio, 238.0, 1.0),
        "unified ratio {unified_ratio:.1}"
    );
    ensure!(
        within(bnode_ratio, 174.0, 1.0),
        "blank-node ratio {bnode_ratio:.1}"
    );

    // Measured projection: static part once, the rest per day.
    let ds = generate(&FixtureParams {
        sampling_interval: 600,
        jobs_per_system: 0,
        ..FixtureParams::default()
    })
    .map_err(|e| e.to_string())?;
    let report = compare_modes(&ds).map_err(|e| e.to_string())?;
    for s in &report.stats {
        ensure!(
            project_storage(s, 1) == s.bytes,
            "{}: one-day projection differs",
            s.mode
        );
        let variable = s.bytes - s.static_bytes;
        ensure!(
            project_storage(s, days) == s.static_bytes + days * variable,
            "{}: projection",
            s.mode
        );
    }
    Ok(format!(
        "{}; ratios {unified_ratio:.1}x and {bnode_ratio:.1}x",
        parts.join(", ")
    ))
}

fn suite_params(seed: u64) -> FixtureParams {
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

fn competency_suite() -> Check {
    let queries = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("queries");
    let start = Instant::now();
    for seed in [1, 2, 3] {
        let ds = generate(&suite_params(seed)).map_err(|e| e.to_string())?;
        let store = build_graph(&ds, &BuildOptions::new(SchemaMode::UnifiedUri))
            .map_err(|e| e.to_string())?;
        let result = run_suite(&store, &queries, &Manifest::derive(&ds), &ds);
        ensure!(
            result.entries.len() == QUESTION_IDS.len(),
            "seed {seed}: {} entries",
            result.entries.len()
        );
        ensure!(result.all_passed(), "seed {seed}:\n{result}");
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "{} questions parsed and matched on seeds 1, 2, 3",
        QUESTION_IDS.len()
    ))
}

fn run_property<S: Strategy>(
    name: &str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&strategy, test)
        .map_err(|e| format!("{name}: {e}"))
}

fn small_term(kind: u8, n: u8) -> Term {
    match kind {
        0 => Term::iri(format!("http://ex.org/n{n}")).unwrap(),
        1 => Term::blank(format!("b{n}")).unwrap(),
        _ => Term::literal(format!("{n}"), "http://www.w3.org/2001/XMLSchema#integer").unwrap(),
    }
}

fn arb_triples() -> impl Strategy<Value = Vec<Triple>> {
    prop::collection::vec((0u8..2, 0u8..15, 0u8..4, 0u8..3, 0u8..15), 0..200).prop_map(|v| {
        v.into_iter()
            .map(|(sk, s, p, ok, o)| {
                Triple::new(
                    small_term(sk, s),
                    Term::iri(format!("http://ex.org/p{p}")).unwrap(),
                    small_term(ok, o),
                )
                .unwrap()
            })
            .collect()
    })
}

fn property_suites() -> Check {
    run_property(
        "store matches a linear scan",
        100,
        (arb_triples(), 0u8..8, any::<prop::sample::Index>()),
        |(triples, mask, pick)| {
            let store = TripleStore::from_triples(triples.clone()).unwrap();
            let distinct: BTreeSet<Triple> = triples.iter().cloned().collect();
            prop_assert_eq!(store.len(), distinct.len());
            if let Some(probe) = (!triples.is_empty()).then(|| &triples[pick.index(triples.len())])
            {
                let pattern = TriplePattern::new(
                    (mask & 1 != 0).then(|| probe.subject.clone()),
                    (mask & 2 != 0).then(|| probe.predicate.clone()),
                    (mask & 4 != 0).then(|| probe.object.clone()),
                );
                let got: BTreeSet<Triple> = store.matches(&pattern).collect();
                let want: BTreeSet<Triple> = distinct
                    .iter()
                    .filter(|t| {
                        pattern.subject.as_ref().is_none_or(|s| *s == t.subject)
                            && pattern.predicate.as_ref().is_none_or(|p| *p == t.predicate)
                            && pattern.object.as_ref().is_none_or(|o| *o == t.object)
                    })
                    .cloned()
                    .collect();
                prop_assert_eq!(got, want);
            }
            Ok(())
        },
    )?;

    run_property(
        "N-Triples write-read-write",
        100,
        arb_triples(),
        |triples| {
            let store = TripleStore::from_triples(triples).unwrap();
            let mut first = Vec::new();
            write_graph(&store, &mut first, RdfFormat::NTriples).unwrap();
            let back = read_graph(first.as_slice(), RdfFormat::NTriples).unwrap();
            let mut second = Vec::new();
            write_graph(&back, &mut second, RdfFormat::NTriples).unwrap();
            prop_assert_eq!(first, second);
            let mut ttl = Vec::new();
            write_graph(&store, &mut ttl, RdfFormat::Turtle).unwrap();
            let from_ttl = read_graph(ttl.as_slice(), RdfFormat::Turtle).unwrap();
            prop_assert_eq!(
                from_ttl.iter().collect::<BTreeSet<_>>(),
                store.iter().collect::<BTreeSet<_>>()
            );
            Ok(())
        },
    )?;

    let shapes = (any::<u64>(), 1usize..3, 1usize..5, 1i64..5, 0usize..3);
    run_property(
        "reading triples are k times R",
        32,
        shapes,
        |(seed, nodes, sensors, steps, jobs)| {
            let ds = generate(&FixtureParams {
                seed,
                nodes_per_rack: nodes,
                sensors_per_node: sensors,
                sampling_interval: 3_600,
                duration: steps * 3_600,
                jobs_per_system: jobs,
                ..FixtureParams::default()
            })
            .unwrap();
            for mode in [SchemaMode::UnifiedUri, SchemaMode::UnifiedBnode] {
                let opts = BuildOptions::new(mode);
                let full = build_graph(&ds, &opts).unwrap().len();
                let base = build_graph(&without_readings(&ds), &opts).unwrap().len();
                prop_assert_eq!(full - base, 4 * ds.readings.len());
            }
            Ok(())
        },
    )?;

    let edges = prop::collection::vec((0u8..6, 0u8..3, 0u8..6), 0..40);
    run_property("join order does not change answers", 100, edges, |edges| {
        let iri = |s: String| Term::iri(format!("http://ex.org/{s}")).unwrap();
        let store = TripleStore::from_triples(edges.iter().map(|&(s, p, o)| {
            Triple::new(
                iri(format!("n{s}")),
                iri(format!("p{p}")),
                iri(format!("n{o}")),
            )
            .unwrap()
        }))
        .unwrap();
        let ast = parse_query(
            "SELECT ?a ?c WHERE { ?c ?p ?a . ?a <http://ex.org/p0> ?b . ?b <http://ex.org/p1> ?c . }",
        )
        .unwrap();
        let mut planned = evaluate_with(&ast, &store, EvalOptions::default()).lexical_rows();
        let mut written =
            evaluate_with(&ast, &store, EvalOptions { reorder: false }).lexical_rows();
        planned.sort();
        written.sort();
        prop_assert_eq!(planned, written);
        Ok(())
    })?;

    Ok("index matching, serialization round trips, template counts, join order".into())
}

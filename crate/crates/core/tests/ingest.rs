use std::fs;

use oda_core::fixture::{generate, write_fixture, FixtureParams, DEFAULT_START};
use oda_core::ingest::{load_dataset, IngestError, READINGS, SENSORS};
use proptest::prelude::*;

fn small(seed: u64) -> FixtureParams {
    FixtureParams {
        seed,
        systems_per_dc: 2,
        nodes_per_rack: 3,
        sampling_interval: 600,
        duration: 6 * 3600,
        ..FixtureParams::default()
    }
}

#[test]
fn write_then_load_is_identity() {
    let ds = generate(&small(11)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_fixture(&ds, dir.path()).unwrap();
    let back = load_dataset(dir.path()).unwrap();
    assert_eq!(back, ds);
}

#[test]
fn missing_file_is_reported() {
    let ds = generate(&small(1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_fixture(&ds, dir.path()).unwrap();
    fs::remove_file(dir.path().join(SENSORS)).unwrap();
    match load_dataset(dir.path()) {
        Err(IngestError::MissingFile(p)) => assert!(p.ends_with(SENSORS)),
        other => panic!("expected missing file, got {other:?}"),
    }
}

#[test]
fn dangling_reading_reports_its_line() {
    let ds = generate(&small(1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_fixture(&ds, dir.path()).unwrap();
    let path = dir.path().join(READINGS);
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str(&format!("999,total_power,{DEFAULT_START},1.0\n"));
    fs::write(&path, text).unwrap();
    // Header is line 1.
    let expected_line = ds.readings.len() as u64 + 2;
    match load_dataset(dir.path()) {
        Err(IngestError::DanglingKey { file, line, .. }) => {
            assert_eq!(file, READINGS);
            assert_eq!(line, expected_line);
        }
        other => panic!("expected dangling key, got {other:?}"),
    }
}

#[test]
fn malformed_value_is_reported() {
    let ds = generate(&small(1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_fixture(&ds, dir.path()).unwrap();
    let path = dir.path().join(READINGS);
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
    let mut cols: Vec<&str> = lines[1].split(',').collect();
    cols[3] = "warm";
    lines[1] = cols.join(",");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    assert!(matches!(
        load_dataset(dir.path()),
        Err(IngestError::Malformed {
            file: READINGS,
            line: 2,
            ..
        })
    ));
}

#[test]
fn inverted_range_is_rejected() {
    let ds = generate(&small(1)).unwrap();
    assert!(matches!(
        ds.slice_by_time(10, 5),
        Err(IngestError::InvalidRange { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn slice_matches_filter(a in -3600i64..30_000, len in 0i64..30_000) {
        let ds = generate(&small(5)).unwrap();
        let (t1, t2) = (DEFAULT_START + a, DEFAULT_START + a + len);
        let sliced = ds.slice_by_time(t1, t2).unwrap();

        let readings: Vec<_> = ds.readings.iter().filter(|r| r.ts >= t1 && r.ts < t2).cloned().collect();
        prop_assert_eq!(&sliced.readings, &readings);
        for j in &ds.jobs {
            let overlaps = len > 0 && j.start < t2 && j.end >= t1;
            prop_assert_eq!(sliced.jobs.iter().any(|k| k.id == j.id), overlaps);
        }
        prop_assert!(sliced.job_metrics.iter().all(|m| sliced.jobs.iter().any(|j| j.id == m.job_id)));
        prop_assert_eq!(&sliced.nodes, &ds.nodes);
        prop_assert_eq!(&sliced.sensors, &ds.sensors);
        sliced.validate().unwrap();
    }
}

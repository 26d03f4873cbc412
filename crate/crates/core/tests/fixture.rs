use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use oda_core::fixture::{generate, write_fixture, FixtureError, FixtureParams};

fn params(seed: u64) -> FixtureParams {
    FixtureParams {
        seed,
        data_centers: 2,
        racks_per_system: 2,
        nodes_per_rack: 2,
        sampling_interval: 300,
        duration: 4 * 3600,
        job_centric: true,
        ..FixtureParams::default()
    }
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

#[test]
fn same_seed_gives_byte_identical_directories() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    write_fixture(&generate(&params(42)).unwrap(), a.path()).unwrap();
    write_fixture(&generate(&params(42)).unwrap(), b.path()).unwrap();
    let (da, db) = (dir_bytes(a.path()), dir_bytes(b.path()));
    assert_eq!(da.len(), 10);
    assert_eq!(da, db);
}

#[test]
fn different_seed_changes_values_not_shape() {
    let a = generate(&params(1)).unwrap();
    let b = generate(&params(2)).unwrap();
    assert_eq!(a.nodes, b.nodes);
    assert_eq!(a.sensors, b.sensors);
    assert_eq!(a.readings.len(), b.readings.len());
    assert_ne!(a.readings, b.readings);
}

#[test]
fn reading_count_is_the_product_of_the_shape() {
    let p = params(3);
    let ds = generate(&p).unwrap();
    let expected = 2 * 2 * 2 * p.sensors_per_node * (4 * 3600 / 300) as usize;
    assert_eq!(ds.readings.len(), expected);
    assert_eq!(p.projected_readings(), expected as u128);
}

#[test]
fn cap_is_enforced_before_generation() {
    let p = FixtureParams {
        max_readings: 10,
        ..params(0)
    };
    assert!(matches!(
        generate(&p),
        Err(FixtureError::TooManyReadings { cap: 10, .. })
    ));
}

//! Tabular telemetry: the [`Dataset`] model, loading and writing the fixture
//! directory layout, and time slicing.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::rdf::lexical;

#[derive(Debug, Clone, PartialEq)]
pub struct DataCenter {
    pub id: i64,
    pub name: String,
    pub location: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HpcSystem {
    pub id: i64,
    pub dc_id: i64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rack {
    pub id: i64,
    pub system_id: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComputeNode {
    pub id: i64,
    pub rack_id: i64,
    pub pos_x: i64,
    pub pos_y: i64,
    pub pos_z: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plugin {
    pub node_id: i64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sensor {
    pub node_id: i64,
    pub plugin_name: String,
    pub name: String,
    pub sensor_type: String,
    pub unit: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct User {
    pub id: i64,
    pub system_id: i64,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub id: i64,
    pub user_id: i64,
    pub group_id: i64,
    pub name: String,
    pub exit_code: i64,
    /// Unix seconds.
    pub start: i64,
    pub end: i64,
    pub node_ids: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JobMetric {
    pub job_id: i64,
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reading {
    pub node_id: i64,
    pub sensor_name: String,
    pub ts: i64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub data_centers: Vec<DataCenter>,
    pub systems: Vec<HpcSystem>,
    pub racks: Vec<Rack>,
    pub nodes: Vec<ComputeNode>,
    pub plugins: Vec<Plugin>,
    pub sensors: Vec<Sensor>,
    pub users: Vec<User>,
    pub jobs: Vec<Job>,
    pub job_metrics: Vec<JobMetric>,
    pub readings: Vec<Reading>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing input file {0}")]
    MissingFile(PathBuf),
    #[error("{file}: expected header {expected:?}, found {found:?}")]
    Header {
        file: &'static str,
        expected: String,
        found: String,
    },
    #[error("{file} line {line}: {message}")]
    Malformed {
        file: &'static str,
        line: u64,
        message: String,
    },
    #[error("{file} line {line}: unknown {entity} {key:?}")]
    DanglingKey {
        file: &'static str,
        line: u64,
        entity: &'static str,
        key: String,
    },
    #[error("{file} line {line}: duplicate key {key:?}")]
    DuplicateKey {
        file: &'static str,
        line: u64,
        key: String,
    },
    #[error("invalid time range: start {t1} is after end {t2}")]
    InvalidRange { t1: i64, t2: i64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub const DATACENTERS: &str = "datacenters.csv";
pub const SYSTEMS: &str = "systems.csv";
pub const RACKS: &str = "racks.csv";
pub const NODES: &str = "nodes.csv";
pub const PLUGINS: &str = "plugins.csv";
pub const SENSORS: &str = "sensors.csv";
pub const USERS: &str = "users.csv";
pub const JOBS: &str = "jobs.csv";
pub const JOB_METRICS: &str = "job_metrics.csv";
pub const READINGS: &str = "readings.csv";

const LAYOUT: [(&str, &[&str]); 10] = [
    (DATACENTERS, &["dc_id", "name", "location"]),
    (SYSTEMS, &["system_id", "dc_id", "name"]),
    (RACKS, &["rack_id", "system_id"]),
    (NODES, &["node_id", "rack_id", "pos_x", "pos_y", "pos_z"]),
    (PLUGINS, &["node_id", "plugin_name"]),
    (
        SENSORS,
        &[
            "node_id",
            "plugin_name",
            "sensor_name",
            "sensor_type",
            "sensor_unit",
        ],
    ),
    (USERS, &["user_id", "system_id", "user_name"]),
    (
        JOBS,
        &[
            "job_id",
            "user_id",
            "group_id",
            "job_name",
            "exit_code",
            "start_ts",
            "end_ts",
            "node_ids",
        ],
    ),
    (JOB_METRICS, &["job_id", "metric_name", "metric_value"]),
    (READINGS, &["node_id", "sensor_name", "ts", "value"]),
];

/// Parses a timestamp given either as Unix seconds or as ISO 8601.
pub fn parse_timestamp(text: &str) -> Option<i64> {
    let text = text.trim();
    text.parse::<i64>()
        .ok()
        .or_else(|| lexical::parse_date_time(text).map(|i| i.secs))
}

struct Row<'a> {
    file: &'static str,
    line: u64,
    record: &'a csv::StringRecord,
}

impl Row<'_> {
    fn malformed(&self, message: impl Into<String>) -> IngestError {
        IngestError::Malformed {
            file: self.file,
            line: self.line,
            message: message.into(),
        }
    }

    fn str(&self, i: usize) -> String {
        self.record[i].to_owned()
    }

    fn int(&self, i: usize, column: &str) -> Result<i64, IngestError> {
        self.record[i].trim().parse().map_err(|_| {
            self.malformed(format!(
                "{column}: expected integer, found {:?}",
                &self.record[i]
            ))
        })
    }

    fn float(&self, i: usize, column: &str) -> Result<f64, IngestError> {
        lexical::parse_double(self.record[i].trim()).ok_or_else(|| {
            self.malformed(format!(
                "{column}: expected number, found {:?}",
                &self.record[i]
            ))
        })
    }

    fn ts(&self, i: usize, column: &str) -> Result<i64, IngestError> {
        let ts = parse_timestamp(&self.record[i]).ok_or_else(|| {
            self.malformed(format!(
                "{column}: expected timestamp, found {:?}",
                &self.record[i]
            ))
        })?;
        if ts < 0 {
            return Err(self.malformed(format!("{column}: negative timestamp {ts}")));
        }
        Ok(ts)
    }
}

fn read_table<T>(
    dir: &Path,
    index: usize,
    mut parse: impl FnMut(&Row) -> Result<T, IngestError>,
) -> Result<(Vec<T>, Vec<u64>), IngestError> {
    let (file, columns) = LAYOUT[index];
    let path = dir.join(file);
    if !path.is_file() {
        return Err(IngestError::MissingFile(path));
    }
    let io_err = |source| IngestError::Io {
        path: path.clone(),
        source,
    };
    let csv_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(source),
        csv::ErrorKind::Utf8 { pos, err } => IngestError::Malformed {
            file,
            line: pos.map(|p| p.line()).unwrap_or(0),
            message: err.to_string(),
        },
        csv::ErrorKind::UnequalLengths {
            pos,
            expected_len,
            len,
        } => IngestError::Malformed {
            file,
            line: pos.map(|p| p.line()).unwrap_or(0),
            message: format!("expected {expected_len} fields, found {len}"),
        },
        other => IngestError::Malformed {
            file,
            line: 0,
            message: format!("{other:?}"),
        },
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(File::open(&path).map_err(io_err)?);
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().map(str::trim).ne(columns.iter().copied()) {
        return Err(IngestError::Header {
            file,
            expected: columns.join(","),
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    let mut record = csv::StringRecord::new();
    while reader.read_record(&mut record).map_err(csv_err)? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        rows.push(parse(&Row {
            file,
            line,
            record: &record,
        })?);
        lines.push(line);
    }
    Ok((rows, lines))
}

/// Source line of every row, per file, used for error messages.
#[derive(Debug, Default)]
struct Lines(HashMap<&'static str, Vec<u64>>);

impl Lines {
    fn get(&self, file: &'static str, row: usize) -> u64 {
        self.0
            .get(file)
            .and_then(|l| l.get(row).copied())
            .unwrap_or(row as u64 + 2)
    }
}

/// Loads the fixture directory layout from `dir` and validates keys.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<Dataset, IngestError> {
    let dir = dir.as_ref();
    let mut lines = Lines::default();
    macro_rules! table {
        ($index:expr, $parse:expr) => {{
            let (rows, l) = read_table(dir, $index, $parse)?;
            lines.0.insert(LAYOUT[$index].0, l);
            rows
        }};
    }
    let ds = Dataset {
        data_centers: table!(0, |r| Ok(DataCenter {
            id: r.int(0, "dc_id")?,
            name: r.str(1),
            location: r.str(2),
        })),
        systems: table!(1, |r| Ok(HpcSystem {
            id: r.int(0, "system_id")?,
            dc_id: r.int(1, "dc_id")?,
            name: r.str(2),
        })),
        racks: table!(2, |r| Ok(Rack {
            id: r.int(0, "rack_id")?,
            system_id: r.int(1, "system_id")?,
        })),
        nodes: table!(3, |r| Ok(ComputeNode {
            id: r.int(0, "node_id")?,
            rack_id: r.int(1, "rack_id")?,
            pos_x: r.int(2, "pos_x")?,
            pos_y: r.int(3, "pos_y")?,
            pos_z: r.int(4, "pos_z")?,
        })),
        plugins: table!(4, |r| Ok(Plugin {
            node_id: r.int(0, "node_id")?,
            name: r.str(1),
        })),
        sensors: table!(5, |r| Ok(Sensor {
            node_id: r.int(0, "node_id")?,
            plugin_name: r.str(1),
            name: r.str(2),
            sensor_type: r.str(3),
            unit: r.str(4),
        })),
        users: table!(6, |r| Ok(User {
            id: r.int(0, "user_id")?,
            system_id: r.int(1, "system_id")?,
            name: r.str(2),
        })),
        jobs: table!(7, |r| {
            let node_ids = r.record[7]
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse().map_err(|_| {
                        r.malformed(format!("node_ids: expected integer, found {s:?}"))
                    })
                })
                .collect::<Result<_, _>>()?;
            Ok(Job {
                id: r.int(0, "job_id")?,
                user_id: r.int(1, "user_id")?,
                group_id: r.int(2, "group_id")?,
                name: r.str(3),
                exit_code: r.int(4, "exit_code")?,
                start: r.ts(5, "start_ts")?,
                end: r.ts(6, "end_ts")?,
                node_ids,
            })
        }),
        job_metrics: table!(8, |r| Ok(JobMetric {
            job_id: r.int(0, "job_id")?,
            name: r.str(1),
            value: r.float(2, "metric_value")?,
        })),
        readings: table!(9, |r| Ok(Reading {
            node_id: r.int(0, "node_id")?,
            sensor_name: r.str(1),
            ts: r.ts(2, "ts")?,
            value: r.float(3, "value")?,
        })),
    };
    check(&ds, &lines)?;
    Ok(ds)
}

impl Dataset {
    /// Checks key uniqueness, foreign keys, and job/reading time constraints.
    pub fn validate(&self) -> Result<(), IngestError> {
        check(self, &Lines::default())
    }

    /// Sensors of `node_id` in dataset order; the position is the sensor's
    /// per-node index.
    pub fn sensors_of(&self, node_id: i64) -> impl Iterator<Item = &Sensor> {
        self.sensors.iter().filter(move |s| s.node_id == node_id)
    }

    pub fn node(&self, id: i64) -> Option<&ComputeNode> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn rack(&self, id: i64) -> Option<&Rack> {
        self.racks.iter().find(|r| r.id == id)
    }

    pub fn user(&self, id: i64) -> Option<&User> {
        self.users.iter().find(|u| u.id == id)
    }

    /// System that hosts `node_id`, via its rack.
    pub fn system_of_node(&self, node_id: i64) -> Option<i64> {
        self.rack(self.node(node_id)?.rack_id).map(|r| r.system_id)
    }

    /// Restricts readings to `[t1, t2)` and jobs to those whose run overlaps
    /// that window (with metrics following their jobs). Topology is kept.
    pub fn slice_by_time(&self, t1: i64, t2: i64) -> Result<Dataset, IngestError> {
        if t1 > t2 {
            return Err(IngestError::InvalidRange { t1, t2 });
        }
        let jobs: Vec<Job> = self
            .jobs
            .iter()
            .filter(|j| t1 < t2 && j.start < t2 && j.end >= t1)
            .cloned()
            .collect();
        let kept: HashSet<i64> = jobs.iter().map(|j| j.id).collect();
        Ok(Dataset {
            jobs,
            job_metrics: self
                .job_metrics
                .iter()
                .filter(|m| kept.contains(&m.job_id))
                .cloned()
                .collect(),
            readings: self
                .readings
                .iter()
                .filter(|r| t1 <= r.ts && r.ts < t2)
                .cloned()
                .collect(),
            ..self.clone_static()
        })
    }

    /// Copy with topology, plugins, sensors and users only.
    pub fn clone_static(&self) -> Dataset {
        Dataset {
            data_centers: self.data_centers.clone(),
            systems: self.systems.clone(),
            racks: self.racks.clone(),
            nodes: self.nodes.clone(),
            plugins: self.plugins.clone(),
            sensors: self.sensors.clone(),
            users: self.users.clone(),
            ..Dataset::default()
        }
    }
}

fn check(ds: &Dataset, lines: &Lines) -> Result<(), IngestError> {
    fn unique<K: std::hash::Hash + Eq + std::fmt::Debug>(
        lines: &Lines,
        file: &'static str,
        keys: impl Iterator<Item = K>,
    ) -> Result<HashSet<K>, IngestError> {
        let mut seen = HashSet::new();
        for (row, key) in keys.enumerate() {
            let text = format!("{key:?}");
            if !seen.insert(key) {
                return Err(IngestError::DuplicateKey {
                    file,
                    line: lines.get(file, row),
                    key: text,
                });
            }
        }
        Ok(seen)
    }
    let dangling = |file: &'static str, row: usize, entity: &'static str, key: String| {
        IngestError::DanglingKey {
            file,
            line: lines.get(file, row),
            entity,
            key,
        }
    };
    fn require<K: std::hash::Hash + Eq>(
        set: &HashSet<K>,
        key: &K,
        err: impl FnOnce() -> IngestError,
    ) -> Result<(), IngestError> {
        if set.contains(key) {
            Ok(())
        } else {
            Err(err())
        }
    }

    let dcs = unique(lines, DATACENTERS, ds.data_centers.iter().map(|d| d.id))?;
    let systems = unique(lines, SYSTEMS, ds.systems.iter().map(|s| s.id))?;
    for (i, s) in ds.systems.iter().enumerate() {
        require(&dcs, &s.dc_id, || {
            dangling(SYSTEMS, i, "data center", s.dc_id.to_string())
        })?;
    }
    let racks = unique(lines, RACKS, ds.racks.iter().map(|r| r.id))?;
    for (i, r) in ds.racks.iter().enumerate() {
        require(&systems, &r.system_id, || {
            dangling(RACKS, i, "system", r.system_id.to_string())
        })?;
    }
    let nodes = unique(lines, NODES, ds.nodes.iter().map(|n| n.id))?;
    for (i, n) in ds.nodes.iter().enumerate() {
        require(&racks, &n.rack_id, || {
            dangling(NODES, i, "rack", n.rack_id.to_string())
        })?;
    }
    let plugins = unique(
        lines,
        PLUGINS,
        ds.plugins.iter().map(|p| (p.node_id, p.name.as_str())),
    )?;
    for (i, p) in ds.plugins.iter().enumerate() {
        require(&nodes, &p.node_id, || {
            dangling(PLUGINS, i, "node", p.node_id.to_string())
        })?;
    }
    let sensors = unique(
        lines,
        SENSORS,
        ds.sensors.iter().map(|s| (s.node_id, s.name.as_str())),
    )?;
    for (i, s) in ds.sensors.iter().enumerate() {
        require(&nodes, &s.node_id, || {
            dangling(SENSORS, i, "node", s.node_id.to_string())
        })?;
        require(&plugins, &(s.node_id, s.plugin_name.as_str()), || {
            dangling(SENSORS, i, "plugin", s.plugin_name.clone())
        })?;
    }
    let users = unique(lines, USERS, ds.users.iter().map(|u| u.id))?;
    for (i, u) in ds.users.iter().enumerate() {
        require(&systems, &u.system_id, || {
            dangling(USERS, i, "system", u.system_id.to_string())
        })?;
    }
    let jobs = unique(lines, JOBS, ds.jobs.iter().map(|j| j.id))?;
    for (i, j) in ds.jobs.iter().enumerate() {
        require(&users, &j.user_id, || {
            dangling(JOBS, i, "user", j.user_id.to_string())
        })?;
        for n in &j.node_ids {
            require(&nodes, n, || dangling(JOBS, i, "node", n.to_string()))?;
        }
        if j.end < j.start || j.start < 0 {
            return Err(IngestError::Malformed {
                file: JOBS,
                line: lines.get(JOBS, i),
                message: format!(
                    "job {} ends ({}) before it starts ({})",
                    j.id, j.end, j.start
                ),
            });
        }
    }
    unique(
        lines,
        JOB_METRICS,
        ds.job_metrics.iter().map(|m| (m.job_id, m.name.as_str())),
    )?;
    for (i, m) in ds.job_metrics.iter().enumerate() {
        require(&jobs, &m.job_id, || {
            dangling(JOB_METRICS, i, "job", m.job_id.to_string())
        })?;
    }
    unique(
        lines,
        READINGS,
        ds.readings
            .iter()
            .map(|r| (r.node_id, r.sensor_name.as_str(), r.ts)),
    )?;
    for (i, r) in ds.readings.iter().enumerate() {
        require(&sensors, &(r.node_id, r.sensor_name.as_str()), || {
            dangling(READINGS, i, "sensor", r.sensor_name.clone())
        })?;
        if r.ts < 0 {
            return Err(IngestError::Malformed {
                file: READINGS,
                line: lines.get(READINGS, i),
                message: format!("negative timestamp {}", r.ts),
            });
        }
    }
    Ok(())
}

fn write_table<W: Write>(ds: &Dataset, index: usize, sink: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(LAYOUT[index].1)?;
    let mut row = |fields: &[&str]| w.write_record(fields);
    match index {
        0 => {
            for d in &ds.data_centers {
                row(&[&d.id.to_string(), &d.name, &d.location])?;
            }
        }
        1 => {
            for s in &ds.systems {
                row(&[&s.id.to_string(), &s.dc_id.to_string(), &s.name])?;
            }
        }
        2 => {
            for r in &ds.racks {
                row(&[&r.id.to_string(), &r.system_id.to_string()])?;
            }
        }
        3 => {
            for n in &ds.nodes {
                row(&[
                    &n.id.to_string(),
                    &n.rack_id.to_string(),
                    &n.pos_x.to_string(),
                    &n.pos_y.to_string(),
                    &n.pos_z.to_string(),
                ])?;
            }
        }
        4 => {
            for p in &ds.plugins {
                row(&[&p.node_id.to_string(), &p.name])?;
            }
        }
        5 => {
            for s in &ds.sensors {
                row(&[
                    &s.node_id.to_string(),
                    &s.plugin_name,
                    &s.name,
                    &s.sensor_type,
                    &s.unit,
                ])?;
            }
        }
        6 => {
            for u in &ds.users {
                row(&[&u.id.to_string(), &u.system_id.to_string(), &u.name])?;
            }
        }
        7 => {
            for j in &ds.jobs {
                let nodes: Vec<String> = j.node_ids.iter().map(i64::to_string).collect();
                row(&[
                    &j.id.to_string(),
                    &j.user_id.to_string(),
                    &j.group_id.to_string(),
                    &j.name,
                    &j.exit_code.to_string(),
                    &j.start.to_string(),
                    &j.end.to_string(),
                    &nodes.join(";"),
                ])?;
            }
        }
        8 => {
            for m in &ds.job_metrics {
                row(&[
                    &m.job_id.to_string(),
                    &m.name,
                    &lexical::format_double(m.value),
                ])?;
            }
        }
        _ => {
            for r in &ds.readings {
                row(&[
                    &r.node_id.to_string(),
                    &r.sensor_name,
                    &r.ts.to_string(),
                    &lexical::format_double(r.value),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `ds` in the fixture directory layout, creating `dir` if needed.
/// Returns the paths written.
pub fn write_dataset(ds: &Dataset, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>, IngestError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|source| IngestError::Io {
        path: dir.to_owned(),
        source,
    })?;
    let mut written = Vec::new();
    for (index, (file, _)) in LAYOUT.iter().enumerate() {
        let path = dir.join(file);
        let io_err = |source| IngestError::Io {
            path: path.clone(),
            source,
        };
        let f = File::create(&path).map_err(io_err)?;
        write_table(ds, index, std::io::BufWriter::new(f)).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => io_err(source),
            other => io_err(std::io::Error::other(format!("{other:?}"))),
        })?;
        written.push(path);
    }
    Ok(written)
}

/// Total bytes of the fixture files [`write_dataset`] would produce. Used as
/// the tabular baseline in storage comparisons.
pub fn tabular_size(ds: &Dataset) -> u64 {
    (0..LAYOUT.len())
        .map(|index| {
            let mut sink = crate::io::CountingWriter::new(std::io::sink());
            let _ = write_table(ds, index, &mut sink);
            sink.count
        })
        .sum()
}

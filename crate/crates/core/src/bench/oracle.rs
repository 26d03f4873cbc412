//! Reference answers for the competency questions, computed directly from the
//! tables of a [`Dataset`] without going through RDF or the query engine.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_rational::Ratio;

use super::manifest::Manifest;
use super::BenchError;
use crate::builder::UriPolicy;
use crate::ingest::{Dataset, Reading};
use crate::sparql::value::parse_decimal;
use crate::sparql::{ResultTable, Value};

/// A result cell reduced to what the comparison needs.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Iri(String),
    Text(String),
    Num(f64),
    Bool(bool),
}

impl Cell {
    pub fn of(v: Option<&Value>) -> Cell {
        match v {
            None | Some(Value::Error) => Cell::Empty,
            Some(Value::Iri(i)) => Cell::Iri(i.clone()),
            Some(Value::Boolean(b)) => Cell::Bool(*b),
            Some(v) if v.is_numeric() => Cell::Num(v.as_f64().unwrap_or(f64::NAN)),
            Some(v) => Cell::Text(v.lexical()),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Cell::Empty => 0,
            Cell::Iri(_) => 1,
            Cell::Text(_) => 2,
            Cell::Num(_) => 3,
            Cell::Bool(_) => 4,
        }
    }

    fn order(&self, other: &Cell) -> Ordering {
        match (self, other) {
            (Cell::Iri(a), Cell::Iri(b)) | (Cell::Text(a), Cell::Text(b)) => a.cmp(b),
            (Cell::Num(a), Cell::Num(b)) => a.total_cmp(b),
            (Cell::Bool(a), Cell::Bool(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }

    fn matches(&self, other: &Cell) -> bool {
        match (self, other) {
            (Cell::Num(a), Cell::Num(b)) => {
                a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
            }
            _ => self == other,
        }
    }
}

pub type Rows = Vec<Vec<Cell>>;

pub fn table_rows(t: &ResultTable) -> Rows {
    t.rows
        .iter()
        .map(|r| r.iter().map(|c| Cell::of(c.as_ref())).collect())
        .collect()
}

/// Multiset equality of rows, numbers within 1e-9 relative.
pub fn rows_match(a: &Rows, b: &Rows) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let sort = |rows: &Rows| {
        let mut r = rows.clone();
        r.sort_by(|x, y| {
            x.iter()
                .zip(y)
                .map(|(p, q)| p.order(q))
                .find(|o| o.is_ne())
                .unwrap_or_else(|| x.len().cmp(&y.len()))
        });
        r
    };
    let (a, b) = (sort(a), sort(b));
    a.iter()
        .zip(&b)
        .all(|(x, y)| x.len() == y.len() && x.iter().zip(y).all(|(p, q)| p.matches(q)))
}

fn num(v: impl Into<f64>) -> Cell {
    Cell::Num(v.into())
}

fn int(v: i64) -> Cell {
    Cell::Num(v as f64)
}

fn text(s: &str) -> Cell {
    Cell::Text(s.to_owned())
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// MAX, MIN, AVG, COUNT as the aggregate queries report them.
fn summary(values: &[f64]) -> Vec<Cell> {
    let max = values.iter().copied().reduce(f64::max);
    let min = values.iter().copied().reduce(f64::min);
    vec![
        max.map_or(Cell::Empty, Cell::Num),
        min.map_or(Cell::Empty, Cell::Num),
        num(mean(values)),
        int(values.len() as i64),
    ]
}

struct Tables<'a> {
    ds: &'a Dataset,
    node_system: HashMap<i64, i64>,
    sensor_type: HashMap<(i64, &'a str), &'a str>,
    metric: HashMap<(i64, &'a str), f64>,
    user_system: HashMap<i64, i64>,
}

impl<'a> Tables<'a> {
    fn new(ds: &'a Dataset) -> Self {
        let rack_system: HashMap<i64, i64> = ds.racks.iter().map(|r| (r.id, r.system_id)).collect();
        Tables {
            ds,
            node_system: ds
                .nodes
                .iter()
                .filter_map(|n| rack_system.get(&n.rack_id).map(|s| (n.id, *s)))
                .collect(),
            sensor_type: ds
                .sensors
                .iter()
                .map(|s| ((s.node_id, s.name.as_str()), s.sensor_type.as_str()))
                .collect(),
            metric: ds
                .job_metrics
                .iter()
                .map(|m| ((m.job_id, m.name.as_str()), m.value))
                .collect(),
            user_system: ds.users.iter().map(|u| (u.id, u.system_id)).collect(),
        }
    }

    fn readings(&self) -> impl Iterator<Item = &'a Reading> {
        self.ds.readings.iter()
    }

    fn is_temperature(&self, r: &Reading) -> bool {
        self.sensor_type.get(&(r.node_id, r.sensor_name.as_str())) == Some(&"temperature")
    }

    fn job_nodes(&self, job: &crate::ingest::Job) -> BTreeSet<i64> {
        job.node_ids.iter().copied().collect()
    }

    fn user_name(&self, id: i64) -> Option<&'a str> {
        self.ds.user(id).map(|u| u.name.as_str())
    }
}

fn sq(a: i64, b: i64) -> i64 {
    (a - b) * (a - b)
}

/// Reference answer for question `id`, in the column order of its query.
pub fn answer(id: &str, ds: &Dataset, m: &Manifest) -> Result<Rows, BenchError> {
    let t = Tables::new(ds);
    let in_window = |ts: i64, from: &str, to: &str| -> Result<bool, BenchError> {
        Ok(ts >= m.time(id, from)? && ts < m.time(id, to)?)
    };
    let mut rows: Rows = Vec::new();
    match id {
        "C1.1" => {
            let dc = m.int(id, "dc")?;
            for s in ds.systems.iter().filter(|s| s.dc_id == dc) {
                rows.push(vec![text(&s.name)]);
            }
        }
        "C1.2" => {
            let dc = m.int(id, "dc")?;
            for n in &ds.nodes {
                let in_dc = t
                    .node_system
                    .get(&n.id)
                    .and_then(|s| ds.systems.iter().find(|x| x.id == *s))
                    .is_some_and(|s| s.dc_id == dc);
                if in_dc {
                    rows.push(vec![int(n.id), int(n.pos_x), int(n.pos_y), int(n.pos_z)]);
                }
            }
        }
        "C1.3" => {
            let (system, rack) = (m.int(id, "system")?, m.int(id, "rack")?);
            if ds.rack(rack).is_some_and(|r| r.system_id == system) {
                for n in ds.nodes.iter().filter(|n| n.rack_id == rack) {
                    rows.push(vec![int(n.id)]);
                }
            }
        }
        "C1.4" => {
            let node = m.int(id, "node")?;
            for s in ds.sensors_of(node) {
                rows.push(vec![text(&s.name), text(&s.sensor_type)]);
            }
        }
        "C1.5" => {
            let (node, r2) = (m.int(id, "node")?, m.int(id, "radius2")?);
            if let (Some(n), Some(sys)) = (ds.node(node), t.node_system.get(&node)) {
                for o in &ds.nodes {
                    let d = sq(o.pos_x, n.pos_x) + sq(o.pos_y, n.pos_y) + sq(o.pos_z, n.pos_z);
                    if o.id != node && t.node_system.get(&o.id) == Some(sys) && d <= r2 {
                        rows.push(vec![int(o.id)]);
                    }
                }
            }
        }
        "C1.6" => {
            let (x, y, z, r2) = (
                m.int(id, "x")?,
                m.int(id, "y")?,
                m.int(id, "z")?,
                m.int(id, "radius2")?,
            );
            for o in &ds.nodes {
                if sq(o.pos_x, x) + sq(o.pos_y, y) + sq(o.pos_z, z) <= r2 {
                    rows.push(vec![int(o.id)]);
                }
            }
        }
        "C2.1" => {
            let (node, sensor) = (m.int(id, "node")?, m.require(id, "sensor")?);
            let mut v = Vec::new();
            for r in t.readings() {
                if r.node_id == node && r.sensor_name == sensor && in_window(r.ts, "from", "to")? {
                    v.push(r.value);
                }
            }
            rows.push(summary(&v));
        }
        "C2.2" => {
            let (rack, sensor) = (m.int(id, "rack")?, m.require(id, "sensor")?);
            let nodes: BTreeSet<i64> = ds
                .nodes
                .iter()
                .filter(|n| n.rack_id == rack)
                .map(|n| n.id)
                .collect();
            let mut v = Vec::new();
            for r in t.readings() {
                if nodes.contains(&r.node_id)
                    && r.sensor_name == sensor
                    && in_window(r.ts, "day_from", "day_to")?
                {
                    v.push(r.value);
                }
            }
            rows.push(summary(&v));
        }
        "C2.3" => {
            let (job, sensor) = (m.int(id, "job")?, m.require(id, "sensor")?);
            let mut v = Vec::new();
            if let Some(j) = ds.jobs.iter().find(|j| j.id == job) {
                let nodes = t.job_nodes(j);
                v.extend(
                    t.readings()
                        .filter(|r| nodes.contains(&r.node_id) && r.sensor_name == sensor)
                        .filter(|r| r.ts >= j.start && r.ts <= j.end)
                        .map(|r| r.value),
                );
            }
            rows.push(summary(&v));
        }
        "C2.4" => {
            let th = m.float(id, "threshold")?;
            for r in t.readings() {
                if r.value > th && in_window(r.ts, "hour_from", "hour_to")? {
                    rows.push(vec![
                        int(r.node_id),
                        text(&r.sensor_name),
                        num(r.value),
                        int(r.ts),
                    ]);
                }
            }
        }
        "C2.5" => {
            let th = m.float(id, "threshold")?;
            let mut nodes = BTreeSet::new();
            for r in t.readings() {
                if t.is_temperature(r) && r.value > th && in_window(r.ts, "week_from", "week_to")? {
                    nodes.insert(r.node_id);
                }
            }
            rows.extend(nodes.into_iter().map(|n| vec![int(n)]));
        }
        "C2.6" => {
            let node = m.int(id, "node")?;
            let mut v = Vec::new();
            for r in t.readings() {
                if r.node_id == node && t.is_temperature(r) && in_window(r.ts, "from", "to")? {
                    v.push(r.value);
                }
            }
            rows.push(vec![num(mean(&v))]);
        }
        "C2.7" => {
            let mut per_node: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
            for r in t.readings() {
                if r.sensor_name == "cpu_util" && in_window(r.ts, "last24_from", "last24_to")? {
                    per_node.entry(r.node_id).or_default().push(r.value);
                }
            }
            rows.extend(
                per_node
                    .into_iter()
                    .map(|(n, v)| vec![int(n), num(mean(&v))]),
            );
        }
        "C2.8" => {
            let (node, at) = (m.int(id, "node")?, m.time(id, "at")?);
            for r in t.readings() {
                if r.node_id == node && r.sensor_name == "total_power" && r.ts == at {
                    rows.push(vec![num(r.value)]);
                }
            }
        }
        "C3.1" => {
            let job = m.int(id, "job")?;
            for x in ds.job_metrics.iter().filter(|x| x.job_id == job) {
                if x.name == "power" || x.name == "energy" {
                    rows.push(vec![text(&x.name), num(x.value)]);
                }
            }
        }
        "C3.2" => {
            let job = m.int(id, "job")?;
            if let Some(j) = ds.jobs.iter().find(|j| j.id == job) {
                rows.extend(t.job_nodes(j).into_iter().map(|n| vec![int(n)]));
            }
        }
        "C3.3" => {
            let (from, to) = (m.time(id, "from")?, m.time(id, "to")?);
            for j in ds.jobs.iter().filter(|j| j.start <= to && j.end >= from) {
                rows.push(vec![int(j.id)]);
            }
        }
        "C3.4" => {
            let fraction =
                parse_decimal(m.require(id, "fraction")?).ok_or_else(|| BenchError::BadParam {
                    id: id.to_owned(),
                    param: "fraction".into(),
                    value: m.require(id, "fraction").unwrap_or_default().to_owned(),
                })?;
            for j in &ds.jobs {
                let nodes = t.job_nodes(j);
                let systems: BTreeSet<i64> = nodes
                    .iter()
                    .filter_map(|n| t.node_system.get(n).copied())
                    .collect();
                let placed = nodes
                    .iter()
                    .filter(|n| t.node_system.contains_key(n))
                    .count() as i128;
                let system_nodes = t
                    .node_system
                    .values()
                    .filter(|s| systems.contains(s))
                    .count() as i128;
                if placed > 0
                    && Ratio::from_integer(placed) >= fraction * Ratio::from_integer(system_nodes)
                {
                    rows.push(vec![
                        int(j.id),
                        int(placed as i64),
                        int(system_nodes as i64),
                    ]);
                }
            }
        }
        "C3.5" => {
            let job = m.int(id, "job")?;
            if let Some(j) = ds.jobs.iter().find(|j| j.id == job) {
                rows.push(vec![
                    Cell::Text(format!("PT{}S", j.end - j.start)),
                    int(j.end - j.start),
                ]);
            }
        }
        "C3.6" => {
            let code = m.int(id, "walltime_exit_code")?;
            for j in ds.jobs.iter().filter(|j| j.exit_code == code) {
                if let Some(&requested) = t.metric.get(&(j.id, "requested_walltime")) {
                    if (j.end - j.start) as f64 >= requested {
                        rows.push(vec![int(j.id)]);
                    }
                }
            }
        }
        "C3.7" => {
            let th = m.float(id, "ai_threshold")?;
            for j in &ds.jobs {
                if let Some(&ai) = t.metric.get(&(j.id, "arithmetic_intensity")) {
                    rows.push(vec![int(j.id), num(ai), Cell::Bool(ai < th)]);
                }
            }
        }
        "C3.8" => {
            let th = m.float(id, "ai_threshold")?;
            for j in &ds.jobs {
                let (Some(&ai), Some(&f)) = (
                    t.metric.get(&(j.id, "arithmetic_intensity")),
                    t.metric.get(&(j.id, "cpu_frequency")),
                ) else {
                    continue;
                };
                if (f == 2200.0 && ai < th) || (f == 2000.0 && ai >= th) {
                    rows.push(vec![int(j.id), num(f), num(ai)]);
                }
            }
        }
        "C3.9" => {
            let user = m.int(id, "user")?;
            for j in ds.jobs.iter().filter(|j| j.user_id == user) {
                let nodes = t.job_nodes(j);
                let mut per_sensor: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
                for r in t.readings() {
                    let util = r.sensor_name == "cpu_util" || r.sensor_name == "gpu_util";
                    if util && nodes.contains(&r.node_id) && r.ts >= j.start && r.ts <= j.end {
                        per_sensor.entry(&r.sensor_name).or_default().push(r.value);
                    }
                }
                for (s, v) in per_sensor {
                    rows.push(vec![int(j.id), text(s), num(mean(&v))]);
                }
            }
        }
        "C4.1" => {
            let job = m.int(id, "job")?;
            if let Some(name) = ds
                .jobs
                .iter()
                .find(|j| j.id == job)
                .and_then(|j| t.user_name(j.user_id))
            {
                rows.push(vec![text(name)]);
            }
        }
        "C4.2" | "C4.3" | "C4.6" => {
            let mut names = BTreeSet::new();
            for j in &ds.jobs {
                let keep = match id {
                    "C4.2" => j.group_id == m.int(id, "group")?,
                    "C4.3" => in_window(j.start, "from", "to")?,
                    _ => {
                        let dc = m.int(id, "dc")?;
                        t.user_system
                            .get(&j.user_id)
                            .and_then(|s| ds.systems.iter().find(|x| x.id == *s))
                            .is_some_and(|s| s.dc_id == dc)
                    }
                };
                if keep {
                    names.extend(t.user_name(j.user_id));
                }
            }
            rows.extend(names.into_iter().map(|n| vec![text(n)]));
        }
        "C4.4" => {
            let user = m.int(id, "user")?;
            let mut n = 0;
            for j in ds.jobs.iter().filter(|j| j.user_id == user) {
                if in_window(j.start, "week_from", "week_to")? {
                    n += 1;
                }
            }
            rows.push(vec![int(n)]);
        }
        "C4.5" => {
            let th = m.float(id, "ai_threshold")?;
            let mut per_user: BTreeMap<&str, i64> = BTreeMap::new();
            for j in &ds.jobs {
                if t.metric
                    .get(&(j.id, "arithmetic_intensity"))
                    .is_some_and(|&ai| ai < th)
                {
                    if let Some(name) = t.user_name(j.user_id) {
                        *per_user.entry(name).or_default() += 1;
                    }
                }
            }
            rows.extend(per_user.into_iter().map(|(u, n)| vec![text(u), int(n)]));
        }
        "C5.1" => {
            let waits: Vec<f64> = ds
                .job_metrics
                .iter()
                .filter(|x| x.name == "wait_time")
                .map(|x| x.value)
                .collect();
            rows.push(vec![num(mean(&waits))]);
        }
        "C5.2" => {
            let limit = m.float(id, "hours")? * 3600.0;
            for x in ds
                .job_metrics
                .iter()
                .filter(|x| x.name == "wait_time" && x.value > limit)
            {
                rows.push(vec![int(x.job_id), num(x.value)]);
            }
        }
        "C6.1" => {
            let mut per_dc: BTreeMap<&str, i64> = BTreeMap::new();
            for j in &ds.jobs {
                let dc = t
                    .user_system
                    .get(&j.user_id)
                    .and_then(|s| ds.systems.iter().find(|x| x.id == *s))
                    .and_then(|s| ds.data_centers.iter().find(|d| d.id == s.dc_id));
                if let Some(dc) = dc {
                    *per_dc.entry(&dc.name).or_default() += 1;
                }
            }
            rows.extend(per_dc.into_iter().map(|(d, n)| vec![text(d), int(n)]));
        }
        "C6.2" => {
            let job_system: HashMap<i64, i64> = ds
                .jobs
                .iter()
                .filter_map(|j| t.user_system.get(&j.user_id).map(|s| (j.id, *s)))
                .collect();
            let mut systems: BTreeMap<&str, BTreeSet<i64>> = BTreeMap::new();
            for x in &ds.job_metrics {
                if let Some(s) = job_system.get(&x.job_id) {
                    systems.entry(&x.name).or_default().insert(*s);
                }
            }
            let total = ds.systems.len();
            for (name, s) in systems {
                if s.len() < total {
                    rows.push(vec![text(name), int(s.len() as i64)]);
                }
            }
        }
        "C6.3" => {
            let u = UriPolicy::default();
            for s in &ds.systems {
                let mut durations = Vec::new();
                for j in &ds.jobs {
                    for n in t.job_nodes(j) {
                        if t.node_system.get(&n) == Some(&s.id) {
                            durations.push((j.end - j.start) as f64);
                        }
                    }
                }
                if !durations.is_empty() {
                    rows.push(vec![
                        Cell::Iri(u.system(s.id)),
                        text(&s.name),
                        num(mean(&durations)),
                    ]);
                }
            }
        }
        "C6.4" => {
            for s in &ds.systems {
                let energies: Vec<f64> = ds
                    .jobs
                    .iter()
                    .filter(|j| t.user_system.get(&j.user_id) == Some(&s.id))
                    .filter_map(|j| t.metric.get(&(j.id, "energy")).copied())
                    .collect();
                if !energies.is_empty() {
                    rows.push(vec![text(&s.name), num(mean(&energies))]);
                }
            }
        }
        "C6.5" => {
            let (system, th) = (m.int(id, "system")?, m.float(id, "power_threshold")?);
            let mut totals: BTreeMap<i64, f64> = BTreeMap::new();
            for r in t.readings() {
                if r.sensor_name == "total_power" && t.node_system.get(&r.node_id) == Some(&system)
                {
                    *totals.entry(r.ts).or_default() += r.value;
                }
            }
            rows.extend(
                totals
                    .into_iter()
                    .filter(|(_, s)| *s < th)
                    .map(|(ts, s)| vec![int(ts), num(s)]),
            );
        }
        other => return Err(BenchError::UnknownQuestion(other.to_owned())),
    }
    Ok(rows)
}

//! Dataset to RDF mapping under the three schema modes.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use thiserror::Error;

use crate::ingest::{Dataset, Job, JobMetric, Reading, Sensor};
use crate::ontology::legacy;
use crate::rdf::{lexical, RdfError, Term, Triple, TripleStore};
use crate::vocab::{self, xsd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchemaMode {
    /// The pre-unification layout: typed readings with their own timestamp,
    /// unit and DataRecord link.
    LegacyOda,
    /// Unified schema, one IRI per reading.
    UnifiedUri,
    /// Unified schema, readings as blank nodes.
    UnifiedBnode,
}

impl SchemaMode {
    pub const ALL: [SchemaMode; 3] = [
        SchemaMode::LegacyOda,
        SchemaMode::UnifiedUri,
        SchemaMode::UnifiedBnode,
    ];

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "legacy" => Some(SchemaMode::LegacyOda),
            "unified" => Some(SchemaMode::UnifiedUri),
            "unified-bnode" => Some(SchemaMode::UnifiedBnode),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            SchemaMode::LegacyOda => "legacy",
            SchemaMode::UnifiedUri => "unified",
            SchemaMode::UnifiedBnode => "unified-bnode",
        }
    }

    /// Triples emitted per reading (before any Time-node sharing).
    pub fn triples_per_reading(self) -> u64 {
        match self {
            SchemaMode::LegacyOda => 6,
            _ => 4,
        }
    }
}

impl fmt::Display for SchemaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemaMode::LegacyOda => "Legacy ODA",
            SchemaMode::UnifiedUri => "Unified (URI readings)",
            SchemaMode::UnifiedBnode => "Unified (blank-node readings)",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimestampEncoding {
    /// `"<seconds>"^^xsd:integer`.
    UnixSeconds,
    /// `"YYYY-MM-DDTHH:MM:SS+00:00"^^xsd:dateTime`.
    Iso8601,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub mode: SchemaMode,
    /// Share one `time/<ts>` node per distinct timestamp instead of a blank
    /// Time node per reading and per job boundary.
    pub dedup_time_nodes: bool,
    pub timestamp_encoding: TimestampEncoding,
}

impl BuildOptions {
    pub fn new(mode: SchemaMode) -> Self {
        Self {
            mode,
            dedup_time_nodes: false,
            timestamp_encoding: match mode {
                SchemaMode::LegacyOda => TimestampEncoding::Iso8601,
                _ => TimestampEncoding::UnixSeconds,
            },
        }
    }

    pub fn with_dedup(mut self, dedup: bool) -> Self {
        self.dedup_time_nodes = dedup;
        self
    }

    /// The encoding actually used: legacy always writes ISO 8601.
    pub fn encoding(&self) -> TimestampEncoding {
        match self.mode {
            SchemaMode::LegacyOda => TimestampEncoding::Iso8601,
            _ => self.timestamp_encoding,
        }
    }
}

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("reading refers to unknown sensor {sensor:?} on node {node}")]
    UnknownSensor { node: i64, sensor: String },
    #[error("job {job} refers to unknown user {user}")]
    UnknownUser { job: i64, user: i64 },
    #[error("job {job} ends at {end}, before its start {start}")]
    JobEndsBeforeStart { job: i64, start: i64, end: i64 },
    #[error("timestamp {0} cannot be written as a calendar date")]
    Timestamp(i64),
    #[error(transparent)]
    Rdf(#[from] RdfError),
}

/// Characters kept verbatim in names embedded in IRIs.
const NAME_ESCAPE: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'_')
    .remove(b'.')
    .remove(b'~');

/// IRI templates for individuals.
#[derive(Debug, Clone)]
pub struct UriPolicy {
    pub base: String,
}

impl Default for UriPolicy {
    fn default() -> Self {
        Self {
            base: vocab::HPC.to_owned(),
        }
    }
}

fn enc(name: &str) -> impl fmt::Display + '_ {
    utf8_percent_encode(name, NAME_ESCAPE)
}

impl UriPolicy {
    pub fn term(&self, local: &str) -> String {
        format!("{}{local}", self.base)
    }
    pub fn datacenter(&self, id: i64) -> String {
        format!("{}datacenter/{id}", self.base)
    }
    pub fn system(&self, id: i64) -> String {
        format!("{}system/{id}", self.base)
    }
    pub fn rack(&self, id: i64) -> String {
        format!("{}rack/{id}", self.base)
    }
    pub fn node(&self, id: i64) -> String {
        format!("{}node/{id}", self.base)
    }
    pub fn position(&self, node: i64) -> String {
        format!("{}position/{node}", self.base)
    }
    pub fn plugin(&self, node: i64, name: &str) -> String {
        format!("{}plugin/{node}/{}", self.base, enc(name))
    }
    pub fn sensor(&self, node: i64, name: &str) -> String {
        format!("{}sensor/{node}/{}", self.base, enc(name))
    }
    pub fn user(&self, id: i64) -> String {
        format!("{}user/{id}", self.base)
    }
    pub fn job(&self, id: i64) -> String {
        format!("{}job/{id}", self.base)
    }
    pub fn job_metric(&self, job: i64, name: &str) -> String {
        format!("{}jobmetric/{job}/{}", self.base, enc(name))
    }
    pub fn time(&self, ts: i64) -> String {
        format!("{}time/{ts}", self.base)
    }
    pub fn reading(&self, node: i64, sensor: &str, ts: i64) -> String {
        format!("{}reading/{node}/{}/{ts}", self.base, enc(sensor))
    }
    /// Legacy DataRecord grouping a plugin's readings of one UTC day.
    pub fn data_record(&self, plugin: &str, day: &str) -> String {
        format!("{}datarecord/{}/{day}", self.base, enc(plugin))
    }
}

/// Per-sensor facts needed to emit readings, keyed by (node, sensor name).
#[derive(Debug, Clone)]
pub struct SensorIndex<'a> {
    by_key: HashMap<(i64, &'a str), (usize, &'a Sensor)>,
}

impl<'a> SensorIndex<'a> {
    pub fn new(ds: &'a Dataset) -> Self {
        let mut per_node: HashMap<i64, usize> = HashMap::new();
        let mut by_key = HashMap::with_capacity(ds.sensors.len());
        for s in &ds.sensors {
            let idx = per_node.entry(s.node_id).or_insert(0);
            by_key.insert((s.node_id, s.name.as_str()), (*idx, s));
            *idx += 1;
        }
        Self { by_key }
    }

    /// Position of the sensor among its node's sensors, and the sensor.
    pub fn get(&self, node: i64, name: &str) -> Option<(usize, &'a Sensor)> {
        self.by_key.get(&(node, name)).copied()
    }
}

/// UTC calendar day of a Unix timestamp, as `YYYY-MM-DD`.
pub fn utc_day(ts: i64) -> Option<String> {
    lexical::format_iso8601(ts).map(|s| s[..10].to_owned())
}

struct Emitter<'o> {
    opts: &'o BuildOptions,
    uri: UriPolicy,
    out: Vec<Triple>,
}

fn iri(s: String) -> Term {
    Term::Iri(s)
}

fn rdf_type() -> Term {
    Term::Iri(vocab::RDF_TYPE.to_owned())
}

impl<'o> Emitter<'o> {
    fn new(opts: &'o BuildOptions) -> Self {
        Self {
            opts,
            uri: UriPolicy::default(),
            out: Vec::new(),
        }
    }

    fn push(&mut self, s: &Term, p: &str, o: Term) {
        self.out.push(Triple {
            subject: s.clone(),
            predicate: iri(self.uri.term(p)),
            object: o,
        });
    }

    fn typed(&mut self, s: &Term, class: &str) {
        self.out.push(Triple {
            subject: s.clone(),
            predicate: rdf_type(),
            object: iri(self.uri.term(class)),
        });
    }

    fn timestamp(&self, ts: i64) -> Result<Term, BuildError> {
        Ok(match self.opts.encoding() {
            TimestampEncoding::UnixSeconds => Term::integer(ts),
            TimestampEncoding::Iso8601 => Term::Literal {
                lexical: lexical::format_iso8601(ts).ok_or(BuildError::Timestamp(ts))?,
                datatype: xsd::DATE_TIME.to_owned(),
            },
        })
    }

    /// Time node for `ts`; `label` names the blank node used without dedup.
    fn time_node(&mut self, ts: i64, label: String) -> Result<Term, BuildError> {
        let node = if self.opts.dedup_time_nodes {
            iri(self.uri.time(ts))
        } else {
            Term::BlankNode(label)
        };
        let lit = self.timestamp(ts)?;
        self.push(&node, "timestamp", lit);
        Ok(node)
    }

    fn reading(&mut self, index: &SensorIndex, r: &Reading) -> Result<(), BuildError> {
        let (sensor_idx, sensor) =
            index
                .get(r.node_id, &r.sensor_name)
                .ok_or_else(|| BuildError::UnknownSensor {
                    node: r.node_id,
                    sensor: r.sensor_name.clone(),
                })?;
        let sensor_term = iri(self.uri.sensor(r.node_id, &sensor.name));
        let reading = match self.opts.mode {
            SchemaMode::UnifiedBnode => {
                Term::BlankNode(format!("r{}_{}_{}", r.node_id, sensor_idx, r.ts))
            }
            _ => iri(self.uri.reading(r.node_id, &sensor.name, r.ts)),
        };
        match self.opts.mode {
            SchemaMode::LegacyOda => {
                self.typed(&reading, "SensorReading");
                self.push(&reading, "value", Term::double(r.value));
                let ts = self.timestamp(r.ts)?;
                self.push(&reading, legacy::READING_TIMESTAMP, ts);
                self.push(
                    &reading,
                    legacy::READING_UNIT,
                    Term::string(sensor.unit.as_str()),
                );
                self.push(&sensor_term, "hasReading", reading.clone());
                let day = utc_day(r.ts).ok_or(BuildError::Timestamp(r.ts))?;
                let record = iri(self.uri.data_record(&sensor.plugin_name, &day));
                self.push(&reading, legacy::PART_OF_RECORD, record);
            }
            SchemaMode::UnifiedUri | SchemaMode::UnifiedBnode => {
                self.push(&sensor_term, "hasReading", reading.clone());
                self.push(&reading, "value", Term::double(r.value));
                let time =
                    self.time_node(r.ts, format!("t{}_{}_{}", r.node_id, sensor_idx, r.ts))?;
                self.push(&reading, "hasTimestamp", time);
            }
        }
        Ok(())
    }

    fn job<'m>(
        &mut self,
        job: &Job,
        metrics: impl IntoIterator<Item = &'m JobMetric>,
    ) -> Result<(), BuildError> {
        if job.end < job.start {
            return Err(BuildError::JobEndsBeforeStart {
                job: job.id,
                start: job.start,
                end: job.end,
            });
        }
        let j = iri(self.uri.job(job.id));
        self.typed(&j, "Job");
        self.push(&j, "jobId", Term::integer(job.id));
        self.push(&j, "jobName", Term::string(job.name.as_str()));
        self.push(&j, "groupId", Term::integer(job.group_id));
        self.push(&j, "exitCode", Term::integer(job.exit_code));
        self.push(
            &j,
            "jobDuration",
            Term::Literal {
                lexical: format!("PT{}S", job.end - job.start),
                datatype: xsd::DURATION.to_owned(),
            },
        );
        self.push(&j, "isJobOf", iri(self.uri.user(job.user_id)));
        for n in &job.node_ids {
            self.push(&j, "usesComputeNode", iri(self.uri.node(*n)));
        }
        let start = self.time_node(job.start, format!("j{}_start", job.id))?;
        self.push(&j, "hasJobStartTime", start);
        let end = self.time_node(job.end, format!("j{}_end", job.id))?;
        self.push(&j, "hasJobEndTime", end);
        for m in metrics {
            let mt = iri(self.uri.job_metric(job.id, &m.name));
            self.push(&j, "hasJobMetric", mt.clone());
            self.typed(&mt, "JobMetric");
            self.push(&mt, "metricName", Term::string(m.name.as_str()));
            self.push(&mt, "metricValue", Term::float(m.value));
        }
        Ok(())
    }

    fn static_part(&mut self, ds: &Dataset) {
        let u = UriPolicy::default();
        for dc in &ds.data_centers {
            let s = iri(u.datacenter(dc.id));
            self.typed(&s, "DataCenter");
            self.push(&s, "dcId", Term::integer(dc.id));
            self.push(&s, "dcName", Term::string(dc.name.as_str()));
            self.push(&s, "location", Term::string(dc.location.as_str()));
            for sys in ds.systems.iter().filter(|x| x.dc_id == dc.id) {
                self.push(&s, "hasHPCSystem", iri(u.system(sys.id)));
            }
        }
        for sys in &ds.systems {
            let s = iri(u.system(sys.id));
            self.typed(&s, "HPCSystem");
            self.push(&s, "systemId", Term::integer(sys.id));
            self.push(&s, "systemName", Term::string(sys.name.as_str()));
            for user in ds.users.iter().filter(|x| x.system_id == sys.id) {
                self.push(&s, "hasUser", iri(u.user(user.id)));
            }
            for rack in ds.racks.iter().filter(|x| x.system_id == sys.id) {
                self.push(&s, "hasRack", iri(u.rack(rack.id)));
            }
        }
        for rack in &ds.racks {
            let s = iri(u.rack(rack.id));
            self.typed(&s, "Rack");
            self.push(&s, "rackId", Term::integer(rack.id));
            for node in ds.nodes.iter().filter(|x| x.rack_id == rack.id) {
                self.push(&s, "hasComputeNode", iri(u.node(node.id)));
            }
        }
        let mut plugins_of: HashMap<i64, Vec<&str>> = HashMap::new();
        for p in &ds.plugins {
            plugins_of.entry(p.node_id).or_default().push(&p.name);
        }
        let mut sensors_of: HashMap<i64, Vec<&Sensor>> = HashMap::new();
        for s in &ds.sensors {
            sensors_of.entry(s.node_id).or_default().push(s);
        }
        for node in &ds.nodes {
            let s = iri(u.node(node.id));
            self.typed(&s, "ComputeNode");
            self.push(&s, "computeNodeId", Term::integer(node.id));
            let pos = iri(u.position(node.id));
            self.push(&s, "hasPosition", pos.clone());
            self.typed(&pos, "Position");
            self.push(&pos, "posX", Term::integer(node.pos_x));
            self.push(&pos, "posY", Term::integer(node.pos_y));
            self.push(&pos, "posZ", Term::integer(node.pos_z));
            let sensors = sensors_of
                .get(&node.id)
                .map(Vec::as_slice)
                .unwrap_or_default();
            for name in plugins_of
                .get(&node.id)
                .map(Vec::as_slice)
                .unwrap_or_default()
            {
                let p = iri(u.plugin(node.id, name));
                self.push(&s, "hasPlugin", p.clone());
                self.typed(&p, "Plugin");
                self.push(&p, "pluginName", Term::string(*name));
                for sensor in sensors.iter().filter(|x| x.plugin_name == *name) {
                    self.push(&p, "includesSensor", iri(u.sensor(node.id, &sensor.name)));
                }
            }
            for sensor in sensors {
                let st = iri(u.sensor(node.id, &sensor.name));
                self.push(&s, "hasSensor", st.clone());
                self.typed(&st, "Sensor");
                self.push(&st, "sensorName", Term::string(sensor.name.as_str()));
                self.push(&st, "sensorType", Term::string(sensor.sensor_type.as_str()));
                self.push(&st, "sensorUnit", Term::string(sensor.unit.as_str()));
            }
        }
        for user in &ds.users {
            let s = iri(u.user(user.id));
            self.typed(&s, "User");
            self.push(&s, "userId", Term::integer(user.id));
            self.push(&s, "userName", Term::string(user.name.as_str()));
        }
    }

    fn take(&mut self) -> Vec<Triple> {
        std::mem::take(&mut self.out)
    }
}

/// Triples describing one reading: six in legacy mode, four in the unified
/// modes.
pub fn emit_reading(
    index: &SensorIndex,
    reading: &Reading,
    opts: &BuildOptions,
) -> Result<Vec<Triple>, BuildError> {
    let mut e = Emitter::new(opts);
    e.reading(index, reading)?;
    Ok(e.take())
}

/// Topology, plugins, sensors and users, with forward links only.
pub fn emit_static(ds: &Dataset, opts: &BuildOptions) -> Vec<Triple> {
    let mut e = Emitter::new(opts);
    e.static_part(ds);
    e.take()
}

/// A job, its time nodes, node allocations and metrics.
pub fn emit_job<'m>(
    job: &Job,
    metrics: impl IntoIterator<Item = &'m JobMetric>,
    opts: &BuildOptions,
) -> Result<Vec<Triple>, BuildError> {
    let mut e = Emitter::new(opts);
    e.job(job, metrics)?;
    Ok(e.take())
}

/// Type triples for the legacy DataRecords referenced by `ds`'s readings,
/// one per (plugin, UTC day).
pub fn emit_data_records(ds: &Dataset) -> Result<Vec<Triple>, BuildError> {
    let index = SensorIndex::new(ds);
    let mut records = BTreeSet::new();
    for r in &ds.readings {
        let (_, sensor) =
            index
                .get(r.node_id, &r.sensor_name)
                .ok_or_else(|| BuildError::UnknownSensor {
                    node: r.node_id,
                    sensor: r.sensor_name.clone(),
                })?;
        let day = utc_day(r.ts).ok_or(BuildError::Timestamp(r.ts))?;
        records.insert((sensor.plugin_name.as_str(), day));
    }
    let u = UriPolicy::default();
    Ok(records
        .into_iter()
        .map(|(plugin, day)| Triple {
            subject: iri(u.data_record(plugin, &day)),
            predicate: rdf_type(),
            object: iri(u.term(legacy::DATA_RECORD)),
        })
        .collect())
}

/// Builds the full graph for `ds`: static part, jobs, readings, and in legacy
/// mode the DataRecord declarations.
pub fn build_graph(ds: &Dataset, opts: &BuildOptions) -> Result<TripleStore, BuildError> {
    let mut store = TripleStore::new();
    let mut e = Emitter::new(opts);
    e.static_part(ds);
    for t in e.take() {
        store.insert(t)?;
    }
    let mut metrics: HashMap<i64, Vec<&JobMetric>> = HashMap::new();
    for m in &ds.job_metrics {
        metrics.entry(m.job_id).or_default().push(m);
    }
    for job in &ds.jobs {
        if ds.user(job.user_id).is_none() {
            return Err(BuildError::UnknownUser {
                job: job.id,
                user: job.user_id,
            });
        }
        e.job(job, metrics.get(&job.id).into_iter().flatten().copied())?;
        for t in e.take() {
            store.insert(t)?;
        }
    }
    if opts.mode == SchemaMode::LegacyOda {
        for t in emit_data_records(ds)? {
            store.insert(t)?;
        }
    }
    let index = SensorIndex::new(ds);
    for r in &ds.readings {
        e.reading(&index, r)?;
        for t in e.out.drain(..) {
            store.insert(t)?;
        }
    }
    Ok(store)
}

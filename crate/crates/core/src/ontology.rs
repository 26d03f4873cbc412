//! The unified ODA ontology schema, its document form, and instance validation.
//!
//! The schema is plain data: twelve classes, twenty-three object properties
//! (eight of which are declared inverses of another) and twenty-five data
//! properties. Axiom counts are always recomputed from that data, never stored.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::io::{self, RdfFormat};
use crate::rdf::{RdfError, Term, TermId, Triple, TripleStore};
use crate::vocab::{self, xsd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum XsdType {
    Integer,
    String,
    Float,
    Double,
    DateTime,
    Duration,
}

impl XsdType {
    pub fn iri(self) -> &'static str {
        match self {
            XsdType::Integer => xsd::INTEGER,
            XsdType::String => xsd::STRING,
            XsdType::Float => xsd::FLOAT,
            XsdType::Double => xsd::DOUBLE,
            XsdType::DateTime => xsd::DATE_TIME,
            XsdType::Duration => xsd::DURATION,
        }
    }

    /// Whether a literal of `datatype` satisfies this range. Timestamps are
    /// accepted either as xsd:dateTime or as Unix seconds (xsd:integer).
    pub fn accepts(self, datatype: &str) -> bool {
        datatype == self.iri() || (self == XsdType::DateTime && datatype == xsd::INTEGER)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectPropertyDef {
    pub name: String,
    pub domain: String,
    pub range: String,
    pub inverse_of: Option<String>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataPropertyDef {
    pub name: String,
    pub domain: String,
    pub range: XsdType,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OntologySchema {
    pub classes: Vec<ClassDef>,
    pub object_properties: Vec<ObjectPropertyDef>,
    pub data_properties: Vec<DataPropertyDef>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AxiomCounts {
    pub classes: usize,
    pub object_properties: usize,
    pub data_properties: usize,
    pub declarations: usize,
    pub object_domain_range: usize,
    pub data_domain_range: usize,
    pub inverses: usize,
    pub logical: usize,
    pub total: usize,
}

impl fmt::Display for AxiomCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "classes: {}, object properties: {}, data properties: {}",
            self.classes, self.object_properties, self.data_properties
        )?;
        writeln!(f, "declarations: {}", self.declarations)?;
        writeln!(
            f,
            "logical axioms: {} (object domain/range {}, data domain/range {}, inverse-of {})",
            self.logical, self.object_domain_range, self.data_domain_range, self.inverses
        )?;
        write!(f, "total axioms: {}", self.total)
    }
}

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("unresolved reference {reference:?} in {owner}")]
    UnresolvedReference { owner: String, reference: String },
    #[error("duplicate entity name {0:?}")]
    DuplicateName(String),
    #[error("unsupported ontology format {0:?}")]
    UnsupportedFormat(String),
    #[error(transparent)]
    Rdf(#[from] RdfError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn class(name: &str, description: &str) -> ClassDef {
    ClassDef {
        name: name.into(),
        description: description.into(),
    }
}

fn object(
    name: &str,
    domain: &str,
    range: &str,
    inverse_of: Option<&str>,
    description: &str,
) -> ObjectPropertyDef {
    ObjectPropertyDef {
        name: name.into(),
        domain: domain.into(),
        range: range.into(),
        inverse_of: inverse_of.map(Into::into),
        description: description.into(),
    }
}

fn data(name: &str, domain: &str, range: XsdType, description: &str) -> DataPropertyDef {
    DataPropertyDef {
        name: name.into(),
        domain: domain.into(),
        range,
        description: description.into(),
    }
}

/// The twelve-class unified schema.
pub fn builtin_schema() -> OntologySchema {
    use XsdType::*;
    let classes = vec![
        class(
            "DataCenter",
            "A facility that hosts one or more HPC systems.",
        ),
        class(
            "HPCSystem",
            "A complete HPC machine made of racks, nodes and supporting hardware.",
        ),
        class("User", "A person who submits jobs to an HPC system."),
        class(
            "Job",
            "A unit of computational work submitted to an HPC system.",
        ),
        class(
            "JobMetric",
            "A per-job performance figure or requested resource.",
        ),
        class("Rack", "A rack enclosure holding compute nodes."),
        class("ComputeNode", "A single compute node."),
        class("Position", "Three-dimensional placement of a compute node."),
        class(
            "Plugin",
            "A monitoring software component that exposes sensors.",
        ),
        class(
            "Sensor",
            "A physical or virtual source of monitoring samples.",
        ),
        class(
            "SensorReading",
            "One sample emitted by a sensor at a given time.",
        ),
        class("Time", "A point in time referenced by readings and jobs."),
    ];
    let object_properties = vec![
        object(
            "hasHPCSystem",
            "DataCenter",
            "HPCSystem",
            None,
            "Data center to the systems it hosts.",
        ),
        object(
            "isHPCSystemOf",
            "HPCSystem",
            "DataCenter",
            Some("hasHPCSystem"),
            "System to its data center.",
        ),
        object("hasUser", "HPCSystem", "User", None, "System to its users."),
        object(
            "isUserOf",
            "User",
            "HPCSystem",
            Some("hasUser"),
            "User to the system they use.",
        ),
        object("hasRack", "HPCSystem", "Rack", None, "System to its racks."),
        object(
            "isRackOf",
            "Rack",
            "HPCSystem",
            Some("hasRack"),
            "Rack to its system.",
        ),
        object(
            "hasComputeNode",
            "Rack",
            "ComputeNode",
            None,
            "Rack to the nodes it holds.",
        ),
        object(
            "isComputeNodeOf",
            "ComputeNode",
            "Rack",
            Some("hasComputeNode"),
            "Node to its rack.",
        ),
        object(
            "hasPosition",
            "ComputeNode",
            "Position",
            None,
            "Node to its physical position.",
        ),
        object(
            "isPositionOf",
            "Position",
            "ComputeNode",
            Some("hasPosition"),
            "Position to its node.",
        ),
        object(
            "isJobOf",
            "Job",
            "User",
            None,
            "Job to the user who submitted it.",
        ),
        object(
            "submitsJob",
            "User",
            "Job",
            Some("isJobOf"),
            "User to the jobs they submitted.",
        ),
        object(
            "usesComputeNode",
            "Job",
            "ComputeNode",
            None,
            "Job to each node allocated to it.",
        ),
        object(
            "hasJobStartTime",
            "Job",
            "Time",
            None,
            "Job to its start time.",
        ),
        object("hasJobEndTime", "Job", "Time", None, "Job to its end time."),
        object(
            "hasJobMetric",
            "Job",
            "JobMetric",
            None,
            "Job to its metrics and requested resources.",
        ),
        object(
            "hasPlugin",
            "ComputeNode",
            "Plugin",
            None,
            "Node to the monitoring plugins it runs.",
        ),
        object(
            "hasReading",
            "Sensor",
            "SensorReading",
            None,
            "Sensor to its readings.",
        ),
        object(
            "hasSensor",
            "ComputeNode",
            "Sensor",
            None,
            "Node to the sensors installed on it.",
        ),
        object(
            "isSensorOf",
            "Sensor",
            "ComputeNode",
            Some("hasSensor"),
            "Sensor to its node.",
        ),
        object(
            "hasTimestamp",
            "SensorReading",
            "Time",
            None,
            "Reading to the time it was taken.",
        ),
        object(
            "includesSensor",
            "Plugin",
            "Sensor",
            None,
            "Plugin to the sensors it exposes.",
        ),
        object(
            "isPartOfPlugin",
            "Sensor",
            "Plugin",
            Some("includesSensor"),
            "Sensor to its plugin.",
        ),
    ];
    let data_properties = vec![
        data("dcId", "DataCenter", Integer, "Data center identifier."),
        data("dcName", "DataCenter", String, "Data center name."),
        data(
            "location",
            "DataCenter",
            String,
            "Where the data center is.",
        ),
        data("systemId", "HPCSystem", Integer, "System identifier."),
        data("systemName", "HPCSystem", String, "System name."),
        data("userId", "User", Integer, "User identifier."),
        data("userName", "User", String, "User name."),
        data("rackId", "Rack", Integer, "Rack identifier."),
        data(
            "computeNodeId",
            "ComputeNode",
            Integer,
            "Compute node identifier.",
        ),
        data("posX", "Position", Integer, "X coordinate of a node."),
        data("posY", "Position", Integer, "Y coordinate of a node."),
        data("posZ", "Position", Integer, "Z coordinate of a node."),
        data("pluginName", "Plugin", String, "Plugin name."),
        data("jobId", "Job", Integer, "Job identifier."),
        data("jobName", "Job", String, "Job name."),
        data("groupId", "Job", Integer, "Group of the submitting user."),
        data("exitCode", "Job", Integer, "Exit status of the job."),
        data(
            "jobDuration",
            "Job",
            Duration,
            "Elapsed job time as an xsd:duration.",
        ),
        data("metricName", "JobMetric", String, "Name of a job metric."),
        data("metricValue", "JobMetric", Float, "Value of a job metric."),
        data("sensorName", "Sensor", String, "Sensor name."),
        data(
            "sensorType",
            "Sensor",
            String,
            "Sensor category such as power or temperature.",
        ),
        data(
            "sensorUnit",
            "Sensor",
            String,
            "Unit of the sensor's samples.",
        ),
        data(
            "timestamp",
            "Time",
            DateTime,
            "Instant carried by a Time node.",
        ),
        data(
            "value",
            "SensorReading",
            Double,
            "Sampled value of a reading.",
        ),
    ];
    OntologySchema {
        classes,
        object_properties,
        data_properties,
    }
}

/// Local names used only by the legacy (pre-unification) reading template.
pub mod legacy {
    pub const DATA_RECORD: &str = "DataRecord";
    pub const PART_OF_RECORD: &str = "partOfRecord";
    pub const READING_TIMESTAMP: &str = "readingTimestamp";
    pub const READING_UNIT: &str = "readingUnit";
}

impl OntologySchema {
    /// The schema plus the legacy fragment: the DataRecord class, the
    /// reading-to-record link, and the per-reading timestamp and unit
    /// properties that the unified schema removed.
    pub fn with_legacy_extension(mut self) -> Self {
        self.classes.push(class(
            legacy::DATA_RECORD,
            "Source record grouping raw readings (legacy).",
        ));
        self.object_properties.push(object(
            legacy::PART_OF_RECORD,
            "SensorReading",
            legacy::DATA_RECORD,
            None,
            "Reading to the record it came from (legacy).",
        ));
        self.data_properties.push(data(
            legacy::READING_TIMESTAMP,
            "SensorReading",
            XsdType::DateTime,
            "Timestamp stored directly on a reading (legacy).",
        ));
        self.data_properties.push(data(
            legacy::READING_UNIT,
            "SensorReading",
            XsdType::String,
            "Unit stored on every reading (legacy).",
        ));
        self
    }

    pub fn class(&self, name: &str) -> Option<&ClassDef> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn object_property(&self, name: &str) -> Option<&ObjectPropertyDef> {
        self.object_properties.iter().find(|p| p.name == name)
    }

    pub fn data_property(&self, name: &str) -> Option<&DataPropertyDef> {
        self.data_properties.iter().find(|p| p.name == name)
    }

    /// Checks that names are unique and every domain, range and inverse resolves.
    pub fn check(&self) -> Result<(), OntologyError> {
        let mut names = HashSet::new();
        let all_names = self
            .classes
            .iter()
            .map(|c| &c.name)
            .chain(self.object_properties.iter().map(|p| &p.name))
            .chain(self.data_properties.iter().map(|p| &p.name));
        for name in all_names {
            if !names.insert(name.as_str()) {
                return Err(OntologyError::DuplicateName(name.clone()));
            }
        }
        let unresolved = |owner: &str, reference: &str| OntologyError::UnresolvedReference {
            owner: owner.to_owned(),
            reference: reference.to_owned(),
        };
        for p in &self.object_properties {
            for class_ref in [&p.domain, &p.range] {
                if self.class(class_ref).is_none() {
                    return Err(unresolved(&p.name, class_ref));
                }
            }
            if let Some(inv) = &p.inverse_of {
                if self.object_property(inv).is_none() {
                    return Err(unresolved(&p.name, inv));
                }
            }
        }
        for p in &self.data_properties {
            if self.class(&p.domain).is_none() {
                return Err(unresolved(&p.name, &p.domain));
            }
        }
        Ok(())
    }

    pub fn axiom_counts(&self) -> AxiomCounts {
        let classes = self.classes.len();
        let object_properties = self.object_properties.len();
        let data_properties = self.data_properties.len();
        let inverses = self
            .object_properties
            .iter()
            .filter(|p| p.inverse_of.is_some())
            .count();
        let declarations = classes + object_properties + data_properties;
        let object_domain_range = 2 * object_properties;
        let data_domain_range = 2 * data_properties;
        let logical = object_domain_range + data_domain_range + inverses;
        AxiomCounts {
            classes,
            object_properties,
            data_properties,
            declarations,
            object_domain_range,
            data_domain_range,
            inverses,
            logical,
            total: declarations + logical,
        }
    }

    /// The ontology as a graph. Subjects are interned in document order:
    /// ontology header, classes, object properties, data properties, each
    /// group sorted by name. Descriptions become `rdfs:comment` annotations,
    /// which are not counted as axioms.
    pub fn to_store(&self) -> Result<TripleStore, OntologyError> {
        let iri = |s: &str| Term::iri(s);
        let hpc = |s: &str| Term::iri(vocab::hpc(s));

        let mut classes: Vec<_> = self.classes.iter().collect();
        classes.sort_by(|a, b| a.name.cmp(&b.name));
        let mut objects: Vec<_> = self.object_properties.iter().collect();
        objects.sort_by(|a, b| a.name.cmp(&b.name));
        let mut datas: Vec<_> = self.data_properties.iter().collect();
        datas.sort_by(|a, b| a.name.cmp(&b.name));

        let mut store = TripleStore::new();
        let ontology = iri(vocab::HPC)?;
        store.intern(ontology.clone())?;
        for name in classes
            .iter()
            .map(|c| &c.name)
            .chain(objects.iter().map(|p| &p.name))
            .chain(datas.iter().map(|p| &p.name))
        {
            store.intern(hpc(name)?)?;
        }

        let rdf_type = iri(vocab::RDF_TYPE)?;
        let domain = iri(vocab::RDFS_DOMAIN)?;
        let range = iri(vocab::RDFS_RANGE)?;
        let comment = iri(vocab::RDFS_COMMENT)?;
        let mut add =
            |s: Term, p: &Term, o: Term| store.insert(Triple::new(s, p.clone(), o)?).map(|_| ());

        add(ontology, &rdf_type, iri(vocab::OWL_ONTOLOGY)?)?;
        for c in classes {
            add(hpc(&c.name)?, &rdf_type, iri(vocab::OWL_CLASS)?)?;
            add(hpc(&c.name)?, &comment, Term::string(&c.description))?;
        }
        let inverse_of = iri(vocab::OWL_INVERSE_OF)?;
        for p in objects {
            let s = hpc(&p.name)?;
            add(s.clone(), &rdf_type, iri(vocab::OWL_OBJECT_PROPERTY)?)?;
            add(s.clone(), &domain, hpc(&p.domain)?)?;
            add(s.clone(), &range, hpc(&p.range)?)?;
            if let Some(inv) = &p.inverse_of {
                add(s.clone(), &inverse_of, hpc(inv)?)?;
            }
            add(s, &comment, Term::string(&p.description))?;
        }
        for p in datas {
            let s = hpc(&p.name)?;
            add(s.clone(), &rdf_type, iri(vocab::OWL_DATATYPE_PROPERTY)?)?;
            add(s.clone(), &domain, hpc(&p.domain)?)?;
            add(s.clone(), &range, iri(p.range.iri())?)?;
            add(s, &comment, Term::string(&p.description))?;
        }
        Ok(store)
    }
}

/// Serializes the schema as an ontology document.
pub fn emit_ontology(schema: &OntologySchema, format: RdfFormat) -> Result<Vec<u8>, OntologyError> {
    schema.check()?;
    let store = schema.to_store()?;
    let mut out = Vec::new();
    io::write_graph(&store, &mut out, format)?;
    Ok(out)
}

/// Parses a format tag (`ttl`, `turtle`, `nt`, `ntriples`).
pub fn parse_format(tag: &str) -> Result<RdfFormat, OntologyError> {
    RdfFormat::from_tag(tag).ok_or_else(|| OntologyError::UnsupportedFormat(tag.to_owned()))
}

/// Recounts declarations and logical axioms in an ontology graph.
pub fn count_axioms(store: &TripleStore) -> AxiomCounts {
    let find = |iri: &str| store.lookup(&Term::Iri(iri.to_owned()));
    let count_typed = |class_iri: &str| -> HashSet<TermId> {
        match (find(vocab::RDF_TYPE), find(class_iri)) {
            (Some(t), Some(c)) => store
                .match_ids(None, Some(t), Some(c))
                .map(|[s, _, _]| s)
                .collect(),
            _ => HashSet::new(),
        }
    };
    let classes = count_typed(vocab::OWL_CLASS);
    let objects = count_typed(vocab::OWL_OBJECT_PROPERTY);
    let datas = count_typed(vocab::OWL_DATATYPE_PROPERTY);

    let mut object_domain_range = 0;
    let mut data_domain_range = 0;
    for pred in [vocab::RDFS_DOMAIN, vocab::RDFS_RANGE] {
        if let Some(p) = find(pred) {
            for [s, _, _] in store.match_ids(None, Some(p), None) {
                if objects.contains(&s) {
                    object_domain_range += 1;
                } else if datas.contains(&s) {
                    data_domain_range += 1;
                }
            }
        }
    }
    let inverses = find(vocab::OWL_INVERSE_OF)
        .map(|p| store.match_ids(None, Some(p), None).count())
        .unwrap_or(0);
    let declarations = classes.len() + objects.len() + datas.len();
    let logical = object_domain_range + data_domain_range + inverses;
    AxiomCounts {
        classes: classes.len(),
        object_properties: objects.len(),
        data_properties: datas.len(),
        declarations,
        object_domain_range,
        data_domain_range,
        inverses,
        logical,
        total: declarations + logical,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    DomainViolation,
    RangeViolation,
    DatatypeViolation,
    UnknownProperty,
    UnknownClass,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub triple: Triple,
    pub expected: String,
    pub found: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?}: {} (expected {}, found {})",
            self.kind, self.triple, self.expected, self.found
        )
    }
}

enum PropertyRule<'a> {
    Object(&'a ObjectPropertyDef),
    Data(&'a DataPropertyDef),
}

/// Checks every triple with an `hpc:` predicate against the declared domain and
/// range. A node is typed by its `rdf:type` statements; a node with none takes
/// the ranges of the object properties that point at it.
pub fn validate_graph(schema: &OntologySchema, store: &TripleStore) -> Vec<Violation> {
    let local = |t: &Term| {
        t.as_iri()
            .and_then(|i| i.strip_prefix(vocab::HPC))
            .map(str::to_owned)
    };

    let mut rules: HashMap<&str, PropertyRule> = HashMap::new();
    for p in &schema.object_properties {
        rules.insert(&p.name, PropertyRule::Object(p));
    }
    for p in &schema.data_properties {
        rules.insert(&p.name, PropertyRule::Data(p));
    }

    let rdf_type = store.lookup(&Term::Iri(vocab::RDF_TYPE.to_owned()));
    let mut types: HashMap<TermId, Vec<String>> = HashMap::new();
    let mut violations = Vec::new();
    if let Some(t) = rdf_type {
        for ids @ [s, _, o] in store.match_ids(None, Some(t), None) {
            let Some(class_name) = local(store.resolve(o)) else {
                continue;
            };
            if schema.class(&class_name).is_none() {
                violations.push(Violation {
                    kind: ViolationKind::UnknownClass,
                    triple: store.decode(ids),
                    expected: "declared class".into(),
                    found: class_name.clone(),
                });
            }
            types.entry(s).or_default().push(class_name);
        }
    }
    // Nodes without any rdf:type (reading and Time nodes in the unified
    // templates) take the range of the hpc object properties pointing at them.
    let mut inferred: HashMap<TermId, Vec<String>> = HashMap::new();
    for [_, p, o] in store.iter_ids() {
        if types.contains_key(&o) || store.resolve(o).is_literal() {
            continue;
        }
        let Some(name) = local(store.resolve(p)) else {
            continue;
        };
        if let Some(PropertyRule::Object(def)) = rules.get(name.as_str()) {
            let entry = inferred.entry(o).or_default();
            if !entry.contains(&def.range) {
                entry.push(def.range.clone());
            }
        }
    }
    types.extend(inferred);
    let describe = |id: TermId| -> String {
        match types.get(&id) {
            Some(ts) => {
                let mut ts = ts.clone();
                ts.sort();
                ts.join("|")
            }
            None => "untyped".into(),
        }
    };
    let has_type = |id: TermId, class: &str| {
        types
            .get(&id)
            .is_some_and(|ts| ts.iter().any(|t| t == class))
    };

    // Group triples by predicate so each rule is looked up once.
    let mut by_predicate: BTreeMap<TermId, String> = BTreeMap::new();
    for [_, p, _] in store.iter_ids() {
        if Some(p) == rdf_type || by_predicate.contains_key(&p) {
            continue;
        }
        if let Some(name) = local(store.resolve(p)) {
            by_predicate.insert(p, name);
        }
    }

    for ids @ [s, p, o] in store.iter_ids() {
        let Some(name) = by_predicate.get(&p) else {
            continue;
        };
        let triple = || store.decode(ids);
        let Some(rule) = rules.get(name.as_str()) else {
            violations.push(Violation {
                kind: ViolationKind::UnknownProperty,
                triple: triple(),
                expected: "declared property".into(),
                found: name.clone(),
            });
            continue;
        };
        let domain = match rule {
            PropertyRule::Object(def) => &def.domain,
            PropertyRule::Data(def) => &def.domain,
        };
        if !has_type(s, domain) {
            violations.push(Violation {
                kind: ViolationKind::DomainViolation,
                triple: triple(),
                expected: domain.clone(),
                found: describe(s),
            });
        }
        let object = store.resolve(o);
        match rule {
            PropertyRule::Object(def) => {
                if let Term::Literal { datatype, .. } = object {
                    violations.push(Violation {
                        kind: ViolationKind::RangeViolation,
                        triple: triple(),
                        expected: def.range.clone(),
                        found: format!("literal <{datatype}>"),
                    });
                } else if !has_type(o, &def.range) {
                    violations.push(Violation {
                        kind: ViolationKind::RangeViolation,
                        triple: triple(),
                        expected: def.range.clone(),
                        found: describe(o),
                    });
                }
            }
            PropertyRule::Data(def) => {
                let found = match object {
                    Term::Literal { datatype, .. } if def.range.accepts(datatype) => None,
                    Term::Literal { datatype, .. } => Some(datatype.clone()),
                    other => Some(other.to_string()),
                };
                if let Some(found) = found {
                    violations.push(Violation {
                        kind: ViolationKind::DatatypeViolation,
                        triple: triple(),
                        expected: def.range.iri().to_owned(),
                        found,
                    });
                }
            }
        }
    }
    violations
}

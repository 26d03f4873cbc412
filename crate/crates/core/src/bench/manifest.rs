//! Query parameters for the competency suite.
//!
//! A manifest is a text file of `key = value` lines (`#` starts a comment).
//! Keys are either global (`node`) or scoped to one question (`C2.4.threshold`);
//! scoped keys win. Query templates refer to parameters as `{{name}}`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::fixture::{DEFAULT_START, WALLTIME_EXIT_CODE};
use crate::ingest::Dataset;
use crate::rdf::lexical;

use super::BenchError;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: BTreeMap<String, String>,
}

pub const DAY: i64 = 86_400;
pub const WEEK: i64 = 7 * DAY;

fn iso(ts: i64) -> String {
    lexical::format_iso8601(ts).unwrap_or_else(|| ts.to_string())
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| BenchError::Manifest {
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            let k = k.trim();
            if k.is_empty() {
                return Err(BenchError::Manifest {
                    line: i + 1,
                    message: "empty key".into(),
                });
            }
            entries.insert(k.to_owned(), v.trim().to_owned());
        }
        Ok(Self { entries })
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.insert(key.into(), value.to_string());
    }

    /// Value of `param` for question `id`.
    pub fn get(&self, id: &str, param: &str) -> Option<&str> {
        self.entries
            .get(&format!("{id}.{param}"))
            .or_else(|| self.entries.get(param))
            .map(String::as_str)
    }

    pub fn require(&self, id: &str, param: &str) -> Result<&str, BenchError> {
        self.get(id, param).ok_or_else(|| BenchError::MissingParam {
            id: id.to_owned(),
            param: param.to_owned(),
        })
    }

    pub fn int(&self, id: &str, param: &str) -> Result<i64, BenchError> {
        let v = self.require(id, param)?;
        v.parse().map_err(|_| self.bad(id, param, v))
    }

    pub fn float(&self, id: &str, param: &str) -> Result<f64, BenchError> {
        let v = self.require(id, param)?;
        v.parse().map_err(|_| self.bad(id, param, v))
    }

    /// A dateTime parameter as Unix seconds.
    pub fn time(&self, id: &str, param: &str) -> Result<i64, BenchError> {
        let v = self.require(id, param)?;
        lexical::parse_date_time(v)
            .map(|i| i.secs)
            .ok_or_else(|| self.bad(id, param, v))
    }

    fn bad(&self, id: &str, param: &str, value: &str) -> BenchError {
        BenchError::BadParam {
            id: id.to_owned(),
            param: param.to_owned(),
            value: value.to_owned(),
        }
    }

    /// Replaces every `{{name}}` in `template` with its value for `id`.
    pub fn instantiate(&self, template: &str, id: &str) -> Result<String, BenchError> {
        let mut out = String::with_capacity(template.len());
        let mut rest = template;
        while let Some(open) = rest.find("{{") {
            out.push_str(&rest[..open]);
            let after = &rest[open + 2..];
            let close = after.find("}}").ok_or_else(|| BenchError::MissingParam {
                id: id.to_owned(),
                param: after.chars().take(20).collect(),
            })?;
            out.push_str(self.require(id, after[..close].trim())?);
            rest = &after[close + 2..];
        }
        out.push_str(rest);
        Ok(out)
    }

    /// Parameters pointing at entities and time windows present in `ds`.
    pub fn derive(ds: &Dataset) -> Self {
        let mut m = Manifest::default();
        let dc = ds.data_centers.first().map_or(1, |d| d.id);
        let system = ds
            .systems
            .iter()
            .find(|s| s.dc_id == dc)
            .or(ds.systems.first())
            .map_or(1, |s| s.id);
        let rack = ds
            .racks
            .iter()
            .find(|r| r.system_id == system)
            .map_or(1, |r| r.id);
        let node = ds
            .nodes
            .iter()
            .find(|n| n.rack_id == rack)
            .map_or(1, |n| n.id);
        let job = ds
            .jobs
            .iter()
            .find(|j| !j.node_ids.is_empty())
            .or(ds.jobs.first());
        m.set("dc", dc);
        m.set("system", system);
        m.set("rack", rack);
        m.set("node", node);
        m.set("sensor", "total_power");
        m.set("job", job.map_or(1, |j| j.id));
        m.set(
            "user",
            job.map(|j| j.user_id)
                .or(ds.users.first().map(|u| u.id))
                .unwrap_or(1),
        );
        m.set("group", job.map_or(100, |j| j.group_id));
        m.set("walltime_exit_code", WALLTIME_EXIT_CODE);
        m.set("ai_threshold", "1e0");
        m.set("fraction", "0.25");
        m.set("hours", "0.5");
        m.set("radius2", 1);

        let (first, last) = match (
            ds.readings.iter().map(|r| r.ts).min(),
            ds.readings.iter().map(|r| r.ts).max(),
        ) {
            (Some(a), Some(b)) => (a, b),
            _ => match (
                ds.jobs.iter().map(|j| j.start).min(),
                ds.jobs.iter().map(|j| j.end).max(),
            ) {
                (Some(a), Some(b)) => (a, b),
                _ => (DEFAULT_START, DEFAULT_START + DAY - 1),
            },
        };
        let end = last + 1;
        let midnight = first.div_euclid(DAY) * DAY;
        m.set("from", iso(first));
        m.set("to", iso(first + (end - first) / 2));
        m.set("day_from", iso(midnight));
        m.set("day_to", iso(midnight + DAY));
        m.set("week_from", iso(end - WEEK));
        m.set("week_to", iso(end));
        m.set("last24_from", iso(end - DAY));
        m.set("last24_to", iso(end));
        m.set("hour_from", iso(end - 3600));
        m.set("hour_to", iso(end));
        m.set("at", iso(first));

        m.set("C1.6.x", 0);
        m.set("C1.6.y", 0);
        m.set("C1.6.z", 1);
        m.set("C2.4.threshold", "1.5e3");
        m.set("C2.6.from", iso(first));
        m.set("C2.6.to", iso(end));

        // Higher than normal: above mean + 2 standard deviations of all
        // temperature readings in the week.
        let temperature: HashMap<(i64, &str), bool> = ds
            .sensors
            .iter()
            .map(|s| ((s.node_id, s.name.as_str()), s.sensor_type == "temperature"))
            .collect();
        let week: Vec<f64> = ds
            .readings
            .iter()
            .filter(|r| r.ts >= end - WEEK && r.ts < end)
            .filter(|r| temperature.get(&(r.node_id, r.sensor_name.as_str())) == Some(&true))
            .map(|r| r.value)
            .collect();
        let threshold = if week.is_empty() {
            0.0
        } else {
            let n = week.len() as f64;
            let mean = week.iter().sum::<f64>() / n;
            let var = week.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            mean + 2.0 * var.sqrt()
        };
        m.set("C2.5.threshold", format!("{threshold:e}"));

        // Low power: below the mean of the per-instant system power totals.
        let in_system: HashMap<i64, bool> = ds
            .nodes
            .iter()
            .map(|n| {
                (
                    n.id,
                    ds.rack(n.rack_id).is_some_and(|r| r.system_id == system),
                )
            })
            .collect();
        let mut totals: BTreeMap<i64, f64> = BTreeMap::new();
        for r in &ds.readings {
            if r.sensor_name == "total_power" && in_system.get(&r.node_id) == Some(&true) {
                *totals.entry(r.ts).or_default() += r.value;
            }
        }
        let power = if totals.is_empty() {
            0.0
        } else {
            totals.values().sum::<f64>() / totals.len() as f64
        };
        m.set("C6.5.power_threshold", format!("{power:e}"));
        m
    }
}

impl fmt::Display for Manifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scoped_keys_win() {
        let m = Manifest::parse(
            "# params\nnode = 3\nC1.5.node = 7\n\nfrom = 2022-02-01T00:00:00+00:00\n",
        )
        .unwrap();
        assert_eq!(m.get("C1.4", "node"), Some("3"));
        assert_eq!(m.get("C1.5", "node"), Some("7"));
        assert_eq!(m.time("C2.1", "from").unwrap(), DEFAULT_START);
        assert!(matches!(
            Manifest::parse("novalue"),
            Err(BenchError::Manifest { line: 1, .. })
        ));
    }

    #[test]
    fn instantiation() {
        let m = Manifest::parse("node = 3").unwrap();
        assert_eq!(
            m.instantiate("?n hpc:computeNodeId {{node}} .", "C1.4")
                .unwrap(),
            "?n hpc:computeNodeId 3 ."
        );
        assert!(matches!(
            m.instantiate("{{job}}", "C3.1"),
            Err(BenchError::MissingParam { param, .. }) if param == "job"
        ));
    }

    #[test]
    fn round_trips_through_text() {
        let m = Manifest::derive(&Dataset::default());
        assert_eq!(Manifest::parse(&m.to_string()).unwrap(), m);
    }
}

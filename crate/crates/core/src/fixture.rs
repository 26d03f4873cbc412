//! Seeded synthetic telemetry shaped like the two reference systems: an
//! M100-style machine with many per-node hardware sensors and a Fugaku-style
//! machine whose job table carries most of the information.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ingest::{
    self, ComputeNode, DataCenter, Dataset, HpcSystem, IngestError, Job, JobMetric, Plugin, Rack,
    Reading, Sensor, User,
};

/// 2022-02-01T00:00:00Z.
pub const DEFAULT_START: i64 = 1_643_673_600;
/// Exit code given to jobs killed at their walltime limit.
pub const WALLTIME_EXIT_CODE: i64 = 140;
pub const DEFAULT_MAX_READINGS: u64 = 50_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureParams {
    pub seed: u64,
    pub data_centers: usize,
    pub systems_per_dc: usize,
    pub racks_per_system: usize,
    pub nodes_per_rack: usize,
    pub sensors_per_node: usize,
    /// Seconds between two readings of a sensor.
    pub sampling_interval: i64,
    /// Length of the generated window in seconds.
    pub duration: i64,
    pub users_per_system: usize,
    pub jobs_per_system: usize,
    pub metrics_per_job: usize,
    /// Make every second system a job-centric (Fugaku-style) machine with its
    /// own metric vocabulary.
    pub job_centric: bool,
    /// Unix time of the first reading.
    pub start: i64,
    /// Generation is refused if it would produce more readings than this.
    pub max_readings: u64,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self {
            seed: 0,
            data_centers: 1,
            systems_per_dc: 1,
            racks_per_system: 1,
            nodes_per_rack: 1,
            sensors_per_node: 4,
            sampling_interval: 20,
            duration: 86_400,
            users_per_system: 2,
            jobs_per_system: 4,
            metrics_per_job: 6,
            job_centric: false,
            start: DEFAULT_START,
            max_readings: DEFAULT_MAX_READINGS,
        }
    }
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("invalid fixture parameters: {0}")]
    InvalidParams(String),
    #[error("fixture would contain {projected} readings, above the cap of {cap}")]
    TooManyReadings { projected: u128, cap: u64 },
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

impl FixtureParams {
    /// One node carrying `sensors` sensors for one day at a 20 s cadence.
    pub fn single_node_day(sensors: usize) -> Self {
        Self {
            sensors_per_node: sensors,
            jobs_per_system: 0,
            users_per_system: 0,
            ..Self::default()
        }
    }

    pub fn node_count(&self) -> u128 {
        self.data_centers as u128
            * self.systems_per_dc as u128
            * self.racks_per_system as u128
            * self.nodes_per_rack as u128
    }

    /// Number of sampling instants in the window.
    pub fn steps(&self) -> i64 {
        if self.sampling_interval > 0 {
            self.duration.max(0) / self.sampling_interval
        } else {
            0
        }
    }

    pub fn projected_readings(&self) -> u128 {
        self.node_count() * self.sensors_per_node as u128 * self.steps() as u128
    }

    pub fn validate(&self) -> Result<(), FixtureError> {
        if self.sampling_interval <= 0 {
            return Err(FixtureError::InvalidParams(
                "sampling interval must be positive".into(),
            ));
        }
        if self.duration < 0 {
            return Err(FixtureError::InvalidParams(
                "duration must not be negative".into(),
            ));
        }
        if self.start < 0 {
            return Err(FixtureError::InvalidParams(
                "start must not be negative".into(),
            ));
        }
        let projected = self.projected_readings();
        if projected > self.max_readings as u128 {
            return Err(FixtureError::TooManyReadings {
                projected,
                cap: self.max_readings,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Power,
    Temperature,
    Utilization,
}

const IPMI: &str = "ipmi";
const NAGIOS: &str = "nagios";

/// Name, plugin, kind and unit of the `i`-th sensor on every node.
fn sensor_template(i: usize) -> (String, &'static str, Kind, &'static str) {
    match i {
        0 => ("total_power".into(), IPMI, Kind::Power, "W"),
        1 => ("cpu_temp".into(), IPMI, Kind::Temperature, "C"),
        2 => ("cpu_util".into(), NAGIOS, Kind::Utilization, "%"),
        3 => ("gpu_util".into(), NAGIOS, Kind::Utilization, "%"),
        _ => match (i - 4) % 3 {
            0 => (format!("temp_{i}"), IPMI, Kind::Temperature, "C"),
            1 => (format!("power_{i}"), IPMI, Kind::Power, "W"),
            _ => (format!("util_{i}"), NAGIOS, Kind::Utilization, "%"),
        },
    }
}

fn kind_name(kind: Kind) -> &'static str {
    match kind {
        Kind::Power => "power",
        Kind::Temperature => "temperature",
        Kind::Utilization => "utilization",
    }
}

/// Metric names shared by both system styles, followed by style-specific ones.
const COMMON_METRICS: [&str; 6] = [
    "energy",
    "power",
    "arithmetic_intensity",
    "cpu_frequency",
    "requested_walltime",
    "wait_time",
];
const M100_METRICS: [&str; 3] = ["num_cores", "num_gpus", "mem_requested"];
const FUGAKU_METRICS: [&str; 3] = ["execution_cycles", "mem_read_volume", "mem_write_volume"];

fn metric_catalog(fugaku: bool, n: usize) -> Vec<String> {
    let extra = if fugaku { FUGAKU_METRICS } else { M100_METRICS };
    COMMON_METRICS
        .iter()
        .chain(extra.iter())
        .map(|s| s.to_string())
        .chain((COMMON_METRICS.len() + extra.len()..).map(|i| format!("metric_{i}")))
        .take(n)
        .collect()
}

const LOCATIONS: [&str; 4] = ["Bologna", "Kobe", "Barcelona", "Juelich"];
const APPLICATIONS: [&str; 6] = [
    "lammps",
    "gromacs",
    "wrf",
    "namd",
    "resnet",
    "quantum_espresso",
];
const WALLTIMES: [i64; 5] = [600, 1800, 3600, 7200, 14_400];

fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Generates the topology, users, jobs and metrics, without readings.
pub fn generate_static(params: &FixtureParams) -> Result<Dataset, FixtureError> {
    params.validate()?;
    let mut ds = Dataset::default();
    let mut jobs_rng = rng(params.seed, 2);
    let (mut system_id, mut rack_id, mut node_id, mut user_id, mut job_id) =
        (0i64, 0i64, 0i64, 0i64, 0i64);

    for dc in 1..=params.data_centers as i64 {
        ds.data_centers.push(DataCenter {
            id: dc,
            name: format!("DC{dc}"),
            location: LOCATIONS[(dc as usize - 1) % LOCATIONS.len()].to_owned(),
        });
        for _ in 0..params.systems_per_dc {
            system_id += 1;
            let fugaku = params.job_centric && system_id % 2 == 0;
            ds.systems.push(HpcSystem {
                id: system_id,
                dc_id: dc,
                name: format!("{}{system_id}", if fugaku { "fugaku" } else { "marconi" }),
            });
            let mut system_nodes = Vec::new();
            for rack_idx in 0..params.racks_per_system as i64 {
                rack_id += 1;
                ds.racks.push(Rack {
                    id: rack_id,
                    system_id,
                });
                for idx in 0..params.nodes_per_rack as i64 {
                    node_id += 1;
                    system_nodes.push(node_id);
                    ds.nodes.push(ComputeNode {
                        id: node_id,
                        rack_id,
                        pos_x: rack_idx,
                        pos_y: idx / 4,
                        pos_z: idx % 4,
                    });
                    let mut plugins: Vec<&str> = Vec::new();
                    for i in 0..params.sensors_per_node {
                        let (name, plugin, kind, unit) = sensor_template(i);
                        if !plugins.contains(&plugin) {
                            plugins.push(plugin);
                            ds.plugins.push(Plugin {
                                node_id,
                                name: plugin.to_owned(),
                            });
                        }
                        ds.sensors.push(Sensor {
                            node_id,
                            plugin_name: plugin.to_owned(),
                            name,
                            sensor_type: kind_name(kind).to_owned(),
                            unit: unit.to_owned(),
                        });
                    }
                }
            }

            let first_user = user_id + 1;
            for _ in 0..params.users_per_system {
                user_id += 1;
                ds.users.push(User {
                    id: user_id,
                    system_id,
                    name: format!("user{user_id}"),
                });
            }
            if params.users_per_system == 0 {
                continue;
            }
            let catalog = metric_catalog(fugaku, params.metrics_per_job);
            for j in 0..params.jobs_per_system {
                job_id += 1;
                let walltime_kill =
                    (j > 0 && j + 1 == params.jobs_per_system) || jobs_rng.gen_bool(0.1);
                let exit_code = match walltime_kill {
                    false => 0,
                    true if j > 0 && j + 1 == params.jobs_per_system => WALLTIME_EXIT_CODE,
                    true => *[1, 137, WALLTIME_EXIT_CODE].choose(&mut jobs_rng).unwrap(),
                };
                let fitting: Vec<i64> = WALLTIMES
                    .iter()
                    .copied()
                    .filter(|&w| w <= params.duration)
                    .collect();
                let requested = fitting
                    .choose(&mut jobs_rng)
                    .copied()
                    .unwrap_or(params.duration);
                let length = if exit_code == WALLTIME_EXIT_CODE {
                    requested
                } else {
                    jobs_rng.gen_range(requested.min(60)..=requested)
                };
                let start = params.start + jobs_rng.gen_range(0..=params.duration - length);
                let nodes = if system_nodes.is_empty() {
                    Vec::new()
                } else {
                    let n = system_nodes.len();
                    let k = jobs_rng.gen_range(1..=if n <= 4 { n } else { n / 2 });
                    let first = jobs_rng.gen_range(0..=n - k);
                    system_nodes[first..first + k].to_vec()
                };
                let user = first_user + jobs_rng.gen_range(0..params.users_per_system as i64);
                let app = APPLICATIONS.choose(&mut jobs_rng).unwrap();
                let job = Job {
                    id: job_id,
                    user_id: user,
                    group_id: 100 + jobs_rng.gen_range(0..3),
                    name: format!("{app}_{job_id}"),
                    exit_code,
                    start,
                    end: start + length,
                    node_ids: nodes,
                };
                let power =
                    round2(jobs_rng.gen_range(50.0..2000.0) * job.node_ids.len().max(1) as f64);
                for name in &catalog {
                    let value = match name.as_str() {
                        "energy" => round2(power * length as f64 / 3600.0),
                        "power" => power,
                        "arithmetic_intensity" => round2(10f64.powf(jobs_rng.gen_range(-1.5..1.3))),
                        "cpu_frequency" => *[2000.0, 2200.0].choose(&mut jobs_rng).unwrap(),
                        "requested_walltime" => requested as f64,
                        "wait_time" => jobs_rng.gen_range(0..3600) as f64,
                        "num_cores" => 32.0 * job.node_ids.len() as f64,
                        "num_gpus" => 4.0 * job.node_ids.len() as f64,
                        "mem_requested" => {
                            (jobs_rng.gen_range(8..=256) * job.node_ids.len().max(1)) as f64
                        }
                        "execution_cycles" => {
                            (jobs_rng.gen_range(1_000_000..1_000_000_000u64) * length.max(1) as u64)
                                as f64
                        }
                        "mem_read_volume" | "mem_write_volume" => {
                            round2(jobs_rng.gen_range(0.1..500.0))
                        }
                        _ => round2(jobs_rng.gen_range(0.0..1000.0)),
                    };
                    ds.job_metrics.push(JobMetric {
                        job_id,
                        name: name.clone(),
                        value,
                    });
                }
                ds.jobs.push(job);
            }
        }
    }
    Ok(ds)
}

/// Generates a full dataset. Readings are emitted time-major on a grid of
/// `sampling_interval` multiples starting at `params.start`, so every sensor
/// shares the same set of timestamps.
pub fn generate(params: &FixtureParams) -> Result<Dataset, FixtureError> {
    let mut ds = generate_static(params)?;
    let mut values = rng(params.seed, 3);
    let mut kinds = Vec::with_capacity(ds.sensors.len());
    for s in &ds.sensors {
        let idx = ds
            .sensors_of(s.node_id)
            .position(|o| o.name == s.name)
            .unwrap_or(0);
        kinds.push(sensor_template(idx).2);
    }
    let baselines: Vec<f64> = ds
        .sensors
        .iter()
        .map(|_| values.gen_range(35.0..60.0))
        .collect();
    let steps = params.steps();
    ds.readings.reserve(params.projected_readings() as usize);
    for step in 0..steps {
        let ts = params.start + step * params.sampling_interval;
        for (i, s) in ds.sensors.iter().enumerate() {
            let value = match kinds[i] {
                Kind::Power => values.gen_range(50..=2000) as f64,
                Kind::Temperature => {
                    let spike = if values.gen_bool(0.01) { 25.0 } else { 0.0 };
                    round1((baselines[i] + values.gen_range(-5.0..5.0) + spike).clamp(20.0, 90.0))
                }
                Kind::Utilization => round1(values.gen_range(0.0..100.0)),
            };
            ds.readings.push(Reading {
                node_id: s.node_id,
                sensor_name: s.name.clone(),
                ts,
                value,
            });
        }
    }
    Ok(ds)
}

/// Writes `ds` as a fixture directory readable by [`ingest::load_dataset`].
pub fn write_fixture(
    ds: &Dataset,
    dir: impl AsRef<std::path::Path>,
) -> Result<Vec<std::path::PathBuf>, FixtureError> {
    Ok(ingest::write_dataset(ds, dir)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_day_reading_count() {
        let ds = generate(&FixtureParams::single_node_day(104)).unwrap();
        assert_eq!(ds.readings.len(), 104 * 4_320);
        assert_eq!(ds.readings.len(), 449_280);
    }

    #[test]
    fn zero_duration_has_static_entities_only() {
        let p = FixtureParams {
            duration: 0,
            ..FixtureParams::default()
        };
        let ds = generate(&p).unwrap();
        assert!(ds.readings.is_empty());
        assert_eq!(ds.nodes.len(), 1);
        assert_eq!(ds.sensors.len(), 4);
        ds.validate().unwrap();
    }

    #[test]
    fn cap_reports_projection() {
        let p = FixtureParams {
            max_readings: 10,
            ..FixtureParams::single_node_day(104)
        };
        match generate(&p) {
            Err(FixtureError::TooManyReadings { projected, cap }) => {
                assert_eq!((projected, cap), (449_280, 10));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn same_seed_same_dataset() {
        let p = FixtureParams {
            seed: 7,
            systems_per_dc: 2,
            nodes_per_rack: 3,
            duration: 3_600,
            job_centric: true,
            ..FixtureParams::default()
        };
        assert_eq!(generate(&p).unwrap(), generate(&p).unwrap());
        let other = FixtureParams {
            seed: 8,
            ..p.clone()
        };
        assert_ne!(generate(&p).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn generated_data_is_valid_and_plausible() {
        let p = FixtureParams {
            seed: 3,
            data_centers: 2,
            systems_per_dc: 2,
            racks_per_system: 2,
            nodes_per_rack: 5,
            sensors_per_node: 9,
            duration: 7_200,
            users_per_system: 3,
            jobs_per_system: 10,
            metrics_per_job: 9,
            job_centric: true,
            ..FixtureParams::default()
        };
        let ds = generate(&p).unwrap();
        ds.validate().unwrap();
        assert_eq!(ds.readings.len() as u128, p.projected_readings());
        let window = p.start..=p.start + p.duration;
        for j in &ds.jobs {
            assert!(window.contains(&j.start) && window.contains(&j.end) && j.start <= j.end);
            assert!(!j.node_ids.is_empty());
        }
        assert!(ds.jobs.iter().any(|j| j.exit_code == WALLTIME_EXIT_CODE));
        assert!(ds.job_metrics.iter().any(|m| m.name == "execution_cycles"));
        assert!(ds.job_metrics.iter().any(|m| m.name == "num_gpus"));
        for r in &ds.readings {
            let s = ds
                .sensors
                .iter()
                .find(|s| s.node_id == r.node_id && s.name == r.sensor_name)
                .unwrap();
            let range = match s.sensor_type.as_str() {
                "temperature" => 20.0..=90.0,
                "power" => 50.0..=2000.0,
                _ => 0.0..=100.0,
            };
            assert!(range.contains(&r.value), "{} {}", s.sensor_type, r.value);
            assert_eq!((r.ts - p.start) % p.sampling_interval, 0);
        }
    }

    #[test]
    fn invalid_params() {
        for p in [
            FixtureParams {
                sampling_interval: 0,
                ..FixtureParams::default()
            },
            FixtureParams {
                duration: -1,
                ..FixtureParams::default()
            },
        ] {
            assert!(matches!(generate(&p), Err(FixtureError::InvalidParams(_))));
        }
    }
}

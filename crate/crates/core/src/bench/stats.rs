//! Storage statistics, cross-mode comparison and projections.

use std::collections::BTreeSet;
use std::fmt;

use crate::builder::{build_graph, utc_day, BuildOptions, SchemaMode};
use crate::fixture::{generate_static, FixtureParams};
use crate::ingest::{tabular_size, Dataset};
use crate::io::ntriples_size;

use super::BenchError;

pub const MIB: f64 = 1024.0 * 1024.0;
pub const GIB: f64 = 1024.0 * MIB;

/// Published per-day N-Triples sizes for one monitored day of 4,229,280
/// readings, and the size of the same day in a document store. Used to check
/// the report arithmetic against known figures.
pub mod reference {
    pub const READINGS: u64 = 4_229_280;
    pub const LEGACY_MIB: f64 = 1074.89;
    pub const UNIFIED_MIB: f64 = 657.36;
    pub const BNODE_MIB: f64 = 481.00;
    pub const BASELINE_MIB: f64 = 2.77;
    pub const LEGACY_TRIPLES: u64 = 25_375_684;
    pub const UNIFIED_TRIPLES: u64 = 16_917_120;
    pub const DAYS: u64 = 28;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphStats {
    pub mode: SchemaMode,
    pub triples: u64,
    pub nodes: u64,
    /// N-Triples serialization size.
    pub bytes: u64,
    /// Part of `bytes` that does not grow with the observation window
    /// (topology, plugins, sensors, users).
    pub static_bytes: u64,
    /// Triples contributed by readings alone.
    pub reading_triples: u64,
    /// Legacy DataRecord declarations; zero in the unified modes.
    pub residual_triples: u64,
}

/// `1 - smaller/larger`, in percent.
pub fn reduction(smaller: f64, larger: f64) -> f64 {
    if larger == 0.0 {
        0.0
    } else {
        (1.0 - smaller / larger) * 100.0
    }
}

pub fn graph_stats(ds: &Dataset, opts: &BuildOptions) -> Result<GraphStats, BenchError> {
    let store = build_graph(ds, opts)?;
    let without_readings = Dataset {
        readings: Vec::new(),
        ..ds.clone_static()
    };
    let static_store = build_graph(&without_readings, opts)?;
    let with_jobs = Dataset {
        jobs: ds.jobs.clone(),
        job_metrics: ds.job_metrics.clone(),
        ..without_readings
    };
    let base = build_graph(&with_jobs, opts)?.len() as u64;
    let residual = if opts.mode == SchemaMode::LegacyOda {
        crate::builder::emit_data_records(ds)?.len() as u64
    } else {
        0
    };
    let stats = store.stats();
    Ok(GraphStats {
        mode: opts.mode,
        triples: stats.triple_count as u64,
        nodes: stats.node_count as u64,
        bytes: ntriples_size(&store),
        static_bytes: ntriples_size(&static_store),
        reading_triples: stats.triple_count as u64 - base - residual,
        residual_triples: residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    /// Legacy, unified and unified-with-blank-nodes, in that order.
    pub stats: Vec<GraphStats>,
    pub readings: u64,
    /// Percent.
    pub reduction_unified_vs_legacy: f64,
    pub reduction_bnode_vs_unified: f64,
    pub reading_triple_reduction: f64,
    /// Size of the same data as CSV tables.
    pub baseline_bytes: u64,
}

impl CompareReport {
    pub fn get(&self, mode: SchemaMode) -> Option<&GraphStats> {
        self.stats.iter().find(|s| s.mode == mode)
    }

    /// Graph size over baseline size, per mode.
    pub fn ratio_vs_baseline(&self, mode: SchemaMode) -> Option<f64> {
        let s = self.get(mode)?;
        (self.baseline_bytes > 0).then(|| s.bytes as f64 / self.baseline_bytes as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("version,triples,nodes,bytes,size_mib,reading_triples,residual_triples\n");
        for s in &self.stats {
            out.push_str(&format!(
                "{},{},{},{},{:.2},{},{}\n",
                s.mode.tag(),
                s.triples,
                s.nodes,
                s.bytes,
                s.bytes as f64 / MIB,
                s.reading_triples,
                s.residual_triples
            ));
        }
        out
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<30} {:>12} {:>12} {:>12}",
            "Version", "# Triples", "# Nodes", "Size [MiB]"
        )?;
        for s in &self.stats {
            writeln!(
                f,
                "{:<30} {:>12} {:>12} {:>12.2}",
                s.mode.to_string(),
                s.triples,
                s.nodes,
                s.bytes as f64 / MIB
            )?;
        }
        writeln!(f, "readings: {}", self.readings)?;
        writeln!(
            f,
            "reading-triple reduction (unified vs legacy): {:.2}%",
            self.reading_triple_reduction
        )?;
        writeln!(
            f,
            "size reduction (unified vs legacy): {:.2}%",
            self.reduction_unified_vs_legacy
        )?;
        writeln!(
            f,
            "size reduction (blank nodes vs unified): {:.2}%",
            self.reduction_bnode_vs_unified
        )?;
        if let Some(legacy) = self.get(SchemaMode::LegacyOda) {
            writeln!(
                f,
                "legacy residual (DataRecord declarations): {} triples",
                legacy.residual_triples
            )?;
        }
        writeln!(f, "tabular baseline: {} bytes", self.baseline_bytes)?;
        for mode in [SchemaMode::UnifiedUri, SchemaMode::UnifiedBnode] {
            if let Some(r) = self.ratio_vs_baseline(mode) {
                writeln!(f, "{mode} / baseline: {r:.1}x")?;
            }
        }
        Ok(())
    }
}

/// Builds and serializes all three modes (in parallel) and compares them.
pub fn compare_modes(ds: &Dataset) -> Result<CompareReport, BenchError> {
    let results: Vec<Result<GraphStats, BenchError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = SchemaMode::ALL
            .iter()
            .map(|&mode| scope.spawn(move || graph_stats(ds, &BuildOptions::new(mode))))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("graph build thread panicked"))
            .collect()
    });
    let stats = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let by = |m: SchemaMode| {
        stats
            .iter()
            .find(|s| s.mode == m)
            .copied()
            .expect("all modes built")
    };
    let (legacy, unified, bnode) = (
        by(SchemaMode::LegacyOda),
        by(SchemaMode::UnifiedUri),
        by(SchemaMode::UnifiedBnode),
    );
    Ok(CompareReport {
        readings: ds.readings.len() as u64,
        reduction_unified_vs_legacy: reduction(unified.bytes as f64, legacy.bytes as f64),
        reduction_bnode_vs_unified: reduction(bnode.bytes as f64, unified.bytes as f64),
        reading_triple_reduction: reduction(
            unified.reading_triples as f64,
            legacy.reading_triples as f64,
        ),
        baseline_bytes: tabular_size(ds),
        stats,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DryRunCounts {
    pub readings: u64,
    pub reading_triples: u64,
    /// Topology, plugins, sensors, users and jobs.
    pub static_triples: u64,
    /// Legacy DataRecord declarations.
    pub residual_triples: u64,
}

impl DryRunCounts {
    pub fn total(&self) -> u64 {
        self.reading_triples + self.static_triples + self.residual_triples
    }
}

/// Triple counts for a fixture shape without generating its readings.
pub fn dry_run_counts(
    shape: &FixtureParams,
    mode: SchemaMode,
    dedup: bool,
) -> Result<DryRunCounts, BenchError> {
    let ds = generate_static(shape)?;
    let opts = BuildOptions::new(mode).with_dedup(dedup && mode != SchemaMode::LegacyOda);
    let static_triples = build_graph(&ds, &opts)?.len() as u64;
    let readings = shape.projected_readings() as u64;
    let grid = || (0..shape.steps()).map(|i| shape.start + i * shape.sampling_interval);
    let reading_triples = if opts.dedup_time_nodes {
        // Three triples per reading plus one `timestamp` triple per Time node
        // not already created by a job.
        let job_times: BTreeSet<i64> = ds.jobs.iter().flat_map(|j| [j.start, j.end]).collect();
        let fresh = if readings == 0 {
            0
        } else {
            grid().filter(|ts| !job_times.contains(ts)).count() as u64
        };
        3 * readings + fresh
    } else {
        mode.triples_per_reading() * readings
    };
    let residual_triples = if mode == SchemaMode::LegacyOda && readings > 0 {
        let plugins: BTreeSet<&str> = ds.sensors.iter().map(|s| s.plugin_name.as_str()).collect();
        let mut days = BTreeSet::new();
        for ts in grid() {
            days.insert(utc_day(ts).ok_or(crate::builder::BuildError::Timestamp(ts))?);
        }
        (plugins.len() * days.len()) as u64
    } else {
        0
    };
    Ok(DryRunCounts {
        readings,
        reading_triples,
        static_triples,
        residual_triples,
    })
}

/// Bytes for `days` days of observation: static part once, the rest scaled.
pub fn project_storage(day: &GraphStats, days: u64) -> u64 {
    day.static_bytes + day.bytes.saturating_sub(day.static_bytes) * days
}

/// Projection of a per-day size given in MiB, in GiB.
pub fn project_mib_to_gib(mib_per_day: f64, days: u64) -> f64 {
    mib_per_day * days as f64 / 1024.0
}

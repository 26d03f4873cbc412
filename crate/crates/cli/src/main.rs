use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use oda_core::bench::{
    compare_modes, dry_run_counts, project_storage, run_suite, Manifest, GIB, MIB,
};
use oda_core::builder::{build_graph, BuildOptions, SchemaMode};
use oda_core::fixture::{generate, write_fixture, FixtureParams};
use oda_core::ingest::load_dataset;
use oda_core::io::{read_graph, write_graph, RdfFormat};
use oda_core::ontology::{builtin_schema, emit_ontology, legacy, validate_graph};
use oda_core::rdf::{Term, TripleStore};
use oda_core::sparql::run_query;
use oda_core::vocab;

#[derive(Parser)]
#[command(
    name = "oda",
    version,
    about = "Build, query and measure HPC telemetry knowledge graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Legacy,
    Unified,
    UnifiedBnode,
}

impl From<Mode> for SchemaMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Legacy => SchemaMode::LegacyOda,
            Mode::Unified => SchemaMode::UnifiedUri,
            Mode::UnifiedBnode => SchemaMode::UnifiedBnode,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Ttl,
    Nt,
}

impl From<Format> for RdfFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Ttl => RdfFormat::Turtle,
            Format::Nt => RdfFormat::NTriples,
        }
    }
}

#[derive(clap::Args)]
struct Shape {
    /// Compute nodes per rack.
    #[arg(long, default_value_t = 4)]
    nodes: usize,
    /// Sensors per node.
    #[arg(long, default_value_t = 4)]
    sensors: usize,
    /// Sampling interval in seconds.
    #[arg(long, default_value_t = 20)]
    interval: i64,
    /// Length of the window in days (fractions allowed).
    #[arg(long, default_value_t = 1.0)]
    days: f64,
    #[arg(long, default_value_t = 1)]
    data_centers: usize,
    #[arg(long, default_value_t = 1)]
    systems: usize,
    #[arg(long, default_value_t = 1)]
    racks: usize,
}

impl Shape {
    fn params(&self) -> Result<FixtureParams> {
        if !(self.days.is_finite() && self.days >= 0.0) {
            bail!("--days must be a non-negative number");
        }
        Ok(FixtureParams {
            data_centers: self.data_centers,
            systems_per_dc: self.systems,
            racks_per_system: self.racks,
            nodes_per_rack: self.nodes,
            sensors_per_node: self.sensors,
            sampling_interval: self.interval,
            duration: (self.days * 86_400.0).round() as i64,
            ..FixtureParams::default()
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic fixture directory.
    GenFixture {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        shape: Shape,
        #[arg(long, default_value_t = 2)]
        users: usize,
        /// Jobs per system.
        #[arg(long, default_value_t = 4)]
        jobs: usize,
        #[arg(long, default_value_t = 6)]
        metrics: usize,
        /// Make every second system job-centric.
        #[arg(long)]
        job_centric: bool,
        /// Replace `--out` if it already exists.
        #[arg(long)]
        force: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a knowledge graph from a fixture directory.
    Build {
        #[arg(long, value_enum, default_value = "unified")]
        mode: Mode,
        /// Share one Time node per distinct timestamp.
        #[arg(long)]
        dedup_time: bool,
        #[arg(long)]
        fixture: PathBuf,
        /// Output file; `.ttl` writes Turtle, anything else N-Triples.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print triple, node and size counts of a graph file.
    Stats {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Run a SPARQL query against a graph file.
    Query {
        #[arg(long)]
        graph: PathBuf,
        /// File holding the query.
        #[arg(long)]
        query: PathBuf,
        #[arg(long)]
        csv: bool,
    },
    /// Run the competency question suite against a fixture.
    Suite {
        #[arg(long)]
        fixture: PathBuf,
        /// Directory of `<id>.rq` templates.
        #[arg(long)]
        queries: PathBuf,
        /// Parameter file; derived from the fixture when absent.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "unified")]
        mode: Mode,
        #[arg(long)]
        dedup_time: bool,
    },
    /// Compare the storage footprint of all schema modes on a fixture.
    Compare {
        #[arg(long)]
        fixture: PathBuf,
        /// Also project sizes to this many days.
        #[arg(long)]
        days: Option<u64>,
        #[arg(long)]
        csv: bool,
    },
    /// Count triples for a fixture shape without generating readings.
    DryRun {
        #[command(flatten)]
        shape: Shape,
        #[arg(long, value_enum, default_value = "unified")]
        mode: Mode,
        #[arg(long)]
        dedup_time: bool,
    },
    /// Write the ontology document.
    EmitOntology {
        #[arg(long, value_enum, default_value = "ttl")]
        format: Format,
        /// Include the legacy DataRecord fragment.
        #[arg(long)]
        legacy: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a graph file against the ontology.
    Validate {
        #[arg(long)]
        graph: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Writes through a temporary file in the destination directory and renames it
/// into place, so readers never see a partial file.
fn write_atomic(
    path: &Path,
    fill: impl FnOnce(&mut BufWriter<&mut File>) -> Result<()>,
) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a file in {}", dir.display()))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn load_graph(path: &Path) -> Result<TripleStore> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_graph(BufReader::new(file), RdfFormat::from_path(path))
        .with_context(|| format!("parsing {}", path.display()))
}

fn load_fixture(dir: &Path) -> Result<oda_core::ingest::Dataset> {
    load_dataset(dir).with_context(|| format!("loading fixture {}", dir.display()))
}

fn run(command: Command) -> Result<()> {
    let mut out = io::stdout().lock();
    match command {
        Command::GenFixture {
            seed,
            shape,
            users,
            jobs,
            metrics,
            job_centric,
            force,
            out: dir,
        } => {
            let params = FixtureParams {
                seed,
                users_per_system: users,
                jobs_per_system: jobs,
                metrics_per_job: metrics,
                job_centric,
                ..shape.params()?
            };
            let ds = generate(&params)?;
            if dir.exists() && !force && fs::read_dir(&dir).map_or(true, |mut d| d.next().is_some())
            {
                bail!(
                    "{} already exists (use --force to replace it)",
                    dir.display()
                );
            }
            let parent = match dir.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
                _ => PathBuf::from("."),
            };
            fs::create_dir_all(&parent)?;
            let staging = tempfile::tempdir_in(&parent)?;
            write_fixture(&ds, staging.path())?;
            if dir.exists() {
                fs::remove_dir_all(&dir).with_context(|| format!("replacing {}", dir.display()))?;
            }
            fs::rename(staging.path(), &dir)
                .with_context(|| format!("writing {}", dir.display()))?;
            writeln!(
                out,
                "wrote {}: {} nodes, {} sensors, {} jobs, {} readings",
                dir.display(),
                ds.nodes.len(),
                ds.sensors.len(),
                ds.jobs.len(),
                ds.readings.len()
            )?;
        }
        Command::Build {
            mode,
            dedup_time,
            fixture,
            out: path,
        } => {
            let ds = load_fixture(&fixture)?;
            let store = build_graph(&ds, &BuildOptions::new(mode.into()).with_dedup(dedup_time))?;
            let format = RdfFormat::from_path(&path);
            let mut report = None;
            write_atomic(&path, |w| {
                report = Some(write_graph(&store, w, format)?);
                Ok(())
            })?;
            let report = report.expect("writer ran");
            writeln!(
                out,
                "wrote {} ({format}): {} triples, {} bytes",
                path.display(),
                report.triples_written,
                report.bytes_written
            )?;
        }
        Command::Stats { graph } => {
            let store = load_graph(&graph)?;
            let stats = store.stats();
            let bytes = oda_core::io::ntriples_size(&store);
            writeln!(out, "triples: {}", stats.triple_count)?;
            writeln!(out, "nodes: {}", stats.node_count)?;
            writeln!(out, "terms: {}", stats.dict_size)?;
            writeln!(
                out,
                "n-triples bytes: {bytes} ({:.2} MiB)",
                bytes as f64 / MIB
            )?;
        }
        Command::Query { graph, query, csv } => {
            let text = fs::read_to_string(&query)
                .with_context(|| format!("reading {}", query.display()))?;
            let store = load_graph(&graph)?;
            let table =
                run_query(&store, &text).with_context(|| format!("in {}", query.display()))?;
            if csv {
                table.write_csv(&mut out)?;
            } else {
                write!(out, "{table}")?;
                writeln!(out, "{} row(s)", table.len())?;
            }
        }
        Command::Suite {
            fixture,
            queries,
            manifest,
            mode,
            dedup_time,
        } => {
            let ds = load_fixture(&fixture)?;
            let manifest = match manifest {
                Some(path) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    Manifest::parse(&text).with_context(|| format!("in {}", path.display()))?
                }
                None => Manifest::derive(&ds),
            };
            let store = build_graph(&ds, &BuildOptions::new(mode.into()).with_dedup(dedup_time))?;
            let started = Instant::now();
            let result = run_suite(&store, &queries, &manifest, &ds);
            write!(out, "{result}")?;
            writeln!(out, "total {:.2} s", started.elapsed().as_secs_f64())?;
            if !result.all_passed() {
                bail!(
                    "{} of {} questions failed",
                    result.entries.len() - result.matched(),
                    result.entries.len()
                );
            }
        }
        Command::Compare { fixture, days, csv } => {
            let ds = load_fixture(&fixture)?;
            let report = compare_modes(&ds)?;
            if csv {
                write!(out, "{}", report.to_csv())?;
            } else {
                write!(out, "{report}")?;
            }
            if let Some(days) = days {
                for s in &report.stats {
                    let bytes = project_storage(s, days);
                    writeln!(
                        out,
                        "{} over {days} days: {:.2} GiB",
                        s.mode,
                        bytes as f64 / GIB
                    )?;
                }
            }
        }
        Command::DryRun {
            shape,
            mode,
            dedup_time,
        } => {
            let params = FixtureParams {
                users_per_system: 0,
                jobs_per_system: 0,
                max_readings: u64::MAX,
                ..shape.params()?
            };
            let c = dry_run_counts(&params, mode.into(), dedup_time)?;
            writeln!(out, "readings: {}", c.readings)?;
            writeln!(out, "reading triples: {}", c.reading_triples)?;
            writeln!(out, "static triples: {}", c.static_triples)?;
            writeln!(out, "residual triples: {}", c.residual_triples)?;
            writeln!(out, "total triples: {}", c.total())?;
        }
        Command::EmitOntology {
            format,
            legacy,
            out: path,
        } => {
            let schema = if legacy {
                builtin_schema().with_legacy_extension()
            } else {
                builtin_schema()
            };
            let doc = emit_ontology(&schema, format.into())?;
            write_atomic(&path, |w| Ok(w.write_all(&doc)?))?;
            writeln!(out, "wrote {} ({} bytes)", path.display(), doc.len())?;
            writeln!(out, "{}", schema.axiom_counts())?;
        }
        Command::Validate { graph } => {
            let store = load_graph(&graph)?;
            let legacy_graph = store
                .lookup(&Term::Iri(vocab::hpc(legacy::PART_OF_RECORD)))
                .is_some();
            let schema = if legacy_graph {
                builtin_schema().with_legacy_extension()
            } else {
                builtin_schema()
            };
            let violations = validate_graph(&schema, &store);
            for v in &violations {
                writeln!(out, "{v}")?;
            }
            if !violations.is_empty() {
                bail!("{} violation(s) in {}", violations.len(), graph.display());
            }
            writeln!(
                out,
                "{}: {} triples conform to the {} schema",
                graph.display(),
                store.len(),
                if legacy_graph { "legacy" } else { "unified" }
            )?;
        }
    }
    Ok(())
}

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use knnuc::eval::{self, SystemSummary};
use knnuc::io::{self, EvalsFile, Manifest};
use knnuc::knn::default_k;
use knnuc::scenario::generate_instances;
use knnuc::{cases, plot, Error, PowerSystem, Result, SolverConfig};

#[derive(Parser)]
#[command(name = "knnuc", version, about = "Unit commitment benchmark with nearest-neighbour commitment reuse")]
struct Cli {
    /// error, warn, info, debug or trace
    #[arg(long, global = true, default_value = "info")]
    log_level: log::LevelFilter,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw daily load profiles for a system.
    Generate {
        #[command(flatten)]
        system: SystemArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Instance-set file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve every instance exactly and store the results. Resumes from an
    /// existing record store.
    Solve {
        #[command(flatten)]
        system: SystemArg,
        #[arg(long)]
        instances: PathBuf,
        /// Record store to create or extend.
        #[arg(long)]
        records: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Re-solve each stored instance with its neighbours' commitments.
    Evaluate {
        #[command(flatten)]
        system: SystemArg,
        #[arg(long)]
        records: PathBuf,
        /// Neighbours per instance; defaults to a tenth of the store.
        #[arg(long)]
        k: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Write the report table and charts for an evaluations file.
    Report {
        #[arg(long)]
        evals: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Args)]
struct SystemArg {
    /// System file, or builtin:<name>.
    #[arg(long)]
    system: String,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0.0001)]
    mip_gap: f64,
    /// Seconds per solve.
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            mip_gap: self.mip_gap,
            time_limit_seconds: self.time_limit,
            ..SolverConfig::default()
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn load_system(arg: &str) -> Result<PowerSystem> {
    match arg.strip_prefix("builtin:") {
        Some(name) => cases::builtin(name),
        None => io::load_system_auto(Path::new(arg)),
    }
}

fn system_file(arg: &str) -> Option<PathBuf> {
    (!arg.starts_with("builtin:")).then(|| PathBuf::from(arg))
}

fn manifest_path(output: &Path) -> PathBuf {
    output
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .join("manifest.json")
}

/// Merges `update` into the manifest next to `output`.
fn update_manifest(output: &Path, update: impl FnOnce(&mut Manifest)) -> Result<()> {
    let path = manifest_path(output);
    let mut m = if path.exists() { io::load_manifest(&path)? } else { Manifest::default() };
    update(&mut m);
    io::save_manifest(&path, &m)
}

fn cmd_generate(system: &str, n: usize, seed: u64, out: &Path) -> Result<()> {
    let sys = load_system(system)?;
    let instances = generate_instances(&sys, n, seed)?;
    io::save_instances(out, &instances)?;
    log::info!("event=generated system={} n={} seed={} out={}", sys.name(), n, seed, out.display());
    update_manifest(out, |m| {
        m.system_file = system_file(system);
        m.instance_file = Some(out.to_path_buf());
        m.master_seed = Some(seed);
    })
}

fn cmd_solve(system: &str, instances: &Path, records: &Path, config: &SolverConfig) -> Result<()> {
    let sys = load_system(system)?;
    let instances = io::load_instances(instances)?;
    let mut store = io::load_records_or_empty(records)?;
    let done: HashSet<u64> = store.iter().map(|r| r.instance_id).collect();
    let summary = eval::solve_instances(&sys, &instances, &done, config, |record| {
        store.push(record);
        io::save_records(records, &store)
    })?;
    log::info!(
        "event=solve_done solved={} skipped={} failed={} records={}",
        summary.solved,
        summary.skipped,
        summary.failed.len(),
        store.len()
    );
    update_manifest(records, |m| {
        m.system_file = m.system_file.take().or(system_file(system));
        m.record_file = Some(records.to_path_buf());
        m.config = Some(config.clone());
    })
}

fn write_report(out: &Path, format: Format, report: &eval::EvalReport) -> Result<PathBuf> {
    let reports = std::slice::from_ref(report);
    let (path, text) = match format {
        Format::Csv => (out.join("report.csv"), io::report_csv(reports)?),
        Format::Json => {
            let path = out.join("report.json");
            io::save_report(&path, reports)?;
            (path.clone(), std::fs::read_to_string(&path).map_err(|source| Error::Io { path, source })?)
        }
    };
    if format == Format::Csv {
        io::write_atomic(&path, text.as_bytes())?;
    }
    let mut stdout = std::io::stdout().lock();
    let _ = stdout.write_all(text.as_bytes());
    Ok(path)
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    system: &str,
    records: &Path,
    k: Option<usize>,
    config: &SolverConfig,
    jobs: usize,
    out: &Path,
    format: Format,
) -> Result<()> {
    let sys = load_system(system)?;
    let store = io::load_records(records)?;
    let k = k.unwrap_or_else(|| default_k(store.len()));
    log::info!("event=evaluate records={} k={} jobs={}", store.len(), k, jobs);
    let evals = eval::evaluate_all(&sys, &store, k, config, jobs)?;
    let summary = SystemSummary::of(&sys);
    let report = eval::aggregate(summary.clone(), &evals)?;
    let evals_path = out.join("evals.json");
    io::save_evals(&evals_path, &EvalsFile::new(summary, k, config.clone(), evals))?;
    let report_path = write_report(out, format, &report)?;
    update_manifest(&evals_path, |m| {
        m.system_file = m.system_file.take().or(system_file(system));
        m.record_file = Some(records.to_path_buf());
        m.evals_file = Some(evals_path.clone());
        m.report_file = Some(report_path);
        m.k = Some(k);
        m.config = Some(config.clone());
    })
}

fn cmd_report(evals: &Path, out: &Path, format: Format) -> Result<()> {
    let file = io::load_evals(evals)?;
    let report = eval::aggregate(file.system.clone(), &file.evals)?;
    write_report(out, format, &report)?;
    io::write_atomic(&out.join("gap_histogram.svg"), plot::gap_histogram_svg(&report).as_bytes())?;
    io::write_atomic(
        &out.join("speedup.svg"),
        plot::speedup_chart_svg(&file.system.name, &file.evals).as_bytes(),
    )?;
    log::info!("event=report out={} instances={}", out.display(), report.n_instances);
    Ok(())
}

fn init_logging(level: log::LevelFilter) {
    env_logger::Builder::new()
        .filter_level(level)
        .format(|buf, record| {
            writeln!(
                buf,
                "ts={} level={} target={} {}",
                buf.timestamp_millis(),
                record.level().as_str().to_lowercase(),
                record.target(),
                record.args()
            )
        })
        .init();
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { system, n, seed, out } => cmd_generate(&system.system, n, seed, &out),
        Command::Solve {
            system,
            instances,
            records,
            solver,
        } => cmd_solve(&system.system, &instances, &records, &solver.config()),
        Command::Evaluate {
            system,
            records,
            k,
            solver,
            jobs,
            out,
            format,
        } => {
            let jobs = jobs.unwrap_or_else(default_jobs);
            if jobs == 0 {
                return Err(Error::Input("--jobs must be at least 1".into()));
            }
            cmd_evaluate(&system.system, &records, k, &solver.config(), jobs, &out, format)
        }
        Command::Report { evals, out, format } => cmd_report(&evals, &out, format),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.log_level);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("event=failed error=\"{}\"", e.to_string().replace('"', "'"));
            eprintln!("error: {e}");
            ExitCode::from(if e.is_solver_failure() { 1 } else { 2 })
        }
    }
}

//! `geodiv`: geographic route diversity from traceroute corpora.
//!
//! Exit codes: 0 on success, 1 for bad input, 2 for internal errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geodiv::geolocate::load_geodb;
use geodiv::pipeline::{cluster_corpus, load_traces, score_corpus};
use geodiv::report::{emit_report, ClusterFile};
use geodiv::{DiversityConfig, Error};

#[derive(Parser)]
#[command(name = "geodiv", version, about = "Geographic diversity of Internet routes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every stage and write report.json, pairs.csv and the ECDF tables.
    Pipeline {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        opts: Opts,
    },
    /// Stop after clustering and write clusters.json.
    Cluster {
        #[command(flatten)]
        inputs: Inputs,
        #[command(flatten)]
        opts: Opts,
    },
    /// Score a clusters.json produced by `cluster`.
    Gdi {
        #[arg(long, value_name = "PATH")]
        clusters: PathBuf,
        #[command(flatten)]
        opts: Opts,
    },
}

#[derive(Args)]
struct Inputs {
    /// Trace file, one JSON object per line.
    #[arg(long, value_name = "PATH")]
    traces: PathBuf,
    /// Geolocation snapshot, CSV rows of cidr,lat,lon.
    #[arg(long, value_name = "PATH")]
    geodb: PathBuf,
}

#[derive(Args)]
struct Opts {
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long, default_value_t = 50.0)]
    threshold_km: f64,
    #[arg(long, default_value_t = 6371.0)]
    earth_radius_km: f64,
    #[arg(long, default_value_t = 21)]
    mgdi_grid_steps: usize,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Opts {
    fn config(&self) -> DiversityConfig<f64> {
        DiversityConfig {
            threshold_km: self.threshold_km,
            earth_radius_km: self.earth_radius_km,
            mgdi_grid_steps: self.mgdi_grid_steps,
        }
    }
}

enum Failure {
    Input(String),
    Internal(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

fn with_pool<R>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, Failure>
where
    R: Send,
{
    if jobs == Some(0) {
        return Err(Failure::Input("--jobs must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Internal(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn announce(out: &Path, files: &[PathBuf]) {
    for f in files {
        eprintln!("wrote {}", f.strip_prefix(out).unwrap_or(f).display());
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Pipeline { inputs, opts } => {
            let cfg = opts.config();
            cfg.validate()?;
            let records = load_traces(&inputs.traces)?;
            let db = load_geodb(&inputs.geodb)?;
            let summary = with_pool(opts.jobs, || {
                cluster_corpus(&records, &db, &cfg).and_then(|c| score_corpus(&c, &cfg))
            })??;
            let files = emit_report(&summary, &opts.out)?;
            announce(&opts.out, &files);
            eprintln!(
                "{} pairs: {} single IP route, {} single geo-path, {} scored",
                summary.total_pairs, summary.pairs_removed_stage1, summary.pairs_removed_stage2, summary.pairs_scored
            );
        }
        Command::Cluster { inputs, opts } => {
            let cfg = opts.config();
            cfg.validate()?;
            let records = load_traces(&inputs.traces)?;
            let db = load_geodb(&inputs.geodb)?;
            let corpus = with_pool(opts.jobs, || cluster_corpus(&records, &db, &cfg))??;
            std::fs::create_dir_all(&opts.out).map_err(|e| Failure::Input(format!("{}: {e}", opts.out.display())))?;
            let path = opts.out.join("clusters.json");
            ClusterFile::from_corpus(&corpus, cfg.threshold_km).write(&path)?;
            announce(&opts.out, &[path]);
        }
        Command::Gdi { clusters, opts } => {
            let cfg = opts.config();
            cfg.validate()?;
            let corpus = ClusterFile::load(&clusters)?.into_corpus()?;
            let summary = with_pool(opts.jobs, || score_corpus(&corpus, &cfg))??;
            let files = emit_report(&summary, &opts.out)?;
            announce(&opts.out, &files);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}

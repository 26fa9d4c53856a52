//! `diga` command-line runner.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error, 3 data
//! or file error.

mod config;
mod error;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diga::data::{load_dataset, synth_dataset, write_dataset};
use diga::engine::run_evolution;
use diga::gd::gd_train;
use diga::report::final_report;
use diga::{Architecture, Dataset};

use crate::config::{EvolveFile, GdFile};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "diga", version, about = "Dual-individual genetic algorithm trainer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evolve weights and hidden widths with the leader/follower GA.
    Evolve(EvolveArgs),
    /// Train one fixed architecture with full-batch gradient descent.
    Gd(GdArgs),
    /// Write a synthetic dataset file.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Training set in DIGA1 format.
    #[arg(long, value_name = "PATH", required = true)]
    train: PathBuf,
    #[arg(long, value_name = "PATH")]
    test: Option<PathBuf>,
    /// Divide every feature by this on load (255 for 8-bit pixels).
    #[arg(long, value_name = "DIVISOR")]
    normalize: Option<f64>,
    /// Output directory for curve.csv, report.json and config.resolved.json.
    #[arg(long, value_name = "DIR", required = true)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvolveArgs {
    /// JSON file of config keys; flags override it.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Largest allowed architecture, e.g. 12288,20,5,1.
    #[arg(long, value_name = "LIST", value_parser = parse_arch)]
    max_dims: Option<Architecture>,
    #[arg(long)]
    stop_cost: Option<f64>,
    /// Solutions per agent.
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Overridden by DIGA_SEED when set.
    #[arg(long)]
    seed: Option<u64>,
    /// Consideration rate for width proposals.
    #[arg(long)]
    cr: Option<f64>,
    /// Pitch adjustment rate for width proposals.
    #[arg(long)]
    par: Option<f64>,
    /// Standard deviation of mutation noise.
    #[arg(long)]
    mutation_scale: Option<f64>,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Debug, Args)]
struct GdArgs {
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Architecture to train, e.g. 12288,7,1.
    #[arg(long, value_name = "LIST", value_parser = parse_arch)]
    arch: Option<Architecture>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u32).range(1..))]
    features: u32,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    examples: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Label by a random hyperplane with a margin instead of coin flips.
    #[arg(long)]
    separable: bool,
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

fn parse_arch(s: &str) -> Result<Architecture, String> {
    let dims = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    Architecture::new(dims).map_err(|e| e.to_string())
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var("DIGA_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Config(format!("DIGA_SEED={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn load(data: &DataArgs) -> Result<(Dataset, Option<Dataset>), CliError> {
    let train = load_dataset(&data.train, data.normalize)?;
    let test = data
        .test
        .as_deref()
        .map(|p| load_dataset(p, data.normalize))
        .transpose()?;
    Ok((train, test))
}

fn evolve(args: EvolveArgs) -> Result<(), CliError> {
    let mut file = args
        .config
        .as_deref()
        .map(EvolveFile::read)
        .transpose()?
        .unwrap_or_default();
    file.max_dims = args.max_dims.or(file.max_dims);
    file.stop_cost = args.stop_cost.or(file.stop_cost);
    file.size = args.size.or(file.size);
    file.max_iter = args.max_iter.or(file.max_iter);
    file.seed = env_seed()?.or(args.seed).or(file.seed);
    file.cr = args.cr.or(file.cr);
    file.par = args.par.or(file.par);
    file.mutation_scale = args.mutation_scale.or(file.mutation_scale);
    let config = file.resolve();
    config.validate()?;

    let (train, test) = load(&args.data)?;
    let record = run_evolution(config.clone(), &train, test.as_ref())?;
    let report = final_report(&record)?;
    output::write_run(&args.data.out, &record, &report, &EvolveFile::from_config(&config))?;
    let lead = &report.leader[0];
    println!(
        "{} after {} iterations ({:?}), train/test {}",
        lead.label, report.iterations, report.stop_reason, lead.accuracy
    );
    Ok(())
}

fn gd(args: GdArgs) -> Result<(), CliError> {
    let mut file = args
        .config
        .as_deref()
        .map(GdFile::read)
        .transpose()?
        .unwrap_or_default();
    file.arch = args.arch.or(file.arch);
    file.learning_rate = args.lr.or(file.learning_rate);
    file.iterations = args.iters.or(file.iterations);
    file.seed = env_seed()?.or(args.seed).or(file.seed);
    let config = file.resolve()?;
    config.validate()?;

    let (train, test) = load(&args.data)?;
    let record = gd_train(&config, &train, test.as_ref())?;
    let report = final_report(&record)?;
    output::write_run(&args.data.out, &record, &report, &GdFile::from_config(&config))?;
    let row = &report.leader[0];
    println!(
        "{} after {} iterations, train/test {}",
        row.label, report.iterations, row.accuracy
    );
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let seed = env_seed()?.unwrap_or(args.seed);
    let data = synth_dataset(args.features as usize, args.examples as usize, seed, args.separable)?;
    if let Some(dir) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    write_dataset(&args.out, &data)?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Evolve(a) => evolve(a),
        Command::Gd(a) => gd(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Command-line interface: sequence synthesis, decomposition, and the
//! Monte Carlo simulator.
//!
//! Exit codes: 0 success, 2 usage/input error, 3 algorithmic failure
//! (detection failure, degenerate simplexes, inconsistent recovery).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geoseq_core::decompose::decompose_with_report;
use geoseq_core::denoise::{decompose_noisy, DenoiseConfig, SimilarityKind};
use geoseq_core::error::Error;
use geoseq_core::formats::{
    decomposition_from_json, decomposition_to_json, sequence_from_csv, sequence_to_csv,
};
use geoseq_core::noinfra::{run_experiment, ExperimentKind, ExperimentSpec};
use geoseq_core::sequence::{nmse, synthesize};

#[derive(Parser)]
#[command(
    name = "geoseq",
    about = "Decompose superpositions of complex geometric sequences and run link-level simulations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for simulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a sequence CSV from a decomposition JSON.
    Synth(SynthArgs),
    /// Decompose a sequence CSV into components.
    Decompose(DecomposeArgs),
    /// Run a Monte Carlo experiment described by a JSON config.
    Sim(SimArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Decomposition JSON (may carry a "length" field).
    config: PathBuf,
    /// Number of samples to synthesize; overrides the config's length.
    #[arg(long)]
    length: Option<usize>,
    /// Output CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Input sequence CSV.
    sequence: PathBuf,
    /// Treat the input as noisy: estimate the order if needed, then de-noise
    /// before recovering the components.
    #[arg(long)]
    noisy: bool,
    /// Component count: a number, or "auto" to detect/estimate it.
    #[arg(long, default_value = "auto")]
    k: String,
    /// Similarity function for noisy order estimation.
    #[arg(long, value_parser = ["full", "diag", "rapid"], default_value = "diag")]
    similarity: String,
    /// Seed for the noisy pipeline's random choices.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// De-noising stopping criterion.
    #[arg(long, default_value_t = 1e-10)]
    epsilon: f64,
    /// De-noising iteration cap.
    #[arg(long, default_value_t = 30)]
    imax: usize,
    /// Candidate-pair budget for the similarity scan.
    #[arg(long, default_value_t = geoseq_core::denoise::DEFAULT_PAIR_BUDGET)]
    pair_budget: usize,
    /// Output JSON path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report CSVs.
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    /// Bad usage, unreadable input, malformed config.
    Input(String),
    /// The method itself failed on valid input.
    Algorithm(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Algorithm(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Algorithm(m) => m,
        }
    }
}

fn classify(error: Error) -> CliError {
    match &error {
        Error::DetectionFailure { .. }
        | Error::DegenerateSimplex { .. }
        | Error::SimilarityInfeasible
        | Error::InconsistentDecomposition { .. }
        | Error::RootResidual { .. } => CliError::Algorithm(error.to_string()),
        _ => CliError::Input(error.to_string()),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, contents)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let text = read_file(&args.config)?;
    let (decomposition, config_length) = decomposition_from_json(&text).map_err(classify)?;
    let length = args.length.or(config_length).ok_or_else(|| {
        CliError::Input("no length given: pass --length or a \"length\" field".into())
    })?;
    let sequence = synthesize(&decomposition, length).map_err(classify)?;
    write_output(args.out.as_deref(), &sequence_to_csv(&sequence))?;
    eprintln!("k = {}, P = {length}", decomposition.k());
    Ok(())
}

fn cmd_decompose(args: &DecomposeArgs) -> Result<(), CliError> {
    let text = read_file(&args.sequence)?;
    let sequence = sequence_from_csv(&text).map_err(classify)?;
    let k = match args.k.as_str() {
        "auto" => None,
        other => Some(other.parse::<usize>().map_err(|_| {
            CliError::Input(format!("--k must be a positive integer or \"auto\", got {other}"))
        })?),
    };

    let (decomposition, detected_k, denoise_iterations) = if args.noisy {
        let kind = match args.similarity.as_str() {
            "full" => SimilarityKind::Full,
            "rapid" => SimilarityKind::Rapid,
            _ => SimilarityKind::Diagonal,
        };
        let cfg = DenoiseConfig { epsilon: args.epsilon, max_iterations: args.imax };
        let (d, report) =
            decompose_noisy(&sequence, k, &cfg, kind, args.pair_budget, args.seed)
                .map_err(classify)?;
        (d, report.k, Some(report.denoise_iterations))
    } else {
        let (d, report) = decompose_with_report(&sequence).map_err(classify)?;
        if let Some(expected) = k {
            if d.k() != expected {
                return Err(CliError::Algorithm(format!(
                    "detected k = {} but --k {expected} was requested",
                    d.k()
                )));
            }
        }
        for warning in &report.warnings {
            eprintln!("warning: {warning}");
        }
        (d, report.detected_k, None)
    };

    let reconstruction = synthesize(&decomposition, sequence.len()).map_err(classify)?;
    let round_trip = nmse(&sequence, &reconstruction).map_err(classify)?;

    write_output(args.out.as_deref(), &(decomposition_to_json(&decomposition) + "\n"))?;
    eprintln!("detected k = {detected_k}");
    eprintln!("round-trip NMSE = {round_trip:.6e}");
    if let Some(iterations) = denoise_iterations {
        eprintln!("denoise iterations = {iterations}");
    }
    Ok(())
}

fn cmd_sim(args: &SimArgs) -> Result<(), CliError> {
    let text = read_file(&args.config)?;
    let spec = ExperimentSpec::from_json(&text).map_err(classify)?;
    let report = run_experiment(&spec).map_err(classify)?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", args.out.display())))?;
    let name = match report.kind {
        ExperimentKind::Ser => "ser.csv",
        ExperimentKind::Detection => "detection.csv",
        ExperimentKind::Denoise => "denoise.csv",
    };
    let csv_path = args.out.join(name);
    std::fs::write(&csv_path, report.to_csv())
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", csv_path.display())))?;
    let echo_path = args.out.join("config_echo.json");
    let echo = serde_json::to_string_pretty(&report.config_echo)
        .expect("experiment spec serializes");
    std::fs::write(&echo_path, echo + "\n")
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", echo_path.display())))?;
    print!("{}", report.summary());
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Decompose(args) => cmd_decompose(args),
        Command::Sim(args) => cmd_sim(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {}", error.message());
            ExitCode::from(error.exit_code())
        }
    }
}

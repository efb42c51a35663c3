//! `nvhmeta`: JSON-configured front end for the surrogate workflow.

mod commands;
mod error;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{BootstrapCmd, CvCmd, DiagnoseCmd, FitCmd, LooCmd, PredictCmd, SampleCmd, SynthCmd};
use error::{CliError, CliResult};
use run::{execute, read_json_value, Command, Manifest, Status};

#[derive(Parser)]
#[command(name = "nvhmeta", version, about = "Probabilistic surrogates for vehicle noise spectra")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate a dataset from a surrogate with Gaussian noise.
    Synth(RunArgs),
    /// Nonlinear least-squares fit.
    Fit(RunArgs),
    /// Repeated K-fold cross-validation.
    Cv(RunArgs),
    /// NUTS sampling of a Bayesian model.
    Sample(RunArgs),
    /// R-hat, ESS and rank histograms of a sample run; exits 3 above the gate.
    Diagnose(RunArgs),
    /// PSIS-LOO for one or more sample runs, with a ranking table.
    Loo(RunArgs),
    /// Parametric bootstrap of a least-squares fit.
    Bootstrap(RunArgs),
    /// Posterior predictive intervals from a sample run.
    Predict(RunArgs),
    /// Re-run a command from the manifest it wrote.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn dispatch(
    command: &str,
    config: serde_json::Value,
    base: &Path,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> CliResult<Status> {
    // `--out` is relative to the working directory, `out` in a config to the
    // config file.
    let out = out.map(std::path::absolute).transpose()?;
    match command {
        SynthCmd::NAME => execute::<SynthCmd>(config, base, out, seed),
        FitCmd::NAME => execute::<FitCmd>(config, base, out, seed),
        CvCmd::NAME => execute::<CvCmd>(config, base, out, seed),
        SampleCmd::NAME => execute::<SampleCmd>(config, base, out, seed),
        DiagnoseCmd::NAME => execute::<DiagnoseCmd>(config, base, out, seed),
        LooCmd::NAME => execute::<LooCmd>(config, base, out, seed),
        BootstrapCmd::NAME => execute::<BootstrapCmd>(config, base, out, seed),
        PredictCmd::NAME => execute::<PredictCmd>(config, base, out, seed),
        other => Err(CliError::Usage(format!("unknown command `{other}`"))),
    }
}

fn from_config(command: &str, args: RunArgs) -> CliResult<Status> {
    let config = read_json_value(&args.config)?;
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    dispatch(command, config, &base, args.out, args.seed)
}

fn from_manifest(path: &Path, out: Option<PathBuf>) -> CliResult<Status> {
    let manifest: Manifest = run::parse(read_json_value(path)?)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    dispatch(&manifest.command, manifest.config, &base, out, manifest.seed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Synth(a) => from_config(SynthCmd::NAME, a),
        Cmd::Fit(a) => from_config(FitCmd::NAME, a),
        Cmd::Cv(a) => from_config(CvCmd::NAME, a),
        Cmd::Sample(a) => from_config(SampleCmd::NAME, a),
        Cmd::Diagnose(a) => from_config(DiagnoseCmd::NAME, a),
        Cmd::Loo(a) => from_config(LooCmd::NAME, a),
        Cmd::Bootstrap(a) => from_config(BootstrapCmd::NAME, a),
        Cmd::Predict(a) => from_config(PredictCmd::NAME, a),
        Cmd::Rerun { manifest, out } => from_manifest(&manifest, out),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Gate(msg)) => {
            eprintln!("{}", serde_json::json!({ "gate": msg }));
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code())
        }
    }
}

//! `gafed` command-line front end.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "gafed", version, about = "Federated ECG beat classification over Gramian Angular Field images")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract labelled beats from a directory of WFDB records.
    Ingest(IngestArgs),
    /// Generate the synthetic five-class sinusoid dataset.
    Synth(SynthArgs),
    /// Stratified train/test split of a beat file.
    Split(SplitArgs),
    /// Stratified partition of a beat file into client shards.
    Partition(PartitionArgs),
    /// Encode beats as GAF images.
    Encode(EncodeArgs),
    /// Run the federation server over TCP.
    Server(ServerArgs),
    /// Run one federated client over TCP.
    Client(ClientArgs),
    /// Run server and clients in one process.
    Simulate(SimulateArgs),
    /// Evaluate a checkpoint on an image file.
    Eval(EvalArgs),
    /// Re-render the report of a run directory.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Directory holding `.hea/.dat/.atr` triplets.
    #[arg(long)]
    pub data_dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 128)]
    pub window: usize,
    /// Comma-separated subset of N,L,R,A,V.
    #[arg(long, default_value = "N,L,R,A,V")]
    pub classes: String,
    #[arg(long)]
    pub max_per_class: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub per_class: usize,
    #[arg(long, default_value_t = 128)]
    pub window: usize,
    /// Noise standard deviation relative to the amplitude.
    #[arg(long, default_value_t = 0.3)]
    pub noise: f64,
    /// Per-beat phase range as a fraction of a full cycle.
    #[arg(long, default_value_t = 1.0)]
    pub phase_jitter: f64,
    /// Per-beat frequency offset range in cycles per window.
    #[arg(long, default_value_t = 0.3)]
    pub cycle_jitter: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_train: PathBuf,
    #[arg(long)]
    pub out_test: PathBuf,
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Comma-separated fractions; alternatively taken from `--config`.
    #[arg(long, conflicts_with = "config")]
    pub shares: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shard `i` is written to `<prefix>-<i>.fgds`, or `<prefix>-<id>.fgds` with `--config`.
    #[arg(long)]
    pub out_prefix: String,
}

#[derive(Args, Debug)]
pub struct EncodeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "gasf")]
    pub method: String,
    #[arg(long, default_value = "bilinear")]
    pub resize: String,
    #[arg(long, default_value_t = 32)]
    pub size: usize,
    /// Rescale interval, `-1,1` or `0,1`.
    #[arg(long, default_value = "-1,1", allow_hyphen_values = true)]
    pub range: String,
}

#[derive(Args, Debug)]
pub struct ServerArgs {
    #[arg(long)]
    pub bind: String,
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated training shards, for the train-accuracy figure.
    #[arg(long)]
    pub train: Option<String>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct ClientArgs {
    #[arg(long)]
    pub connect: String,
    #[arg(long)]
    pub shard: PathBuf,
    #[arg(long)]
    pub id: String,
    /// Training hyperparameters and model spec; defaults apply without it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// How long to keep retrying a refused connection.
    #[arg(long, default_value_t = 30.0)]
    pub connect_timeout_sec: f64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated shard files in configured client order.
    #[arg(long)]
    pub shards: String,
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value = "run")]
    pub out: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Drop this client from the configuration (shards still list all).
    #[arg(long)]
    pub exclude: Option<String>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Run directory containing `report.json`.
    #[arg(long)]
    pub run: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let result = match cli.command {
        Command::Ingest(a) => commands::ingest(a),
        Command::Synth(a) => commands::synth(a),
        Command::Split(a) => commands::split(a),
        Command::Partition(a) => commands::partition(a),
        Command::Encode(a) => commands::encode(a),
        Command::Server(a) => commands::server(a),
        Command::Client(a) => commands::client(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Eval(a) => commands::eval(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

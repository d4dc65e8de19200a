mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::{DataArgs, TrainArgs};
use error::CliError;
use mixae::data::LabelColumn;
use mixae::Normalization;

#[derive(Parser)]
#[command(name = "mixae", version, about = "Clustering with a mixture of autoencoders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a TOML run config and write the run artifacts.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Number of autoencoders (clusters).
        #[arg(long)]
        k: Option<usize>,
        /// Output directory; defaults to `$MIXAE_OUTPUT_ROOT/<config name>`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a dataset.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        data: DataFlags,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic dataset described by a TOML spec to CSV.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the K-means baseline on a dataset.
    Baseline {
        #[command(flatten)]
        data: DataFlags,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DataFlags {
    /// A TOML file with a `[data]` table, a CSV file, or an IDX image file.
    #[arg(long)]
    data: PathBuf,
    /// IDX label file, when `--data` is an IDX image file.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// CSV label column: `none`, `last`, a column index or a header name.
    #[arg(long, value_parser = parse_label_column)]
    label_column: Option<LabelColumn>,
    /// `none`, `minmax` or `zscore`; overrides the data config.
    #[arg(long)]
    normalization: Option<Normalization>,
}

impl From<DataFlags> for DataArgs {
    fn from(f: DataFlags) -> Self {
        DataArgs {
            data: f.data,
            labels: f.labels,
            label_column: f.label_column,
            normalization: f.normalization,
        }
    }
}

fn parse_label_column(s: &str) -> Result<LabelColumn, String> {
    Ok(match s {
        "none" => LabelColumn::None,
        "last" => LabelColumn::Last,
        _ => match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        },
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train {
            config,
            seed,
            epochs,
            k,
            out,
        } => {
            let dir = commands::cmd_train(&TrainArgs {
                config,
                seed,
                epochs,
                k,
                out,
            })?;
            println!("{}", dir.display());
        }
        Command::Eval { checkpoint, data, out } => {
            let report = commands::cmd_eval(&checkpoint, &data.into(), &out)?;
            print!("{}", report.summary());
        }
        Command::Generate { spec, out } => {
            commands::cmd_generate(&spec, &out)?;
            println!("{}", out.display());
        }
        Command::Baseline { data, k, seed, out } => {
            let report = commands::cmd_baseline(&data.into(), k, seed, &out)?;
            match report.acc {
                Some(acc) => println!("k-means acc: {acc:.4}"),
                None => println!("k-means inertia: {}", report.inertia),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use modeforge::features::FeatureFormat;
use modeforge::harness::{cmd_embed, cmd_experiment, cmd_extract, cmd_recon, cmd_spectrum, ExperimentConfig};

#[derive(Parser)]
#[command(name = "modeforge", version, about = "DMD image features and kernel classifiers")]
struct Cli {
    /// TOML configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed, overriding the config
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Runs per sweep cell, overriding the config
    #[arg(long, global = true)]
    repeats: Option<usize>,
    /// Log progress to stderr (repeat for more detail)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Binary,
}

#[derive(Subcommand)]
enum Command {
    /// Extract feature vectors for every image in a directory
    Extract {
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Run the configured accuracy sweep
    Experiment {
        /// Fill the wall_time_s column (output is then not reproducible)
        #[arg(long)]
        record_time: bool,
    },
    /// Write the DMD eigenvalue spectrum of one image
    Spectrum { image: PathBuf },
    /// Write low-rank and sparse luminance reconstructions of one image
    Recon {
        image: PathBuf,
        /// Number of DMD eigenvalues
        #[arg(long)]
        rank: Option<usize>,
        /// Background threshold on |log λ|
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Re-emit a feature file as label-first CSV for embedding tools
    Embed { features: PathBuf },
}

fn run(cli: Cli) -> modeforge::Result<ExitCode> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = cli.out_dir {
        cfg.out_dir = d;
    }
    if let Some(r) = cli.repeats {
        cfg.repeats = r;
    }
    match cli.command {
        Command::Extract { input, format } => {
            let format = match format {
                Format::Csv => FeatureFormat::Csv,
                Format::Binary => FeatureFormat::Binary,
            };
            let report = cmd_extract(&input, &cfg.features, format, &cfg.out_dir)?;
            println!("{}", report.output.display());
            if !report.failures.is_empty() {
                for (path, err) in &report.failures {
                    eprintln!("failed: {path}: {err}");
                }
                eprintln!(
                    "{} of {} images failed",
                    report.failures.len(),
                    report.failures.len() + report.written
                );
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Experiment { record_time } => {
            cfg.record_time |= record_time;
            cfg.validate()?;
            println!("{}", cmd_experiment(&cfg)?.display());
        }
        Command::Spectrum { image } => {
            println!("{}", cmd_spectrum(&image, &cfg.features, &cfg.out_dir)?.display());
        }
        Command::Recon { image, rank, eps } => {
            let mut features = cfg.features.clone();
            if let Some(r) = rank {
                features.rank = r;
            }
            if let Some(e) = eps {
                features.eps = e;
            }
            let (low, sparse) = cmd_recon(&image, &features, &cfg.out_dir)?;
            println!("{}\n{}", low.display(), sparse.display());
        }
        Command::Embed { features } => {
            println!("{}", cmd_embed(&features, &cfg.out_dir)?.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

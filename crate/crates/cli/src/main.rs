use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use valaro_cli::commands::{self, Algo, ExtractMode, GenerateArgs, Target};
use valaro_core::config::PipelineConfig;
use valaro_core::error::{Error, Result};

/// EEG valence/arousal pipeline: synthetic data, spectral features, classic
/// classifiers, and a from-scratch LSTM.
#[derive(Parser)]
#[command(name = "valaro", version, about)]
struct Cli {
    /// Config file of `key = value` lines; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed driving every stochastic choice.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic subject (.eegt tensor + ratings.csv).
    Generate(GenerateCli),
    /// Extract features (meta vectors or regional statistics) plus labels.
    Extract(ExtractCli),
    /// Cross-validate KNN or linear SVM on extracted features.
    TrainClassic(TrainClassicCli),
    /// Train the stacked LSTM on meta-vector features.
    TrainLstm(TrainLstmCli),
    /// Render a band-power scalp map for a time span of one trial.
    Topomap(TopomapCli),
    /// Export per-channel Welch PSD curves for one trial.
    Psd(PsdCli),
}

#[derive(Args)]
struct GenerateCli {
    #[arg(long, default_value_t = 40)]
    trials: usize,
    #[arg(long, default_value_t = 32)]
    channels: usize,
    #[arg(long, default_value_t = 8064)]
    samples: usize,
    #[arg(long, default_value_t = 128.0)]
    fs: f64,
    #[arg(long, default_value_t = 0)]
    subject: u32,
    /// Gaussian noise level in microvolts.
    #[arg(long)]
    noise_sigma: Option<f64>,
    /// Amplitude multiplier planted on positive trials.
    #[arg(long)]
    boost: Option<f64>,
}

#[derive(Args)]
struct ExtractCli {
    #[arg(long)]
    tensor: PathBuf,
    #[arg(long)]
    ratings: PathBuf,
    /// "meta" (sliding-window band powers) or "regions" (per-trial stats).
    #[arg(long)]
    mode: String,
}

#[derive(Args)]
struct TrainClassicCli {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// valence | arousal | quadrant
    #[arg(long)]
    target: String,
    /// svm | knn
    #[arg(long)]
    algo: String,
}

#[derive(Args)]
struct TrainLstmCli {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Override the configured epoch count.
    #[arg(long)]
    epochs: Option<usize>,
    /// Continue from an existing checkpoint.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct TopomapCli {
    #[arg(long)]
    tensor: PathBuf,
    #[arg(long)]
    trial: usize,
    /// Span start in seconds.
    #[arg(long)]
    start: f64,
    /// Span end in seconds.
    #[arg(long)]
    end: f64,
    /// theta | alpha | beta | gamma
    #[arg(long)]
    band: String,
}

#[derive(Args)]
struct PsdCli {
    #[arg(long)]
    tensor: PathBuf,
    #[arg(long)]
    trial: usize,
    /// Comma-separated channel indices; all channels when omitted.
    #[arg(long)]
    channels: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    fmin: f64,
    #[arg(long)]
    fmax: Option<f64>,
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.rng_seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn parse_channel_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Config(format!("bad channel index {s:?}")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let mut config = load_config(&cli)?;
    let out_dir = cli.out.clone();
    match cli.command {
        Command::Generate(args) => commands::cmd_generate(
            &config,
            &GenerateArgs {
                trials: args.trials,
                channels: args.channels,
                samples: args.samples,
                sample_rate_hz: args.fs,
                subject: args.subject,
                noise_sigma: args.noise_sigma,
                boost: args.boost,
            },
            &out_dir,
        ),
        Command::Extract(args) => {
            let mode: ExtractMode = args.mode.parse()?;
            commands::cmd_extract(&config, &args.tensor, &args.ratings, mode, &out_dir)
        }
        Command::TrainClassic(args) => {
            let target: Target = args.target.parse()?;
            let algo: Algo = args.algo.parse()?;
            commands::cmd_train_classic(
                &config,
                &args.features,
                &args.labels,
                target,
                algo,
                &out_dir,
            )
        }
        Command::TrainLstm(args) => {
            if let Some(epochs) = args.epochs {
                config.lstm.epochs = epochs;
            }
            commands::cmd_train_lstm(
                &config,
                &args.features,
                &args.labels,
                args.resume.as_deref(),
                &out_dir,
            )
        }
        Command::Topomap(args) => commands::cmd_topomap(
            &config,
            &args.tensor,
            args.trial,
            args.start,
            args.end,
            &args.band,
            &out_dir,
        ),
        Command::Psd(args) => {
            let channels = args
                .channels
                .as_deref()
                .map(parse_channel_list)
                .transpose()?;
            commands::cmd_psd(
                &config,
                &args.tensor,
                args.trial,
                channels.as_deref(),
                args.fmin,
                args.fmax,
                &out_dir,
            )
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(files) => {
            for file in files {
                println!("{}", file.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}

//! `airwrite` command-line tool.
//!
//! Exit codes: 0 success, 1 usage error, 2 bad input data, 3 internal or
//! environment failure.

mod commands;

use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;

use airwrite::classifier::{ClassifierConfig, LogisticConfig, DEFAULT_POOL_FACTOR, DEFAULT_TEMPERATURE};
use airwrite::dataset::SyntheticSpec;
use airwrite::encoders::{Method, DEFAULT_BINS};
use airwrite::evaluation::EncodingConfig;
use airwrite::signal::{DEFAULT_LENGTH, DEFAULT_RATE_HZ};
use clap::builder::TypedValueParser as _;
use clap::{Args, Parser, Subcommand, ValueEnum};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "airwrite", version, about = "Air-writing recognition from wrist IMU recordings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset (manifest + recording CSVs).
    Synth(SynthArgs),
    /// Encode every recording of a manifest into raw image stacks.
    Encode(EncodeArgs),
    /// Write the subject splits for a manifest.
    Split(SplitArgs),
    /// Train and evaluate per-sensor classifiers with posterior fusion.
    Eval(EvalArgs),
    /// Render one recording's encoded images as PNG files.
    ExportPng(ExportPngArgs),
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse::<Method>().map_err(|e| e.to_string())
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn non_negative_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() && x >= 0.0 => Ok(x),
        _ => Err(format!("`{s}` is not a non-negative number")),
    }
}

fn fraction(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if (0.0..1.0).contains(&x) => Ok(x),
        _ => Err(format!("`{s}` is not in [0, 1)")),
    }
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = SyntheticSpec::default().n_subjects as u32, value_parser = clap::value_parser!(u32).range(2..))]
    subjects: u32,
    #[arg(long, default_value_t = SyntheticSpec::default().n_repetitions as u32, value_parser = clap::value_parser!(u32).range(1..))]
    reps: u32,
    #[arg(long, default_value_t = SyntheticSpec::default().seed)]
    seed: u64,
    /// Amplitude of the letter templates.
    #[arg(long, default_value_t = SyntheticSpec::default().class_separation, value_parser = positive_f64)]
    class_separation: f64,
    /// Standard deviation of per-sample white noise.
    #[arg(long, default_value_t = SyntheticSpec::default().noise_scale, value_parser = non_negative_f64)]
    noise: f64,
    /// Scale of per-subject speed, onset, gain and offset distortions.
    #[arg(long, default_value_t = SyntheticSpec::default().subject_jitter, value_parser = non_negative_f64)]
    jitter: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EncodingArgs {
    /// Image encoding: ssm, gasf, gadf or mtf.
    #[arg(long, default_value = "gadf", value_parser = parse_method)]
    method: Method,
    /// Quantile bins for mtf.
    #[arg(long, default_value_t = DEFAULT_BINS, value_parser = clap::value_parser!(u16).range(2..).map(usize::from))]
    bins: usize,
    /// Samples per recording after length fixing.
    #[arg(long, default_value_t = DEFAULT_LENGTH, value_parser = clap::value_parser!(u32).range(2..).map(|v| v as usize))]
    length: usize,
    /// Recordings above this rate are resampled down to it.
    #[arg(long, default_value_t = DEFAULT_RATE_HZ, value_parser = positive_f64)]
    rate: f64,
}

impl EncodingArgs {
    fn config(&self, pool_factor: usize) -> EncodingConfig {
        EncodingConfig {
            method: self.method,
            bins: self.bins,
            target_len: self.length,
            target_hz: self.rate,
            pool_factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassifierKind {
    Centroid,
    Logistic,
}

#[derive(Debug, Args)]
struct ClassifierArgs {
    #[arg(long, value_enum, default_value_t = ClassifierKind::Logistic)]
    classifier: ClassifierKind,
    /// Average-pooling factor applied to each image before classification.
    #[arg(long, default_value_t = DEFAULT_POOL_FACTOR, value_parser = clap::value_parser!(u32).range(1..).map(|v| v as usize))]
    pool_factor: usize,
    /// Softmax temperature of the centroid classifier.
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE, value_parser = positive_f64)]
    temperature: f64,
    #[arg(long, default_value_t = LogisticConfig::default().step_size, value_parser = positive_f64)]
    step_size: f64,
    #[arg(long, default_value_t = LogisticConfig::default().l2, value_parser = non_negative_f64)]
    l2: f64,
    #[arg(long, default_value_t = LogisticConfig::default().max_epochs)]
    max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    #[arg(long, default_value_t = LogisticConfig::default().patience)]
    patience: usize,
    /// Standard deviation of the initial weights (0 starts from zero).
    #[arg(long, default_value_t = LogisticConfig::default().init_scale, value_parser = non_negative_f64)]
    init_scale: f64,
    /// Seed for the initial weights.
    #[arg(long, default_value_t = LogisticConfig::default().seed)]
    init_seed: u64,
}

impl ClassifierArgs {
    fn config(&self) -> ClassifierConfig {
        match self.classifier {
            ClassifierKind::Centroid => ClassifierConfig::Centroid {
                temperature: self.temperature,
            },
            ClassifierKind::Logistic => ClassifierConfig::Logistic(LogisticConfig {
                step_size: self.step_size,
                l2: self.l2,
                max_epochs: self.max_epochs,
                patience: self.patience,
                seed: self.init_seed,
                init_scale: self.init_scale,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Loso,
    Fixed,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Loso => "loso",
            Mode::Fixed => "fixed",
        }
    }
}

#[derive(Debug, Args)]
struct SplitOptions {
    #[arg(long, value_enum, default_value_t = Mode::Loso)]
    mode: Mode,
    /// Subjects used for training and validation in fixed mode.
    #[arg(long, default_value_t = 40)]
    train_subjects: usize,
    /// Share of training subjects held out for early stopping.
    #[arg(long, default_value_t = 0.2, value_parser = fraction)]
    val_fraction: f64,
    /// Seed for subject shuffles.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    encoding: EncodingArgs,
    /// Only encode these subjects (repeatable).
    #[arg(long = "subject")]
    subjects: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SplitArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    split: SplitOptions,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    split: SplitOptions,
    #[command(flatten)]
    encoding: EncodingArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
    /// Worker threads for featurization and folds (0 = all logical CPUs).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Chance-level control: shuffle training labels before fitting.
    #[arg(long)]
    permute_labels: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ExportPngArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    subject: String,
    #[arg(long)]
    letter: airwrite::Letter,
    #[arg(long, default_value_t = 1)]
    rep: u32,
    #[command(flatten)]
    encoding: EncodingArgs,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    match panic::catch_unwind(|| commands::run(cli.command)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { EXIT_DATA } else { EXIT_INTERNAL })
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}

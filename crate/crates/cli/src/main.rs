use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use emoglass::classify::ClassifierKind;
use emoglass::fusion::{Mode, Task};

mod commands;
mod config;

use config::RunConfig;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_TRAINING: u8 = 4;

/// Emotion recognition from skin conductance, pulse and partial-face frames.
#[derive(Debug, Parser)]
#[command(name = "emoglass", version)]
struct Cli {
    /// Seed for synthesis, fold assignment and model fitting.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML file with top-level `seed`, `verbosity`, `output_dir` and `[synth]`/`[pipeline]` tables.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory that receives the outputs.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Progress on stderr; repeat for more.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a labelled synthetic session with ground truth.
    Synth(SynthArgs),
    /// Write per-window physiological features and a window index.
    Extract(ExtractArgs),
    /// Train on a whole session and save the system.
    Train(TrainArgs),
    /// Trial-level stratified cross-validation.
    Xval(XvalArgs),
    /// Label every window of a session with a saved system.
    Predict(PredictArgs),
    /// Summarize a session directory or a saved system.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of trials, a multiple of 4.
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, value_name = "SECONDS")]
    pub trial_s: Option<f64>,
    #[arg(long, value_name = "HZ")]
    pub physio_rate: Option<f64>,
    #[arg(long, value_name = "HZ")]
    pub frame_rate: Option<f64>,
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Template-to-noise ratio of the face frames; 0 makes them uninformative.
    #[arg(long)]
    pub facial_snr: Option<f64>,
    #[arg(long)]
    pub physio_snr: Option<f64>,
    /// Give every quadrant the same physiological profile.
    #[arg(long)]
    pub uninformative_physio: bool,
}

#[derive(Debug, Args)]
pub struct WindowArgs {
    /// Observation window length.
    #[arg(long, value_name = "SECONDS")]
    pub obs: Option<f64>,
    /// Offset between consecutive windows.
    #[arg(long, value_name = "SECONDS")]
    pub stride: Option<f64>,
    /// Windows per trial.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long, value_name = "HZ")]
    pub scsr_cutoff: Option<f64>,
    #[arg(long, value_name = "HZ")]
    pub scvsr_cutoff: Option<f64>,
    /// Butterworth order of both skin-conductance filters.
    #[arg(long)]
    pub filter_order: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub windows: WindowArgs,
    /// facial-only, physio-only, decision-vote or feature-fusion.
    #[arg(long)]
    pub mode: Option<Mode>,
    /// quadrant, arousal or valence.
    #[arg(long)]
    pub task: Option<Task>,
    /// Classifier of single-channel systems: qda, gmm or knn.
    #[arg(long)]
    pub classifier: Option<ClassifierKind>,
    /// Classifier on the fused features.
    #[arg(long)]
    pub fusion_classifier: Option<ClassifierKind>,
    #[arg(long)]
    pub knn_k: Option<usize>,
    #[arg(long)]
    pub gmm_components: Option<usize>,
    #[arg(long)]
    pub relieff_k: Option<usize>,
    #[arg(long)]
    pub relieff_threshold: Option<f64>,
    /// Energy fraction kept by both PCA stages.
    #[arg(long)]
    pub pca_energy: Option<f64>,
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Session directory or manifest file.
    pub dataset: PathBuf,
    #[command(flatten)]
    pub windows: WindowArgs,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub dataset: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Where to save the system; defaults to `model.sys` in the output directory.
    #[arg(long, value_name = "PATH")]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct XvalArgs {
    pub dataset: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    pub dataset: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
    /// Override the saved fusion mode.
    #[arg(long)]
    pub mode: Option<Mode>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    /// Session directory, manifest or saved system.
    pub path: PathBuf,
}

/// A terminal error with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: format!("configuration error: {message}"),
        }
    }

    pub fn io(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_IO,
            message: format!("I/O error: {message}"),
        }
    }

    /// Names the failing stage when the library reports one.
    pub fn training(err: emoglass::Error) -> Self {
        let message = match err.stage() {
            Some(stage) => format!("training failed in stage `{stage}`: {err}"),
            None => format!("training failed: {err}"),
        };
        Self {
            code: EXIT_TRAINING,
            message,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("emoglass: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let cfg = RunConfig::load(cli.config.as_deref())?.resolve(cli.seed, cli.out, cli.verbose);
    match cli.command {
        Command::Synth(a) => commands::synth(cfg, &a),
        Command::Extract(a) => commands::extract(cfg, &a),
        Command::Train(a) => commands::train(cfg, &a),
        Command::Xval(a) => commands::xval(cfg, &a),
        Command::Predict(a) => commands::predict(cfg, &a),
        Command::Inspect(a) => commands::inspect(&a),
    }
}

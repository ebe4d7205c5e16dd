//! `pancap`: evaluation, statistics, mark rendering and annotation for panoptic captioning data.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 unreadable or malformed input,
//! 3 consistency error, 4 endpoint error.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::ToolkitConfig;
use exit::Failure;

#[derive(Parser, Debug)]
#[command(
    name = "pancap",
    version,
    about = "Panoptic segmentation-captioning toolkit"
)]
pub struct Cli {
    /// TOML file with defaults; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for parallel stages.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Score predictions: dual-threshold mAP, m@kIoU and PQ.
    Eval(EvalArgs),
    /// Segmentation-only Panoptic Quality.
    Pq(PqArgs),
    /// Corpus statistics and plot data.
    Stats(StatsArgs),
    /// Draw numbered segment marks on an image.
    SomRender(SomArgs),
    /// Caption a dataset through a multimodal endpoint.
    Annotate(AnnotateArgs),
    /// Parse an endpoint reply and optionally check it against an overlay.
    Parse(ParseArgs),
    /// Check a dataset or a prediction file.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct GtArgs {
    /// Ground-truth directory.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Index file; defaults to `<gt>/index.json`.
    #[arg(long)]
    pub gt_index: Option<PathBuf>,
    /// Log area disagreements instead of failing.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Averaging {
    Pooled,
    PerCategory,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub gt: GtArgs,
    /// Predictions JSON.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Report path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Threshold grid; only `default` is named, use the threshold flags to override.
    #[arg(long, default_value = "default")]
    pub grid: String,
    #[arg(long, value_delimiter = ',')]
    pub iou_thresholds: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub meteor_thresholds: Option<Vec<f64>>,
    /// IoU threshold for m@kIoU.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long, value_enum)]
    pub pq_averaging: Option<Averaging>,
    /// Precomputed caption scores, `name=path.csv` with columns image,prediction,score.
    #[arg(long)]
    pub external_scores: Option<String>,
    /// Also print a percentage table.
    #[arg(long)]
    pub table: bool,
}

#[derive(Args, Debug)]
pub struct PqArgs {
    #[command(flatten)]
    pub gt: GtArgs,
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub averaging: Option<Averaging>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Dataset directory.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Index file; defaults to `<dataset>/index.json`.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Output directory for CSV files and `report.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Lexicon overrides, `word<TAB>TAG[|TAG]` per line.
    #[arg(long)]
    pub tagger: Option<PathBuf>,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub bin_width: Option<f64>,
}

#[derive(Args, Debug)]
pub struct SomArgs {
    /// Photograph to draw on.
    #[arg(long)]
    pub image: PathBuf,
    /// Id-encoded PNG.
    #[arg(long)]
    pub panoptic: PathBuf,
    /// Index holding the segment table.
    #[arg(long)]
    pub index: PathBuf,
    /// Image id in the index; found by PNG file name when absent.
    #[arg(long)]
    pub image_id: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Overlay metadata JSON.
    #[arg(long)]
    pub overlay: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub palette_offset: usize,
    #[arg(long)]
    pub scale: Option<u32>,
}

#[derive(Args, Debug)]
pub struct AnnotateArgs {
    /// Photograph directory.
    #[arg(long)]
    pub images: PathBuf,
    /// Ground-truth directory with id PNGs.
    #[arg(long)]
    pub panoptic: PathBuf,
    /// Index file; defaults to `<panoptic>/index.json`.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Directory of `*.txt` prompt templates; the bundled pair when absent.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Serve replies from a recorded log instead of the endpoint.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Endpoint TOML (base_url, model, api_key_env, timeout_secs, max_tokens, min_interval_ms).
    #[arg(long)]
    pub endpoint: Option<PathBuf>,
    /// Rephrase endpoint TOML, optionally with a `prompt` containing `<caption>`.
    #[arg(long)]
    pub rephrase_endpoint: Option<PathBuf>,
    /// Category synonym groups, comma-separated phrases per line.
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
    /// Concurrent endpoint calls.
    #[arg(long)]
    pub concurrency: Option<usize>,
    /// Maximum requests sent to the endpoint in this run.
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Args, Debug)]
pub struct ParseArgs {
    /// Reply text; stdin when absent or `-`.
    pub input: Option<PathBuf>,
    /// Overlay JSON from `som-render`; enables the hard-match check.
    #[arg(long, requires = "index")]
    pub overlay: Option<PathBuf>,
    /// Index supplying category names for the overlay.
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[arg(long)]
    pub synonyms: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Dataset directory to check.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Index file; defaults to `<dataset>/index.json`.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Prediction file to check.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Ground truth for prediction checks.
    #[arg(long)]
    pub gt: Option<PathBuf>,
}

fn run(cli: Cli, argv: &[String]) -> Result<(), Failure> {
    let config = ToolkitConfig::load(cli.config.as_deref())?;
    if let Some(jobs) = cli.jobs.or(config.jobs) {
        if jobs == 0 {
            return Err(Failure::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    let ctx = commands::Context {
        config,
        argv: argv.to_vec(),
        started: chrono::Utc::now(),
    };
    match cli.command {
        Command::Eval(a) => commands::eval(&ctx, a),
        Command::Pq(a) => commands::pq(&ctx, a),
        Command::Stats(a) => commands::stats(&ctx, a),
        Command::SomRender(a) => commands::som_render(&ctx, a),
        Command::Annotate(a) => commands::annotate(&ctx, a),
        Command::Parse(a) => commands::parse(&ctx, a),
        Command::Validate(a) => commands::validate(&ctx, a),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(exit::USAGE),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

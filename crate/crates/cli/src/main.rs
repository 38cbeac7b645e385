//! `dhqi`: characterize, render, distort, fit-niqe, score and benchmark.
//!
//! Exit status: 0 success, 1 usage error, 2 some batch items failed,
//! 3 fatal error.

mod commands;
mod embedder;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use embedder::EmbedderSpec;

#[derive(Debug, Parser)]
#[command(name = "dhqi", version, about = "Perceptual quality index for textured 3D digital humans")]
struct Cli {
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Geometry information and colorfulness of reference meshes, as CSV.
    Characterize(CharacterizeArgs),
    /// Write the six axis projections of a mesh as PNG.
    Render(RenderArgs),
    /// Generate a distorted corpus and its manifest.
    Distort(DistortArgs),
    /// Fit a pristine NIQE model on a folder of natural images.
    FitNiqe(FitNiqeArgs),
    /// Score meshes; prints one JSON report per mesh.
    Score(ScoreArgs),
    /// Grouped k-fold evaluation against MOS.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
struct CharacterizeArgs {
    /// OBJ files or directories containing them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderOptions {
    /// Square render canvas in pixels.
    #[arg(long, default_value_t = 1080)]
    canvas: u32,
    /// Letterbox and downsample every view to this square size.
    #[arg(long)]
    downsample: Option<u32>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    mesh: PathBuf,
    /// Directory receiving the PNGs and a views JSON.
    #[arg(long, alias = "out")]
    out_dir: PathBuf,
    #[command(flatten)]
    render: RenderOptions,
}

#[derive(Debug, Args)]
struct DistortArgs {
    /// Reference OBJ files or directories containing them.
    #[arg(long, required = true, num_args = 1..)]
    sources: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: u64,
    /// Comma-separated subset of GN,CN,FS,PC,UMC,TD,TC.
    #[arg(long, value_delimiter = ',')]
    kinds: Option<Vec<String>>,
    /// Comma-separated subset of 1,2,3,4.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<u8>>,
    /// Geometry-noise units: axis-extent or absolute.
    #[arg(long, default_value = "axis-extent")]
    units: String,
}

#[derive(Debug, Args)]
struct FitNiqeArgs {
    /// Directory of pristine PNG/JPEG images.
    #[arg(long, required_unless_present = "inputs")]
    corpus: Option<PathBuf>,
    /// Further image files or directories.
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ScoringOptions {
    /// none, mock[:seed], model:<dir> or http:<url>. Falls back to the
    /// DHQI_EMBEDDER_URL environment variable, then none.
    #[arg(long)]
    embedder: Option<EmbedderSpec>,
    /// Pristine NIQE model; the bundled model when omitted.
    #[arg(long)]
    niqe_model: Option<PathBuf>,
    /// Prompt pairs, one `positive|negative` per line.
    #[arg(long)]
    prompts: Option<PathBuf>,
    /// Prompt subject: body or face.
    #[arg(long, default_value = "body")]
    subject: String,
    /// Naturalness scale constant.
    #[arg(long, default_value_t = 100.0)]
    c1: f64,
    #[command(flatten)]
    render: RenderOptions,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(required = true)]
    meshes: Vec<PathBuf>,
    #[command(flatten)]
    scoring: ScoringOptions,
    /// Write reports here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// Corpus manifest (JSON lines).
    #[arg(long)]
    manifest: PathBuf,
    /// zeroshot or svr.
    #[arg(long, default_value = "zeroshot")]
    mode: String,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long)]
    seed: u64,
    /// `item_id,mos` CSV overriding manifest MOS values.
    #[arg(long, conflicts_with = "ratings")]
    mos: Option<PathBuf>,
    /// Raw `subject_id,item_id,rating` CSV turned into MOS.
    #[arg(long)]
    ratings: Option<PathBuf>,
    /// Drop raters whose SRCC with the panel mean falls below this.
    #[arg(long, requires = "ratings")]
    screen: Option<f64>,
    #[arg(long, default_value_t = 100.0)]
    svr_c: f64,
    #[arg(long, default_value_t = 0.1)]
    svr_epsilon: f64,
    /// Defaults to 1 / feature dimension.
    #[arg(long)]
    svr_gamma: Option<f64>,
    #[command(flatten)]
    scoring: ScoringOptions,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write every per-item quality report here as JSON lines.
    #[arg(long)]
    scores_out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    match commands::run(cli.command) {
        Ok(commands::Outcome::Complete) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Partial) => ExitCode::from(2),
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(commands::Failure::Fatal(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

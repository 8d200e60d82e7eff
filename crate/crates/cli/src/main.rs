use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sscag::filter::{DEFAULT_GAMMA0, DEFAULT_SCALES};
use sscag::io::RawSample;
use sscag::pipeline::{DEFAULT_NEIGHBORS, DEFAULT_RESTARTS};
use sscag::{CandidateMode, SceneSpec, SscagParams};
use sscag_cli::bench::{self, BenchConfig};
use sscag_cli::commands::{cmd_cluster, cmd_convert, cmd_eval, cmd_synth, format_evaluation, RunConfig};
use sscag_cli::error::EXIT_USAGE;
use sscag_cli::{CliError, Result};

/// Spatial-spectral anchor-graph clustering of hyperspectral cubes.
#[derive(Debug, Parser)]
#[command(name = "sscag", version)]
struct Cli {
    /// Worker thread cap (defaults to all cores).
    #[arg(long, global = true, env = "SSCAG_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Cluster a cube and write labels.csv, map.ppm and run.csv.
    Cluster(ClusterArgs),
    /// Write a synthetic block scene (cube.hsic, gt.pgm).
    Synth(SynthArgs),
    /// Score a label file against ground truth.
    Eval(EvalArgs),
    /// Time every stage over a ladder of scene sizes.
    Bench(BenchArgs),
    /// Convert a headerless band-interleaved-by-pixel file to HSIC.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
struct ClusterArgs {
    /// Input cube (HSIC).
    input: PathBuf,
    /// Ground truth (CSV or PGM) for scoring and map masking.
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Number of clusters c.
    #[arg(long)]
    clusters: usize,
    /// Number of anchors m.
    #[arg(long)]
    anchors: usize,
    /// Neighbors per pixel k.
    #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
    neighbors: usize,
    /// Weight of the neighbor-mean term in the anchor cost.
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_GAMMA0)]
    gamma0: f64,
    /// Filter window sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SCALES)]
    scales: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
    /// Neighbor candidate window side; 0 searches all pixels.
    #[arg(long, default_value_t = 0)]
    window: usize,
    /// Scale embedding rows to unit length before k-means.
    #[arg(long)]
    normalize_rows: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    height: usize,
    #[arg(long)]
    width: usize,
    #[arg(long)]
    bands: usize,
    #[arg(long)]
    classes: usize,
    /// Spectral offset between classes.
    #[arg(long, default_value_t = 0.5)]
    separation: f64,
    /// Standard deviation of the additive Gaussian noise.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Fraction of pixels left unlabeled.
    #[arg(long, default_value_t = 0.0)]
    background: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Label CSV (`pixel_index,label`).
    labels: PathBuf,
    /// Ground truth (CSV or PGM).
    gt: PathBuf,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Pixel counts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [4096usize, 8192, 16384])]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 8)]
    bands: usize,
    #[arg(long, default_value_t = 64)]
    anchors: usize,
    #[arg(long, default_value_t = DEFAULT_NEIGHBORS)]
    neighbors: usize,
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    /// Filter and patch window.
    #[arg(long, default_value_t = 3)]
    window: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Minimum accumulated seconds per quick stage.
    #[arg(long, default_value_t = 0.25)]
    min_time: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SampleArg {
    U8,
    U16le,
    I16le,
    F32le,
    F64le,
}

impl From<SampleArg> for RawSample {
    fn from(s: SampleArg) -> Self {
        match s {
            SampleArg::U8 => RawSample::U8,
            SampleArg::U16le => RawSample::U16Le,
            SampleArg::I16le => RawSample::I16Le,
            SampleArg::F32le => RawSample::F32Le,
            SampleArg::F64le => RawSample::F64Le,
        }
    }
}

#[derive(Debug, Args)]
struct ConvertArgs {
    input: PathBuf,
    #[arg(long)]
    height: usize,
    #[arg(long)]
    width: usize,
    #[arg(long)]
    bands: usize,
    #[arg(long, value_enum, default_value_t = SampleArg::F32le)]
    sample: SampleArg,
    #[arg(long)]
    out: PathBuf,
}

fn cluster(args: ClusterArgs) -> Result<()> {
    let params = SscagParams {
        neighbors: args.neighbors,
        gamma0: args.gamma0,
        scales: args.scales,
        seed: args.seed,
        restarts: args.restarts,
        candidates: match args.window {
            0 => CandidateMode::Exact,
            side => CandidateMode::Window(side),
        },
        normalize_rows: args.normalize_rows,
        ..SscagParams::new(args.clusters, args.anchors, args.alpha)
    };
    let config = RunConfig {
        input: args.input,
        ground_truth: args.gt,
        params,
        out_dir: args.out,
    };
    let result = cmd_cluster(&config)?;
    if let Some(eval) = &result.evaluation {
        print!("{}", format_evaluation(eval));
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec = SceneSpec {
        separation: args.separation,
        noise: args.noise,
        background_fraction: args.background,
        ..SceneSpec::blocks(args.height, args.width, args.bands, args.classes)
    };
    let (cube, gt) = cmd_synth(&spec, args.seed, &args.out)?;
    println!("{}", cube.display());
    println!("{}", gt.display());
    Ok(())
}

fn run_bench(args: BenchArgs) -> Result<()> {
    if !(args.min_time.is_finite() && args.min_time >= 0.0) {
        return Err(CliError::Usage("--min-time must be a non-negative number".into()));
    }
    let config = BenchConfig {
        sizes: args.sizes,
        bands: args.bands,
        classes: args.clusters,
        anchors: args.anchors,
        neighbors: args.neighbors,
        alpha: args.alpha,
        window: args.window,
        seed: args.seed,
        min_time: Duration::from_secs_f64(args.min_time),
        ..BenchConfig::default()
    };
    if config.sizes.len() < 2 {
        return Err(CliError::Usage("--sizes needs at least two entries".into()));
    }
    print!("{}", bench::run(&config)?.table());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Cluster(args) => cluster(args),
        Command::Synth(args) => synth(args),
        Command::Eval(args) => {
            print!("{}", format_evaluation(&cmd_eval(&args.labels, &args.gt)?));
            Ok(())
        }
        Command::Bench(args) => run_bench(args),
        Command::Convert(args) => cmd_convert(
            &args.input,
            (args.height, args.width, args.bands),
            args.sample.into(),
            &args.out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let message: Vec<&str> = text
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect();
            let message = message.join(" ");
            eprintln!("error: usage: {}", message.trim_start_matches("error: "));
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shapeload::curve::PlotFormat;
use shapeload::MetricConfig;

mod commands;
mod error;
mod io;

use error::CliError;

/// Measure the visual complexity of GAM shape plots and predict the
/// cognitive load they impose.
#[derive(Debug, Parser)]
#[command(name = "shapeload", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute the five metrics for every plot in a pool.
    Analyze(AnalyzeArgs),
    /// Append predicted cognitive load to the metric table.
    Predict(PredictArgs),
    /// Fit metric-based models to ratings.
    Fit(FitArgs),
    /// Validate score sources against rankings and binary choices.
    Evaluate(EvaluateArgs),
    /// Pick plots at equal intervals, or build study sets from a design.
    Select(SelectArgs),
    /// Generate a synthetic plot pool.
    Generate(GenerateArgs),
    /// Render one plot as an annotated SVG.
    Render(RenderArgs),
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Plot pool (JSON or `plot_id,x,y` CSV) or metric table CSV.
    #[arg(long)]
    input: PathBuf,
    /// Output file; `-` or omitted writes to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Input format; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<PlotFormat>,
}

#[derive(Debug, Args)]
struct MetricArgs {
    /// Chunk significance threshold on the normalized y-range.
    #[arg(long, default_value_t = MetricConfig::default().chunk_threshold_eps)]
    eps: f64,
    /// RMSE tolerance for the polynomial-degree metric.
    #[arg(long, default_value_t = MetricConfig::default().poly_tolerance_tau)]
    tau: f64,
    #[arg(long = "max-degree", default_value_t = MetricConfig::default().poly_max_degree)]
    max_degree: usize,
}

impl MetricArgs {
    fn config(&self) -> MetricConfig {
        MetricConfig {
            chunk_threshold_eps: self.eps,
            poly_tolerance_tau: self.tau,
            poly_max_degree: self.max_degree,
        }
    }
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    io: InputArgs,
    #[command(flatten)]
    metrics: MetricArgs,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    io: InputArgs,
    #[command(flatten)]
    metrics: MetricArgs,
    /// Model JSON path, or `default` for the built-in number-of-kinks model.
    #[arg(long, default_value = "default")]
    model: String,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    io: InputArgs,
    #[command(flatten)]
    metrics: MetricArgs,
    /// Ratings CSV (`plot_id,participant_id,rating`).
    #[arg(long, conflicts_with = "means", required_unless_present = "means")]
    ratings: Option<PathBuf>,
    /// Pre-aggregated ratings CSV (`plot_id,mean_rating`).
    #[arg(long)]
    means: Option<PathBuf>,
    /// Metric to regress on, or `all`.
    #[arg(long, default_value = "num_kinks")]
    metric: String,
    /// Regress on ln(1 + metric) (default).
    #[arg(long, overrides_with = "no_log")]
    log: bool,
    /// Regress on the raw metric.
    #[arg(long = "no-log", overrides_with = "log")]
    no_log: bool,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    io: InputArgs,
    #[command(flatten)]
    metrics: MetricArgs,
    /// Rankings JSON.
    #[arg(long)]
    rankings: PathBuf,
    /// Choices CSV (`participant_id,plot_a,plot_b,chosen`).
    #[arg(long)]
    choices: PathBuf,
    /// Ratings CSV; adds the mean-rating baseline row.
    #[arg(long)]
    ratings: Option<PathBuf>,
    /// Evaluate only this model (JSON path or `default`); otherwise every
    /// metric is evaluated.
    #[arg(long)]
    model: Option<String>,
    /// Score differences up to this value count as ties.
    #[arg(long = "tie-tol", default_value_t = 0.0)]
    tie_tol: f64,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    io: InputArgs,
    #[command(flatten)]
    metrics: MetricArgs,
    /// Metric to sort by; with --design, restricts the selection columns.
    #[arg(long)]
    metric: Option<String>,
    /// Number of plots to pick.
    #[arg(long, default_value_t = 16)]
    k: usize,
    /// Study design JSON; switches to set building and group rotation.
    #[arg(long)]
    design: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format.
    #[arg(long, default_value = "json")]
    format: PlotFormat,
    #[arg(long, default_value_t = 1120)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict to one family (spline, tree, boosted); requires --complexity.
    #[arg(long, requires = "complexity")]
    family: Option<String>,
    #[arg(long)]
    complexity: Option<f64>,
    #[arg(long, default_value_t = 120)]
    points: usize,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[command(flatten)]
    io: InputArgs,
    #[command(flatten)]
    metrics: MetricArgs,
    /// Plot id to draw; the first plot when omitted.
    #[arg(long)]
    plot: Option<String>,
    #[arg(long, default_value = "default")]
    model: String,
    #[arg(long = "no-kinks")]
    no_kinks: bool,
    #[arg(long = "no-chunks")]
    no_chunks: bool,
    #[arg(long = "no-caption")]
    no_caption: bool,
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("SHAPELOAD_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("SHAPELOAD_THREADS=`{v}` is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| match cli.command {
        Command::Analyze(a) => commands::analyze(a),
        Command::Predict(a) => commands::predict(a),
        Command::Fit(a) => commands::fit(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Select(a) => commands::select(a),
        Command::Generate(a) => commands::generate(a),
        Command::Render(a) => commands::render(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::Path;

use serde::Serialize;
use shapeload::cogload::{
    baseline_scores, evaluate as evaluate_scores, fit_model_from_means, model_scores,
    parse_choices_csv, parse_mean_ratings_csv, parse_rankings_json, parse_ratings_csv,
    EvaluationReport,
};
use shapeload::curve::{pool_to_csv, pool_to_json, prepare, PlotFormat};
use shapeload::metrics::{metric_vector, metrics_to_csv, MetricId, METRIC_CSV_HEADER};
use shapeload::report::{evaluation_table, fit_table, model_label, render_svg, SvgOptions};
use shapeload::studygen::{
    generate_plot, generate_pool, select_equal_interval, GeneratorFamily, GeneratorSpec,
    ScoreColumn, StudyAssignment, StudyDesign,
};
use shapeload::{CogLoadModel, IngestPolicy};

use crate::error::{CliError, CliResult};
use crate::io::{self, commit, Target};
use crate::{
    AnalyzeArgs, EvaluateArgs, FitArgs, GenerateArgs, PredictArgs, RenderArgs, SelectArgs,
};

fn load_model(spec: &str) -> CliResult<CogLoadModel> {
    if spec == "default" {
        return Ok(CogLoadModel::published());
    }
    Ok(CogLoadModel::from_json(&io::read(Path::new(spec))?)?)
}

fn parse_metrics_arg(spec: &str) -> CliResult<Vec<MetricId>> {
    if spec == "all" {
        Ok(MetricId::ALL.to_vec())
    } else {
        Ok(vec![spec.parse()?])
    }
}

pub fn analyze(args: AnalyzeArgs) -> CliResult<()> {
    let policy = IngestPolicy::default();
    let cfg = args.metrics.config();
    let plots = io::load_plots(&args.io.input, args.io.format, &policy)?;
    let rows = io::analyze_all(&plots, &policy, &cfg)?;
    commit(vec![(
        Target::from_option(args.io.output),
        metrics_to_csv(&rows).into_bytes(),
    )])
}

pub fn predict(args: PredictArgs) -> CliResult<()> {
    let policy = IngestPolicy::default();
    let cfg = args.metrics.config();
    let model = load_model(&args.model)?;
    let rows = io::load_metrics(&args.io.input, args.io.format, &policy, &cfg)?;

    let mut out = format!("{METRIC_CSV_HEADER},pcl_raw,pcl_clamped\n");
    for row in &rows {
        let p = model.predict_vector(row)?;
        out.push_str(&format!("{},{:?},{:?}\n", row.csv_row(), p.raw, p.clamped));
    }
    commit(vec![(
        Target::from_option(args.io.output),
        out.into_bytes(),
    )])
}

pub fn fit(args: FitArgs) -> CliResult<()> {
    let policy = IngestPolicy::default();
    let cfg = args.metrics.config();
    let rows = io::load_metrics(&args.io.input, args.io.format, &policy, &cfg)?;
    let log = !args.no_log;
    let metrics = parse_metrics_arg(&args.metric)?;

    let means = match (&args.ratings, &args.means) {
        (Some(path), _) => {
            let ratings = parse_ratings_csv(&io::read(path)?)?;
            // validates and aggregates in one place
            shapeload::cogload::mean_ratings(&ratings)?
        }
        (None, Some(path)) => parse_mean_ratings_csv(&io::read(path)?)?,
        (None, None) => {
            return Err(CliError::Usage(
                "either --ratings or --means is required".into(),
            ))
        }
    };

    let models = metrics
        .iter()
        .map(|&m| fit_model_from_means(&rows, &means, m, log))
        .collect::<Result<Vec<_>, _>>()?;

    let json = if models.len() == 1 {
        models[0].to_json()
    } else {
        serde_json::to_string_pretty(&models).expect("models serialize")
    };
    let target = Target::from_option(args.io.output);
    let table = fit_table(&models);
    if target.is_stdout() {
        eprint!("{table}");
        commit(vec![(target, format!("{json}\n").into_bytes())])
    } else {
        commit(vec![(target, format!("{json}\n").into_bytes())])?;
        print!("{table}");
        Ok(())
    }
}

#[derive(Serialize)]
struct EvaluationRow {
    model: String,
    #[serde(flatten)]
    report: EvaluationReport,
}

pub fn evaluate(args: EvaluateArgs) -> CliResult<()> {
    let policy = IngestPolicy::default();
    let cfg = args.metrics.config();
    let rows = io::load_metrics(&args.io.input, args.io.format, &policy, &cfg)?;
    let rankings = parse_rankings_json(&io::read(&args.rankings)?)?;
    let choices = parse_choices_csv(&io::read(&args.choices)?)?;

    let models: Vec<CogLoadModel> = match &args.model {
        Some(spec) => vec![load_model(spec)?],
        None => MetricId::ALL
            .iter()
            .map(|&metric| CogLoadModel {
                metric,
                log_transformed: true,
                intercept: 0.0,
                slope: 1.0,
                fit: None,
            })
            .collect(),
    };

    let mut results = Vec::new();
    for m in &models {
        let scores = model_scores(m, &rows)?;
        let label = if args.model.is_some() {
            model_label(m)
        } else {
            m.metric.label().to_owned()
        };
        results.push((
            label,
            evaluate_scores(&scores, &rankings, &choices, args.tie_tol)?,
        ));
    }
    if let Some(path) = &args.ratings {
        let baseline = baseline_scores(&parse_ratings_csv(&io::read(path)?)?)?;
        results.push((
            "Perceived CL".to_owned(),
            evaluate_scores(&baseline, &rankings, &choices, args.tie_tol)?,
        ));
    }

    let json_rows: Vec<EvaluationRow> = results
        .iter()
        .map(|(model, report)| EvaluationRow {
            model: model.clone(),
            report: *report,
        })
        .collect();
    let json = serde_json::to_string_pretty(&json_rows).expect("report serializes");
    let table = evaluation_table(&results);
    let target = Target::from_option(args.io.output);
    if target.is_stdout() {
        eprint!("{table}");
        commit(vec![(target, format!("{json}\n").into_bytes())])
    } else {
        commit(vec![(target, format!("{json}\n").into_bytes())])?;
        print!("{table}");
        Ok(())
    }
}

#[derive(Serialize)]
struct Selection {
    metric: MetricId,
    plot_ids: Vec<String>,
}

pub fn select(args: SelectArgs) -> CliResult<()> {
    let policy = IngestPolicy::default();
    let cfg = args.metrics.config();
    let rows = io::load_metrics(&args.io.input, args.io.format, &policy, &cfg)?;

    let json = if let Some(path) = &args.design {
        let design: StudyDesign =
            serde_json::from_slice(&io::read(path)?).map_err(shapeload::Error::from)?;
        let metrics = match &args.metric {
            Some(spec) => parse_metrics_arg(spec)?,
            None => MetricId::ALL.to_vec(),
        };
        let columns: Vec<ScoreColumn> = metrics
            .iter()
            .map(|&m| ScoreColumn::from_metric(&rows, m))
            .collect();
        let assignment = StudyAssignment::build(&columns, &design, args.seed)?;
        serde_json::to_string_pretty(&assignment).expect("assignment serializes")
    } else {
        let metric: MetricId = args
            .metric
            .as_deref()
            .ok_or_else(|| CliError::Usage("--metric is required without --design".into()))?
            .parse()?;
        let plot_ids = select_equal_interval(&rows, metric, args.k)?;
        serde_json::to_string_pretty(&Selection { metric, plot_ids }).expect("selection serializes")
    };
    commit(vec![(
        Target::from_option(args.io.output),
        format!("{json}\n").into_bytes(),
    )])
}

pub fn generate(args: GenerateArgs) -> CliResult<()> {
    let plots = match (&args.family, args.complexity) {
        (Some(family), Some(complexity)) => {
            let family: GeneratorFamily = family.parse()?;
            (0..args.count)
                .map(|i| {
                    let spec = GeneratorSpec {
                        family,
                        n_points: args.points,
                        complexity,
                        seed: args.seed.wrapping_add(i as u64),
                    };
                    Ok(generate_plot(&spec)?.with_id(format!("plot-{i:04}")))
                })
                .collect::<CliResult<Vec<_>>>()?
        }
        _ => generate_pool(args.count, args.seed)?,
    };
    let body = match args.format {
        PlotFormat::Json => format!("{}\n", pool_to_json(&plots)),
        PlotFormat::Csv => pool_to_csv(&plots),
    };
    commit(vec![(Target::from_option(args.output), body.into_bytes())])
}

pub fn render(args: RenderArgs) -> CliResult<()> {
    let policy = IngestPolicy::default();
    let cfg = args.metrics.config();
    cfg.validate()?;
    let plots = io::load_plots(&args.io.input, args.io.format, &policy)?;
    let plot = match &args.plot {
        Some(id) => plots.iter().find(|p| p.id() == id).ok_or_else(|| {
            CliError::Usage(format!("no plot `{id}` in {}", args.io.input.display()))
        })?,
        None => plots
            .first()
            .ok_or(CliError::Core(shapeload::Error::EmptyInput("plot pool")))?,
    };
    let curve = prepare(plot, &policy)?;
    let vector = metric_vector(&curve, &cfg)?;
    let options = SvgOptions {
        kink_markers: !args.no_kinks,
        chunk_boundaries: !args.no_chunks,
        caption: !args.no_caption,
        model: load_model(&args.model)?,
        ..SvgOptions::default()
    };
    let report = render_svg(&curve, &vector, &cfg, &options);
    log::info!(
        "{} kink markers, {} chunk boundaries",
        report.kink_markers,
        report.chunk_boundaries
    );
    commit(vec![(
        Target::from_option(args.io.output),
        report.svg.into_bytes(),
    )])
}

//! Input sniffing and all-or-nothing output commits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use shapeload::curve::{parse_pool, PlotFormat};
use shapeload::metrics::parse_metrics_csv;
use shapeload::{analyze_plot, IngestPolicy, MetricConfig, MetricVector, ShapePlot};

use crate::error::{CliError, CliResult};

pub fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

/// What an input file turned out to contain.
pub enum Loaded {
    Plots(Vec<ShapePlot>),
    Metrics(Vec<MetricVector>),
}

fn first_line(bytes: &[u8]) -> String {
    let end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .unwrap_or(bytes.len());
    String::from_utf8_lossy(&bytes[..end])
        .trim()
        .to_ascii_lowercase()
}

/// Loads a plot pool (JSON or `plot_id,x,y` CSV) or a metric table. An
/// explicit format wins; otherwise the extension and CSV header decide.
pub fn load(path: &Path, format: Option<PlotFormat>, policy: &IngestPolicy) -> CliResult<Loaded> {
    let bytes = read(path)?;
    let format = match format {
        Some(f) => f,
        None => match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => PlotFormat::Json,
            Some(ext) if ext.eq_ignore_ascii_case("csv") => PlotFormat::Csv,
            _ if bytes
                .iter()
                .find(|b| !b.is_ascii_whitespace())
                .is_some_and(|&b| b == b'[' || b == b'{') =>
            {
                PlotFormat::Json
            }
            _ => PlotFormat::Csv,
        },
    };
    match format {
        PlotFormat::Json => Ok(Loaded::Plots(parse_pool(&bytes, PlotFormat::Json, policy)?)),
        PlotFormat::Csv if first_line(&bytes).contains("graph_length") => {
            Ok(Loaded::Metrics(parse_metrics_csv(&bytes)?))
        }
        PlotFormat::Csv => Ok(Loaded::Plots(parse_pool(&bytes, PlotFormat::Csv, policy)?)),
    }
}

pub fn load_plots(
    path: &Path,
    format: Option<PlotFormat>,
    policy: &IngestPolicy,
) -> CliResult<Vec<ShapePlot>> {
    match load(path, format, policy)? {
        Loaded::Plots(p) => Ok(p),
        Loaded::Metrics(_) => Err(CliError::Usage(format!(
            "{} holds metrics, but this command needs plot points",
            path.display()
        ))),
    }
}

/// Metric vectors sorted by plot id, computing them when the input is a
/// plot pool.
pub fn load_metrics(
    path: &Path,
    format: Option<PlotFormat>,
    policy: &IngestPolicy,
    cfg: &MetricConfig,
) -> CliResult<Vec<MetricVector>> {
    let mut rows = match load(path, format, policy)? {
        Loaded::Metrics(m) => m,
        Loaded::Plots(p) => analyze_all(&p, policy, cfg)?,
    };
    rows.sort_by(|a, b| a.plot_id.cmp(&b.plot_id));
    Ok(rows)
}

pub fn analyze_all(
    plots: &[ShapePlot],
    policy: &IngestPolicy,
    cfg: &MetricConfig,
) -> CliResult<Vec<MetricVector>> {
    cfg.validate()?;
    let mut rows = plots
        .par_iter()
        .map(|p| analyze_plot(p, policy, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| a.plot_id.cmp(&b.plot_id));
    Ok(rows)
}

/// Where a command's result goes.
pub enum Target {
    Stdout,
    File(PathBuf),
}

impl Target {
    pub fn from_option(path: Option<PathBuf>) -> Self {
        match path {
            Some(p) if p.as_os_str() != "-" => Target::File(p),
            _ => Target::Stdout,
        }
    }

    pub fn is_stdout(&self) -> bool {
        matches!(self, Target::Stdout)
    }
}

/// Writes every output or none of them: each file is staged in a temporary
/// sibling and only renamed into place once all staging succeeded.
pub fn commit(outputs: Vec<(Target, Vec<u8>)>) -> CliResult<()> {
    let mut staged = Vec::new();
    let mut stdout = Vec::new();
    for (target, bytes) in outputs {
        match target {
            Target::Stdout => stdout.push(bytes),
            Target::File(path) => {
                let dir = path
                    .parent()
                    .filter(|d| !d.as_os_str().is_empty())
                    .unwrap_or_else(|| Path::new("."));
                let mut tmp =
                    tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(&path, e))?;
                tmp.write_all(&bytes).map_err(|e| CliError::io(&path, e))?;
                staged.push((tmp, path));
            }
        }
    }

    let mut done: Vec<PathBuf> = Vec::new();
    for (tmp, path) in staged {
        if let Err(e) = tmp.persist(&path) {
            for p in &done {
                let _ = fs::remove_file(p);
            }
            return Err(CliError::io(&path, e.error));
        }
        done.push(path);
    }

    let mut out = std::io::stdout().lock();
    for bytes in stdout {
        out.write_all(&bytes)
            .map_err(|e| CliError::io("<stdout>", e))?;
    }
    Ok(())
}

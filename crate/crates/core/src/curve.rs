//! Shape-plot ingestion, validation and normalization.
//!
//! A [`ShapePlot`] is the sampled curve of one feature's shape function as it
//! arrives from a file. Every metric operates on a [`NormalizedCurve`]: the
//! same points affinely mapped onto the unit square, then passed through
//! [`canonicalize`] so that floating-point jitter on step plots does not
//! fabricate extrema.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single sample of a curve. Serialized as a two-element array `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(f64, f64)", into = "(f64, f64)")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

impl From<Point> for (f64, f64) {
    fn from(p: Point) -> Self {
        (p.x, p.y)
    }
}

/// The model family a plot was produced by, when known.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFamily {
    Spline,
    Tree,
    Boosted,
    External,
}

impl SourceFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            SourceFamily::Spline => "spline",
            SourceFamily::Tree => "tree",
            SourceFamily::Boosted => "boosted",
            SourceFamily::External => "external",
        }
    }
}

impl fmt::Display for SourceFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SourceFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spline" => Ok(SourceFamily::Spline),
            "tree" => Ok(SourceFamily::Tree),
            "boosted" => Ok(SourceFamily::Boosted),
            "external" => Ok(SourceFamily::External),
            other => Err(Error::MalformedInput(format!("unknown family `{other}`"))),
        }
    }
}

/// What to do with several samples that share one x-coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuplicateX {
    /// Collapse the samples into one point at the mean y.
    #[default]
    MergeMean,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IngestPolicy {
    pub duplicate_x: DuplicateX,
    /// Consecutive normalized y-values closer than this to the start of their
    /// run are snapped to it by [`canonicalize`].
    pub flat_tolerance: f64,
}

impl Default for IngestPolicy {
    fn default() -> Self {
        Self {
            duplicate_x: DuplicateX::MergeMean,
            flat_tolerance: 1e-9,
        }
    }
}

impl IngestPolicy {
    pub fn strict() -> Self {
        Self {
            duplicate_x: DuplicateX::Reject,
            ..Self::default()
        }
    }
}

/// A validated plot: finite points, sorted by strictly increasing x, at
/// least two of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapePlot {
    id: String,
    points: Vec<Point>,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<SourceFamily>,
}

impl ShapePlot {
    /// Validates and sorts `points`. Samples sharing an x are merged or
    /// rejected according to `policy`.
    pub fn new(
        id: impl Into<String>,
        points: Vec<Point>,
        family: Option<SourceFamily>,
        policy: &IngestPolicy,
    ) -> Result<Self> {
        let id = id.into();
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteValue { id });
        }
        if points.len() < 2 {
            return Err(Error::TooFewPoints {
                count: points.len(),
                id,
            });
        }

        let mut points = points;
        points.sort_by(|a, b| a.x.total_cmp(&b.x));

        let mut merged: Vec<Point> = Vec::with_capacity(points.len());
        let mut run_start = 0;
        while run_start < points.len() {
            let x = points[run_start].x;
            let mut run_end = run_start + 1;
            while run_end < points.len() && points[run_end].x == x {
                run_end += 1;
            }
            let run = &points[run_start..run_end];
            if run.len() > 1 && policy.duplicate_x == DuplicateX::Reject {
                return Err(Error::DuplicateX { id, x });
            }
            let mean_y = run.iter().map(|p| p.y).sum::<f64>() / run.len() as f64;
            merged.push(Point::new(x, mean_y));
            run_start = run_end;
        }

        if merged.len() < 2 {
            return Err(Error::TooFewPoints {
                count: merged.len(),
                id,
            });
        }

        Ok(Self {
            id,
            points: merged,
            family,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn family(&self) -> Option<SourceFamily> {
        self.family
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }
}

/// A plot mapped onto the unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedCurve {
    pub plot_id: String,
    pub points: Vec<Point>,
    /// The source plot had zero y-range; every y is then 0.5.
    pub y_degenerate: bool,
}

impl NormalizedCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.y)
    }

    /// Re-reads the normalized points as an ordinary plot.
    pub fn to_plot(&self, policy: &IngestPolicy) -> Result<ShapePlot> {
        ShapePlot::new(self.plot_id.clone(), self.points.clone(), None, policy)
    }
}

/// Maps the plot's x-range and y-range onto `[0, 1]` independently.
pub fn normalize(plot: &ShapePlot) -> Result<NormalizedCurve> {
    let pts = plot.points();
    let min_x = pts[0].x;
    let max_x = pts[pts.len() - 1].x;
    let x_range = max_x - min_x;
    if !x_range.is_finite() || x_range <= 0.0 {
        return Err(Error::ZeroXRange {
            id: plot.id().to_owned(),
        });
    }

    let (min_y, max_y) = pts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.y), hi.max(p.y))
        });
    let y_range = max_y - min_y;
    let y_degenerate = y_range == 0.0;

    let points = pts
        .iter()
        .map(|p| {
            let x = (p.x - min_x) / x_range;
            let y = if y_degenerate {
                0.5
            } else {
                (p.y - min_y) / y_range
            };
            Point::new(x, y)
        })
        .collect();

    Ok(NormalizedCurve {
        plot_id: plot.id().to_owned(),
        points,
        y_degenerate,
    })
}

/// Removes consecutive identical points and snaps near-flat runs.
///
/// A run starts at some y and extends over the following points whose y lies
/// within `flat_tolerance` of that starting value; every member of the run is
/// set to the starting value. The result is idempotent under a second pass.
pub fn canonicalize(curve: &NormalizedCurve, policy: &IngestPolicy) -> NormalizedCurve {
    let tol = policy.flat_tolerance.max(0.0);
    let mut points: Vec<Point> = Vec::with_capacity(curve.points.len());
    let mut run_y: Option<f64> = None;

    for p in &curve.points {
        let y = match run_y {
            Some(r) if (p.y - r).abs() <= tol => r,
            _ => {
                run_y = Some(p.y);
                p.y
            }
        };
        let snapped = Point::new(p.x, y);
        if points.last() != Some(&snapped) {
            points.push(snapped);
        }
    }

    NormalizedCurve {
        plot_id: curve.plot_id.clone(),
        points,
        y_degenerate: curve.y_degenerate,
    }
}

/// [`normalize`] followed by [`canonicalize`]: the form every metric expects.
pub fn prepare(plot: &ShapePlot, policy: &IngestPolicy) -> Result<NormalizedCurve> {
    Ok(canonicalize(&normalize(plot)?, policy))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFormat {
    Json,
    Csv,
}

impl FromStr for PlotFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(PlotFormat::Json),
            "csv" => Ok(PlotFormat::Csv),
            other => Err(Error::MalformedInput(format!("unknown format `{other}`"))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlot {
    id: String,
    points: Vec<(f64, f64)>,
    #[serde(default)]
    family: Option<SourceFamily>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawPool {
    Many(Vec<RawPlot>),
    One(RawPlot),
}

#[derive(Deserialize)]
struct CsvPointRow {
    plot_id: String,
    x: f64,
    y: f64,
}

fn raw_to_plot(raw: RawPlot, policy: &IngestPolicy) -> Result<ShapePlot> {
    let points = raw.points.into_iter().map(Point::from).collect();
    ShapePlot::new(raw.id, points, raw.family, policy)
}

/// Parses a single plot. A CSV input must contain exactly one `plot_id`.
pub fn parse_plot(bytes: &[u8], format: PlotFormat, policy: &IngestPolicy) -> Result<ShapePlot> {
    match format {
        PlotFormat::Json => {
            let raw: RawPlot = serde_json::from_slice(bytes)?;
            raw_to_plot(raw, policy)
        }
        PlotFormat::Csv => {
            let mut plots = parse_pool(bytes, PlotFormat::Csv, policy)?;
            match plots.len() {
                1 => Ok(plots.remove(0)),
                0 => Err(Error::EmptyInput("plot csv")),
                n => Err(Error::MalformedInput(format!(
                    "expected one plot, found {n} plot ids"
                ))),
            }
        }
    }
}

/// Parses a pool: a JSON array of plot objects (a lone object is accepted),
/// or a `plot_id,x,y` CSV. Plot order follows first appearance; ids must be
/// unique.
pub fn parse_pool(
    bytes: &[u8],
    format: PlotFormat,
    policy: &IngestPolicy,
) -> Result<Vec<ShapePlot>> {
    let plots = match format {
        PlotFormat::Json => {
            let raws = match serde_json::from_slice::<RawPool>(bytes) {
                Ok(RawPool::Many(v)) => v,
                Ok(RawPool::One(p)) => vec![p],
                // untagged enums swallow the useful message; re-parse for it
                Err(_) => serde_json::from_slice::<Vec<RawPlot>>(bytes)?,
            };
            raws.into_iter()
                .map(|raw| raw_to_plot(raw, policy))
                .collect::<Result<Vec<_>>>()?
        }
        PlotFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_reader(bytes);
            let mut order: Vec<String> = Vec::new();
            let mut grouped: HashMap<String, Vec<Point>> = HashMap::new();
            for row in reader.deserialize::<CsvPointRow>() {
                let row = row?;
                let entry = grouped.entry(row.plot_id.clone()).or_insert_with(|| {
                    order.push(row.plot_id.clone());
                    Vec::new()
                });
                entry.push(Point::new(row.x, row.y));
            }
            order
                .into_iter()
                .map(|id| {
                    let pts = grouped.remove(&id).unwrap_or_default();
                    ShapePlot::new(id, pts, None, policy)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };

    let mut seen = std::collections::HashSet::new();
    for p in &plots {
        if !seen.insert(p.id()) {
            return Err(Error::MalformedInput(format!(
                "duplicate plot id `{}`",
                p.id()
            )));
        }
    }
    Ok(plots)
}

/// Serializes a pool as a JSON array of plot objects.
pub fn pool_to_json(plots: &[ShapePlot]) -> String {
    serde_json::to_string_pretty(plots).expect("plots always serialize")
}

/// Serializes a pool as `plot_id,x,y` CSV.
pub fn pool_to_csv(plots: &[ShapePlot]) -> String {
    let mut out = String::from("plot_id,x,y\n");
    for plot in plots {
        for p in plot.points() {
            out.push_str(&format!("{},{:?},{:?}\n", plot.id(), p.x, p.y));
        }
    }
    out
}

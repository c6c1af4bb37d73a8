//! The five visual-complexity metrics of a shape plot.
//!
//! All functions expect a canonical [`NormalizedCurve`] (see
//! [`crate::curve::prepare`]); they read the unit-square coordinates directly
//! so every value is scale-free.
//!
//! * **graph length**: arc length of the polyline.
//! * **number of kinks**: strict local extrema of the piecewise-linear
//!   function, a plateau bounded by opposite slopes counting once and
//!   endpoints never counting.
//! * **visual chunks**: significant trend reversals plus one, where a
//!   reversal must move more than `chunk_threshold_eps` away from both
//!   neighbouring significant pivots.
//! * **inverse average kink distance**: reciprocal of the mean Euclidean
//!   distance between consecutive kinks, `0` with fewer than two kinks.
//! * **polynomial degree**: smallest least-squares polynomial degree whose
//!   RMSE is within `poly_tolerance_tau`.
//!
//! Values recomputed from raw points can differ from other implementations
//! of the same metrics. The chunk threshold, the polynomial tolerance and
//! degree cap, the flat-run snapping tolerance and the plateau rule for
//! kinks are all configurable defaults here, and the result also depends on
//! how densely the source plot was sampled.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curve::{NormalizedCurve, Point};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    GraphLength,
    PolyDegree,
    VisualChunks,
    NumKinks,
    AvgKinkDistInv,
}

impl MetricId {
    pub const ALL: [MetricId; 5] = [
        MetricId::GraphLength,
        MetricId::PolyDegree,
        MetricId::VisualChunks,
        MetricId::NumKinks,
        MetricId::AvgKinkDistInv,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MetricId::GraphLength => "graph_length",
            MetricId::PolyDegree => "poly_degree",
            MetricId::VisualChunks => "visual_chunks",
            MetricId::NumKinks => "num_kinks",
            MetricId::AvgKinkDistInv => "avg_kink_dist_inv",
        }
    }

    /// Human-readable row label, as used in fit and evaluation tables.
    pub fn label(&self) -> &'static str {
        match self {
            MetricId::GraphLength => "Graph length",
            MetricId::PolyDegree => "Polynomial degree",
            MetricId::VisualChunks => "Visual chunks",
            MetricId::NumKinks => "Number of kinks",
            MetricId::AvgKinkDistInv => "Avg. kink distance",
        }
    }

    fn index(&self) -> usize {
        match self {
            MetricId::GraphLength => 0,
            MetricId::PolyDegree => 1,
            MetricId::VisualChunks => 2,
            MetricId::NumKinks => 3,
            MetricId::AvgKinkDistInv => 4,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "graph_length" => Ok(MetricId::GraphLength),
            "poly_degree" | "polynomial_degree" => Ok(MetricId::PolyDegree),
            "visual_chunks" => Ok(MetricId::VisualChunks),
            "num_kinks" | "number_of_kinks" => Ok(MetricId::NumKinks),
            "avg_kink_dist_inv" | "avg_kink_distance_inv" | "avg_kink_distance" => {
                Ok(MetricId::AvgKinkDistInv)
            }
            other => Err(Error::MalformedInput(format!("unknown metric `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    /// Minimum y-excursion (fraction of the unit y-range) for a trend
    /// reversal to count as a chunk boundary.
    pub chunk_threshold_eps: f64,
    /// RMSE on normalized y that a polynomial fit must reach.
    pub poly_tolerance_tau: f64,
    pub poly_max_degree: usize,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            chunk_threshold_eps: 0.02,
            poly_tolerance_tau: 0.02,
            poly_max_degree: 30,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        let eps = self.chunk_threshold_eps;
        if !(0.0..1.0).contains(&eps) {
            return Err(Error::InvalidRecord(format!(
                "chunk threshold {eps} must lie in [0, 1)"
            )));
        }
        if self.poly_tolerance_tau.is_nan() || self.poly_tolerance_tau < 0.0 {
            return Err(Error::InvalidRecord(format!(
                "polynomial tolerance {} must be non-negative",
                self.poly_tolerance_tau
            )));
        }
        if self.poly_max_degree < 1 {
            return Err(Error::InvalidRecord("max degree must be at least 1".into()));
        }
        Ok(())
    }
}

/// The five raw metrics of one plot plus their `ln(1 + m)` transforms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub plot_id: String,
    pub graph_length: f64,
    pub polynomial_degree: u32,
    pub visual_chunks: u32,
    pub num_kinks: u32,
    pub avg_kink_distance_inv: f64,
    /// Indexed in [`MetricId::ALL`] order.
    pub log_values: [f64; 5],
}

impl MetricVector {
    /// Builds a vector from raw values, deriving the log columns.
    pub fn from_raw(
        plot_id: impl Into<String>,
        graph_length: f64,
        polynomial_degree: u32,
        visual_chunks: u32,
        num_kinks: u32,
        avg_kink_distance_inv: f64,
    ) -> Result<Self> {
        let raw = [
            graph_length,
            polynomial_degree as f64,
            visual_chunks as f64,
            num_kinks as f64,
            avg_kink_distance_inv,
        ];
        let mut log_values = [0.0; 5];
        for (slot, v) in log_values.iter_mut().zip(raw) {
            *slot = log_metric(v)?;
        }
        Ok(Self {
            plot_id: plot_id.into(),
            graph_length,
            polynomial_degree,
            visual_chunks,
            num_kinks,
            avg_kink_distance_inv,
            log_values,
        })
    }

    pub fn value(&self, id: MetricId) -> f64 {
        match id {
            MetricId::GraphLength => self.graph_length,
            MetricId::PolyDegree => self.polynomial_degree as f64,
            MetricId::VisualChunks => self.visual_chunks as f64,
            MetricId::NumKinks => self.num_kinks as f64,
            MetricId::AvgKinkDistInv => self.avg_kink_distance_inv,
        }
    }

    pub fn log_value(&self, id: MetricId) -> f64 {
        self.log_values[id.index()]
    }

    /// Raw value, or its log transform when `log` is set.
    pub fn feature(&self, id: MetricId, log: bool) -> f64 {
        if log {
            self.log_value(id)
        } else {
            self.value(id)
        }
    }
}

/// `ln(1 + m)` for a non-negative metric value.
pub fn log_metric(m: f64) -> Result<f64> {
    if m < 0.0 || m.is_nan() {
        return Err(Error::NegativeMetric(m));
    }
    Ok(m.ln_1p())
}

pub fn graph_length(curve: &NormalizedCurve) -> f64 {
    curve.points.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

/// A strict local extremum of the curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kink {
    pub kind: ExtremumKind,
    /// First and last index of the (possibly one-point) plateau.
    pub first: usize,
    pub last: usize,
    /// Plateau midpoint in normalized coordinates.
    pub location: Point,
}

/// Locates every strict local extremum.
///
/// Segments are scanned for the sign of their y-difference; zero-difference
/// segments extend the current plateau. A sign change between two non-zero
/// segments marks one extremum spanning the plateau between them.
pub fn kinks(curve: &NormalizedCurve) -> Vec<Kink> {
    let pts = &curve.points;
    let mut out = Vec::new();
    let mut prev_sign = 0i8;
    let mut plateau_start = 0usize;

    for i in 0..pts.len().saturating_sub(1) {
        let dy = pts[i + 1].y - pts[i].y;
        let sign = if dy > 0.0 {
            1
        } else if dy < 0.0 {
            -1
        } else {
            continue;
        };
        if prev_sign != 0 && sign != prev_sign {
            let a = pts[plateau_start];
            let b = pts[i];
            out.push(Kink {
                kind: if prev_sign > 0 {
                    ExtremumKind::Maximum
                } else {
                    ExtremumKind::Minimum
                },
                first: plateau_start,
                last: i,
                location: Point::new((a.x + b.x) / 2.0, a.y),
            });
        }
        prev_sign = sign;
        plateau_start = i + 1;
    }
    out
}

pub fn count_kinks(curve: &NormalizedCurve) -> usize {
    kinks(curve).len()
}

/// Indices of the significant trend reversals used for chunking.
///
/// Zig-zag filter: starting from the first point, a pivot candidate is
/// tracked in the current trend direction and confirmed once the curve
/// retreats from it by more than `eps`. The first direction is fixed once
/// the curve leaves the start value by more than `eps`. The last candidate
/// is never confirmed since the endpoint bounds it.
pub fn significant_reversals(curve: &NormalizedCurve, eps: f64) -> Vec<usize> {
    let ys: Vec<f64> = curve.ys().collect();
    let mut reversals = Vec::new();
    if ys.len() < 3 {
        return reversals;
    }

    let start = ys[0];
    let (mut hi, mut lo) = (0usize, 0usize);
    // +1 rising towards a maximum candidate, -1 falling towards a minimum
    let mut dir = 0i8;
    let mut cand = 0usize;

    for (i, &y) in ys.iter().enumerate().skip(1) {
        match dir {
            0 => {
                if y > ys[hi] {
                    hi = i;
                }
                if y < ys[lo] {
                    lo = i;
                }
                if ys[hi] - start > eps {
                    dir = 1;
                    cand = hi;
                } else if start - ys[lo] > eps {
                    dir = -1;
                    cand = lo;
                }
            }
            1 => {
                if y > ys[cand] {
                    cand = i;
                } else if ys[cand] - y > eps {
                    reversals.push(cand);
                    dir = -1;
                    cand = i;
                }
            }
            _ => {
                if y < ys[cand] {
                    cand = i;
                } else if y - ys[cand] > eps {
                    reversals.push(cand);
                    dir = 1;
                    cand = i;
                }
            }
        }
    }
    reversals
}

pub fn visual_chunks(curve: &NormalizedCurve, cfg: &MetricConfig) -> usize {
    significant_reversals(curve, cfg.chunk_threshold_eps).len() + 1
}

/// Reciprocal of the mean Euclidean distance between consecutive kinks;
/// `0` when the curve has fewer than two kinks.
pub fn avg_kink_distance_inv(curve: &NormalizedCurve) -> f64 {
    let locs: Vec<Point> = kinks(curve).into_iter().map(|k| k.location).collect();
    if locs.len() < 2 {
        return 0.0;
    }
    let total: f64 = locs.windows(2).map(|w| w[0].distance(&w[1])).sum();
    let mean = total / (locs.len() - 1) as f64;
    if mean > 0.0 {
        1.0 / mean
    } else {
        0.0
    }
}

/// RMSE of the least-squares polynomial fit of every degree `0..=max_degree`.
///
/// The fits are nested, so the profile is non-increasing. The basis is built
/// by orthonormalizing `t · q_{d-1}` (with `t = 2x - 1`) against all previous
/// basis vectors on the sample points, twice for stability; the residual is
/// then deflated one direction at a time.
pub fn polynomial_rmse_profile(curve: &NormalizedCurve, max_degree: usize) -> Vec<f64> {
    let n = curve.len();
    let mut profile = Vec::with_capacity(max_degree + 1);
    if n == 0 {
        profile.resize(max_degree + 1, 0.0);
        return profile;
    }

    let t: Vec<f64> = curve.points.iter().map(|p| 2.0 * p.x - 1.0).collect();
    let mut residual: Vec<f64> = curve.ys().collect();
    let rmse = |r: &[f64]| (r.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_degree + 1);
    basis.push(vec![1.0 / (n as f64).sqrt(); n]);
    deflate(&mut residual, &basis[0]);
    profile.push(rmse(&residual));

    for _ in 1..=max_degree {
        let last = basis.last().expect("basis is never empty");
        let mut v: Vec<f64> = t.iter().zip(last).map(|(ti, qi)| ti * qi).collect();
        for _ in 0..2 {
            for q in &basis {
                deflate(&mut v, q);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        // Once every sample is interpolated no new direction exists.
        if basis.len() >= n || norm < 1e-10 {
            profile.push(*profile.last().expect("profile has degree 0"));
            continue;
        }
        v.iter_mut().for_each(|a| *a /= norm);
        deflate(&mut residual, &v);
        basis.push(v);
        profile.push(rmse(&residual));
    }
    profile
}

fn deflate(v: &mut [f64], unit: &[f64]) {
    let c: f64 = v.iter().zip(unit).map(|(a, b)| a * b).sum();
    v.iter_mut().zip(unit).for_each(|(a, b)| *a -= c * b);
}

/// Lowest polynomial degree whose fit RMSE is within tolerance, capped at
/// `poly_max_degree`.
pub fn polynomial_degree(curve: &NormalizedCurve, cfg: &MetricConfig) -> usize {
    let profile = polynomial_rmse_profile(curve, cfg.poly_max_degree);
    profile
        .iter()
        .position(|&e| e <= cfg.poly_tolerance_tau)
        .unwrap_or(cfg.poly_max_degree)
}

pub fn metric_vector(curve: &NormalizedCurve, cfg: &MetricConfig) -> Result<MetricVector> {
    cfg.validate()?;
    MetricVector::from_raw(
        curve.plot_id.clone(),
        graph_length(curve),
        polynomial_degree(curve, cfg) as u32,
        visual_chunks(curve, cfg) as u32,
        count_kinks(curve) as u32,
        avg_kink_distance_inv(curve),
    )
}

pub const METRIC_CSV_HEADER: &str = "plot_id,graph_length,poly_degree,visual_chunks,num_kinks,\
avg_kink_dist_inv,log_graph_length,log_poly_degree,log_visual_chunks,log_num_kinks,\
log_avg_kink_dist_inv";

impl MetricVector {
    /// One CSV row in [`METRIC_CSV_HEADER`] column order, floats written in
    /// shortest round-trip form.
    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{:?},{},{},{},{:?}",
            self.plot_id,
            self.graph_length,
            self.polynomial_degree,
            self.visual_chunks,
            self.num_kinks,
            self.avg_kink_distance_inv
        );
        for v in self.log_values {
            row.push_str(&format!(",{v:?}"));
        }
        row
    }
}

pub fn metrics_to_csv(rows: &[MetricVector]) -> String {
    let mut out = String::from(METRIC_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
struct MetricCsvRow {
    plot_id: String,
    graph_length: f64,
    poly_degree: f64,
    visual_chunks: f64,
    num_kinks: f64,
    avg_kink_dist_inv: f64,
}

fn as_count(v: f64, column: &str, id: &str) -> Result<u32> {
    if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as u32)
    } else {
        Err(Error::InvalidRecord(format!(
            "plot `{id}`: {column} = {v} is not a non-negative integer"
        )))
    }
}

/// Reads a metric table. Only the five raw columns are required; log columns
/// are recomputed from them.
pub fn parse_metrics_csv(bytes: &[u8]) -> Result<Vec<MetricVector>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut out = Vec::new();
    for row in reader.deserialize::<MetricCsvRow>() {
        let r = row?;
        for v in [r.graph_length, r.avg_kink_dist_inv] {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { id: r.plot_id });
            }
        }
        out.push(MetricVector::from_raw(
            r.plot_id.clone(),
            r.graph_length,
            as_count(r.poly_degree, "poly_degree", &r.plot_id)?,
            as_count(r.visual_chunks, "visual_chunks", &r.plot_id)?,
            as_count(r.num_kinks, "num_kinks", &r.plot_id)?,
            r.avg_kink_dist_inv,
        )?);
    }
    Ok(out)
}

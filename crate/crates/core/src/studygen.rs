//! Synthetic shape-plot pools and the study's plot-selection design.
//!
//! The three generator families stand in for the shape functions of
//! spline-based, tree-based and boosted GAMs. They are parametric, so the
//! expected complexity of each plot is controlled directly.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{IngestPolicy, Point, ShapePlot, SourceFamily};
use crate::error::{Error, Result};
use crate::metrics::{MetricId, MetricVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorFamily {
    /// Smooth curve built from a monotone trend and Gaussian bumps.
    Spline,
    /// Piecewise-constant staircase.
    Tree,
    /// Smooth base with high-frequency ripples.
    Boosted,
}

impl GeneratorFamily {
    pub const ALL: [GeneratorFamily; 3] = [
        GeneratorFamily::Spline,
        GeneratorFamily::Tree,
        GeneratorFamily::Boosted,
    ];

    pub fn source(&self) -> SourceFamily {
        match self {
            GeneratorFamily::Spline => SourceFamily::Spline,
            GeneratorFamily::Tree => SourceFamily::Tree,
            GeneratorFamily::Boosted => SourceFamily::Boosted,
        }
    }
}

impl fmt::Display for GeneratorFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.source().as_str())
    }
}

impl FromStr for GeneratorFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spline" => Ok(GeneratorFamily::Spline),
            "tree" => Ok(GeneratorFamily::Tree),
            "boosted" => Ok(GeneratorFamily::Boosted),
            other => Err(Error::MalformedInput(format!(
                "unknown generator family `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: GeneratorFamily,
    pub n_points: usize,
    /// Roughly the number of extrema (spline, boosted) or steps (tree).
    pub complexity: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn id(&self) -> String {
        format!(
            "{}-c{}-n{}-s{}",
            self.family, self.complexity, self.n_points, self.seed
        )
    }

    fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::InvalidRecord(format!(
                "generator needs at least 2 points, got {}",
                self.n_points
            )));
        }
        if !self.complexity.is_finite() || self.complexity < 0.0 {
            return Err(Error::InvalidRecord(format!(
                "complexity {} must be finite and non-negative",
                self.complexity
            )));
        }
        Ok(())
    }
}

/// Monotone trend `sign · (u + c·u²)` with `c ≥ 0`: strictly monotone on `[0, 1]`.
fn monotone_trend(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> f64 {
    let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    let curvature = rng.random_range(0.0..1.0);
    move |u| sign * (u + curvature * u * u)
}

/// Gaussian bumps of alternating sign, evenly spread with jitter.
fn bumps(rng: &mut ChaCha8Rng, count: usize, amp_range: (f64, f64)) -> Vec<(f64, f64, f64)> {
    let spacing = 1.0 / (count as f64 + 1.0);
    let mut sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    (0..count)
        .map(|j| {
            let centre = spacing * (j as f64 + 1.0) + rng.random_range(-0.25..0.25) * spacing;
            let width = spacing * rng.random_range(0.25..0.45);
            let amp = sign * rng.random_range(amp_range.0..amp_range.1);
            sign = -sign;
            (centre, width, amp)
        })
        .collect()
}

fn eval_bumps(bumps: &[(f64, f64, f64)], u: f64) -> f64 {
    bumps
        .iter()
        .map(|&(c, w, a)| a * (-0.5 * ((u - c) / w).powi(2)).exp())
        .sum()
}

/// Samples one synthetic shape plot. Output is a pure function of `spec`.
pub fn generate_plot(spec: &GeneratorSpec) -> Result<ShapePlot> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_points;

    // raw feature axis, as an exported plot would carry it
    let x_lo = rng.random_range(-50.0..50.0);
    let x_span = rng.random_range(1.0..100.0);
    let y_offset = rng.random_range(-2.0..2.0);
    let y_scale = rng.random_range(0.1..5.0);
    let us: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();

    let ys: Vec<f64> = match spec.family {
        GeneratorFamily::Spline => {
            let k = spec.complexity.round() as usize;
            let trend = monotone_trend(&mut rng);
            let trend_weight = if k == 0 { 1.0 } else { 0.3 };
            let b = bumps(&mut rng, k, (0.4, 1.2));
            us.iter()
                .map(|&u| trend_weight * trend(u) + eval_bumps(&b, u))
                .collect()
        }
        GeneratorFamily::Tree => {
            let steps = spec.complexity.ceil() as usize;
            let mut breaks: Vec<f64> = (0..steps).map(|_| rng.random_range(0.0..1.0)).collect();
            breaks.sort_by(f64::total_cmp);
            let mut levels = Vec::with_capacity(steps + 1);
            let mut level = rng.random_range(-1.0..1.0);
            levels.push(level);
            for _ in 0..steps {
                let jump = rng.random_range(0.1..1.0);
                // mostly trending, sometimes reversing
                level += if rng.random_bool(0.65) { jump } else { -jump };
                levels.push(level);
            }
            us.iter()
                .map(|&u| levels[breaks.partition_point(|&b| b < u)])
                .collect()
        }
        GeneratorFamily::Boosted => {
            let trend = monotone_trend(&mut rng);
            let b = bumps(
                &mut rng,
                (spec.complexity / 8.0).round() as usize,
                (0.3, 0.8),
            );
            let cycles = spec.complexity / 2.0;
            let phase = rng.random_range(0.0..2.0 * PI);
            let ripple = rng.random_range(0.02..0.08);
            let detune = rng.random_range(0.0..0.5);
            us.iter()
                .map(|&u| {
                    let envelope = 1.0 + detune * (3.0 * u).sin();
                    0.6 * trend(u)
                        + eval_bumps(&b, u)
                        + ripple * envelope * (2.0 * PI * cycles * u + phase).sin()
                })
                .collect()
        }
    };

    let points = us
        .iter()
        .zip(&ys)
        .map(|(&u, &y)| Point::new(x_lo + x_span * u, y_offset + y_scale * y))
        .collect();
    ShapePlot::new(
        spec.id(),
        points,
        Some(spec.family.source()),
        &IngestPolicy::default(),
    )
}

/// A pool of `count` plots cycling through the three families, with plot
/// ids `plot-0000`, `plot-0001`, ... Each plot draws from its own stream of
/// the base seed.
pub fn generate_pool(count: usize, seed: u64) -> Result<Vec<ShapePlot>> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let family = GeneratorFamily::ALL[i % 3];
            let complexity = match family {
                GeneratorFamily::Spline => rng.random_range(0..=8) as f64,
                GeneratorFamily::Tree => rng.random_range(0..=30) as f64,
                GeneratorFamily::Boosted => rng.random_range(4..=80) as f64,
            };
            let n_points = match family {
                GeneratorFamily::Tree => rng.random_range(60..=200),
                _ => rng.random_range(80..=200),
            };
            let spec = GeneratorSpec {
                family,
                n_points,
                complexity,
                seed: rng.next_u64(),
            };
            Ok(generate_plot(&spec)?.with_id(format!("plot-{i:04}")))
        })
        .collect()
}

/// Study layout: `n_groups` sets of `set_size` plots drawn from
/// `per_metric` picks along each metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyDesign {
    pub n_groups: usize,
    pub set_size: usize,
    pub per_metric: usize,
    pub final_count: usize,
}

impl Default for StudyDesign {
    fn default() -> Self {
        Self {
            n_groups: 9,
            set_size: 16,
            per_metric: 16,
            final_count: 144,
        }
    }
}

impl StudyDesign {
    pub fn validate(&self) -> Result<()> {
        if self.n_groups == 0 || self.set_size == 0 {
            return Err(Error::InvalidDesign(
                "groups and set size must be positive".into(),
            ));
        }
        if self.n_groups * self.set_size != self.final_count {
            return Err(Error::InvalidDesign(format!(
                "{} groups x {} plots != final count {}",
                self.n_groups, self.set_size, self.final_count
            )));
        }
        if self.per_metric < 2 {
            return Err(Error::InvalidDesign(
                "per-metric selection needs at least 2 plots".into(),
            ));
        }
        Ok(())
    }
}

/// Quantile-spaced pick of `k` plots from `(plot_id, value)` pairs.
///
/// Sorts ascending by value (ties by plot id) and keeps the entries at
/// `round(i·(n-1)/(k-1))`, so the extremes are always included and the
/// output stays sorted by value.
pub fn select_by_values(values: &[(String, f64)], k: usize) -> Result<Vec<String>> {
    if k < 2 {
        return Err(Error::InvalidDesign(format!(
            "cannot select {k} plots, need k >= 2"
        )));
    }
    let n = values.len();
    if n < k {
        return Err(Error::PoolTooSmall { pool: n, k });
    }
    let mut sorted: Vec<&(String, f64)> = values.iter().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    Ok((0..k)
        .map(|i| {
            // round half up in integer arithmetic
            let idx = (2 * i * (n - 1) + (k - 1)) / (2 * (k - 1));
            sorted[idx].0.clone()
        })
        .collect())
}

pub fn select_equal_interval(
    pool: &[MetricVector],
    metric: MetricId,
    k: usize,
) -> Result<Vec<String>> {
    let values: Vec<(String, f64)> = pool
        .iter()
        .map(|v| (v.plot_id.clone(), v.value(metric)))
        .collect();
    select_by_values(&values, k)
}

/// One named column of per-plot values used for selection.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreColumn {
    pub name: String,
    pub values: Vec<(String, f64)>,
}

impl ScoreColumn {
    pub fn from_metric(pool: &[MetricVector], metric: MetricId) -> Self {
        Self {
            name: metric.as_str().to_owned(),
            values: pool
                .iter()
                .map(|v| (v.plot_id.clone(), v.value(metric)))
                .collect(),
        }
    }
}

/// Selects `per_metric` plots along every column, deduplicates the picks,
/// draws `final_count` of them uniformly and partitions those into
/// `n_groups` sets.
pub fn build_study_pool_from_columns(
    columns: &[ScoreColumn],
    design: &StudyDesign,
    seed: u64,
) -> Result<Vec<Vec<String>>> {
    design.validate()?;
    let mut seen = HashSet::new();
    let mut candidates = Vec::new();
    for col in columns {
        for id in select_by_values(&col.values, design.per_metric)? {
            if seen.insert(id.clone()) {
                candidates.push(id);
            }
        }
    }
    if candidates.len() < design.final_count {
        return Err(Error::InsufficientCandidates {
            have: candidates.len(),
            need: design.final_count,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<String> =
        rand::seq::index::sample(&mut rng, candidates.len(), design.final_count)
            .into_iter()
            .map(|i| candidates[i].clone())
            .collect();
    chosen.shuffle(&mut rng);
    Ok(chosen
        .chunks(design.set_size)
        .map(<[String]>::to_vec)
        .collect())
}

pub fn build_study_pool(
    pool: &[MetricVector],
    metrics: &[MetricId],
    design: &StudyDesign,
    seed: u64,
) -> Result<Vec<Vec<String>>> {
    let columns: Vec<ScoreColumn> = metrics
        .iter()
        .map(|&m| ScoreColumn::from_metric(pool, m))
        .collect();
    build_study_pool_from_columns(&columns, design, seed)
}

/// Sets (1-based) a group works on in each task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupAssignment {
    pub rank_set: usize,
    pub choice_set: usize,
    pub rating_sets: [usize; 2],
}

/// Rotating assignment: group `g` ranks set `g`, chooses on `g+1` and rates
/// `g+2` and `g+3`, wrapping around the number of groups.
pub fn rotation_assign(design: &StudyDesign) -> Result<BTreeMap<usize, GroupAssignment>> {
    let n = design.n_groups;
    if n < 4 {
        return Err(Error::TooFewGroups(n));
    }
    let wrap = |g: usize, offset: usize| (g - 1 + offset) % n + 1;
    Ok((1..=n)
        .map(|g| {
            (
                g,
                GroupAssignment {
                    rank_set: wrap(g, 0),
                    choice_set: wrap(g, 1),
                    rating_sets: [wrap(g, 2), wrap(g, 3)],
                },
            )
        })
        .collect())
}

/// The set-assignment output document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyAssignment {
    pub sets: Vec<Vec<String>>,
    pub assignment: BTreeMap<usize, GroupAssignment>,
}

impl StudyAssignment {
    pub fn build(columns: &[ScoreColumn], design: &StudyDesign, seed: u64) -> Result<Self> {
        Ok(Self {
            sets: build_study_pool_from_columns(columns, design, seed)?,
            assignment: rotation_assign(design)?,
        })
    }
}

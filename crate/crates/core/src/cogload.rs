//! Cognitive-load models: prediction, fitting from ratings, and validation
//! against rankings and binary choices.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{log_metric, MetricId, MetricVector};
use crate::stats::{ols_fit, spearman_rho, RegressionFit};

/// Bounds of the 9-point mental-effort rating scale.
pub const SCALE_MIN: f64 = 1.0;
pub const SCALE_MAX: f64 = 9.0;

/// Plots rated fewer times than this produce a low-coverage warning.
pub const MIN_RATINGS_PER_PLOT: usize = 12;

pub type ScoreMap = BTreeMap<String, f64>;

/// `PCL = intercept + slope · x`, where `x` is the metric or `ln(1 + metric)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CogLoadModel {
    pub metric: MetricId,
    #[serde(rename = "log")]
    pub log_transformed: bool,
    pub intercept: f64,
    pub slope: f64,
    #[serde(rename = "stats", default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<RegressionFit>,
}

impl Default for CogLoadModel {
    fn default() -> Self {
        Self::published()
    }
}

impl CogLoadModel {
    /// The number-of-kinks log model: `1.724 + 1.377 · ln(1 + kinks)`.
    pub const fn published() -> Self {
        Self {
            metric: MetricId::NumKinks,
            log_transformed: true,
            intercept: 1.724,
            slope: 1.377,
            fit: None,
        }
    }

    pub fn transform(&self, value: f64) -> Result<f64> {
        if self.log_transformed {
            log_metric(value)
        } else if value < 0.0 || value.is_nan() {
            Err(Error::NegativeMetric(value))
        } else {
            Ok(value)
        }
    }

    pub fn predict(&self, value: f64) -> Result<Prediction> {
        let raw = self.intercept + self.slope * self.transform(value)?;
        Ok(Prediction {
            raw,
            clamped: raw.clamp(SCALE_MIN, SCALE_MAX),
        })
    }

    pub fn predict_vector(&self, v: &MetricVector) -> Result<Prediction> {
        self.predict(v.value(self.metric))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model always serializes")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        let model: Self = serde_json::from_slice(bytes)?;
        if !model.intercept.is_finite() || !model.slope.is_finite() {
            return Err(Error::InvalidRecord(
                "model coefficients must be finite".into(),
            ));
        }
        Ok(model)
    }
}

/// A model output, both unbounded and clipped to the rating scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub raw: f64,
    pub clamped: f64,
}

pub fn predict_pcl(metric_value: f64, model: &CogLoadModel) -> Result<Prediction> {
    model.predict(metric_value)
}

/// Raw (unclamped) model predictions for every plot, keyed by plot id.
pub fn model_scores(model: &CogLoadModel, metrics: &[MetricVector]) -> Result<ScoreMap> {
    metrics
        .iter()
        .map(|v| Ok((v.plot_id.clone(), model.predict_vector(v)?.raw)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingRecord {
    pub plot_id: String,
    pub participant_id: String,
    pub rating: u8,
}

impl RatingRecord {
    pub fn new(
        plot_id: impl Into<String>,
        participant_id: impl Into<String>,
        rating: u8,
    ) -> Result<Self> {
        let r = Self {
            plot_id: plot_id.into(),
            participant_id: participant_id.into(),
            rating,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=9).contains(&self.rating) {
            return Err(Error::InvalidRecord(format!(
                "rating {} for plot `{}` is outside 1..=9",
                self.rating, self.plot_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingRecord {
    #[serde(rename = "participant")]
    pub participant_id: String,
    #[serde(rename = "task")]
    pub task_id: String,
    /// Most cognitive load first.
    #[serde(rename = "order_most_load_first")]
    pub ordered_plot_ids: Vec<String>,
}

impl RankingRecord {
    pub fn validate(&self) -> Result<()> {
        if self.ordered_plot_ids.len() < 2 {
            return Err(Error::InvalidRecord(format!(
                "ranking {}/{} has fewer than two plots",
                self.participant_id, self.task_id
            )));
        }
        let mut seen = HashSet::new();
        for id in &self.ordered_plot_ids {
            if !seen.insert(id) {
                return Err(Error::InvalidRecord(format!(
                    "ranking {}/{} lists `{id}` twice",
                    self.participant_id, self.task_id
                )));
            }
        }
        Ok(())
    }
}

/// One forced choice; `chosen` is the plot judged to impose more load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoiceRecord {
    pub participant_id: String,
    pub plot_a: String,
    pub plot_b: String,
    pub chosen: String,
}

impl ChoiceRecord {
    pub fn validate(&self) -> Result<()> {
        if self.plot_a == self.plot_b {
            return Err(Error::InvalidRecord(format!(
                "choice compares `{}` with itself",
                self.plot_a
            )));
        }
        if self.chosen != self.plot_a && self.chosen != self.plot_b {
            return Err(Error::InvalidRecord(format!(
                "chosen plot `{}` is neither `{}` nor `{}`",
                self.chosen, self.plot_a, self.plot_b
            )));
        }
        Ok(())
    }
}

pub fn parse_ratings_csv(bytes: &[u8]) -> Result<Vec<RatingRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut out = Vec::new();
    for row in reader.deserialize::<RatingRecord>() {
        let r = row?;
        r.validate()?;
        out.push(r);
    }
    Ok(out)
}

pub fn parse_rankings_json(bytes: &[u8]) -> Result<Vec<RankingRecord>> {
    let records: Vec<RankingRecord> = serde_json::from_slice(bytes)?;
    for r in &records {
        r.validate()?;
    }
    Ok(records)
}

pub fn parse_choices_csv(bytes: &[u8]) -> Result<Vec<ChoiceRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut out = Vec::new();
    for row in reader.deserialize::<ChoiceRecord>() {
        let r = row?;
        r.validate()?;
        out.push(r);
    }
    Ok(out)
}

#[derive(Deserialize)]
struct MeanRatingRow {
    plot_id: String,
    mean_rating: f64,
}

/// Reads pre-aggregated per-plot ratings (`plot_id,mean_rating`).
pub fn parse_mean_ratings_csv(bytes: &[u8]) -> Result<ScoreMap> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut out = ScoreMap::new();
    for row in reader.deserialize::<MeanRatingRow>() {
        let r = row?;
        if !(SCALE_MIN..=SCALE_MAX).contains(&r.mean_rating) {
            return Err(Error::InvalidRecord(format!(
                "mean rating {} for plot `{}` is outside the 1..9 scale",
                r.mean_rating, r.plot_id
            )));
        }
        if out.insert(r.plot_id.clone(), r.mean_rating).is_some() {
            return Err(Error::InvalidRecord(format!(
                "plot `{}` listed twice",
                r.plot_id
            )));
        }
    }
    Ok(out)
}

/// Arithmetic mean rating per plot. Plots with fewer than
/// [`MIN_RATINGS_PER_PLOT`] ratings are logged, not rejected.
pub fn mean_ratings(ratings: &[RatingRecord]) -> Result<ScoreMap> {
    if ratings.is_empty() {
        return Err(Error::EmptyInput("ratings"));
    }
    let mut acc: BTreeMap<&str, (u64, usize)> = BTreeMap::new();
    for r in ratings {
        r.validate()?;
        let e = acc.entry(r.plot_id.as_str()).or_insert((0, 0));
        e.0 += r.rating as u64;
        e.1 += 1;
    }
    let low: Vec<&str> = acc
        .iter()
        .filter(|(_, (_, n))| *n < MIN_RATINGS_PER_PLOT)
        .map(|(id, _)| *id)
        .collect();
    if !low.is_empty() {
        log::warn!(
            "{} plot(s) have fewer than {MIN_RATINGS_PER_PLOT} ratings (e.g. `{}`)",
            low.len(),
            low[0]
        );
    }
    Ok(acc
        .into_iter()
        .map(|(id, (sum, n))| (id.to_owned(), sum as f64 / n as f64))
        .collect())
}

/// The user-derived reference scores: each plot's mean rating.
pub fn baseline_scores(ratings: &[RatingRecord]) -> Result<ScoreMap> {
    mean_ratings(ratings)
}

/// Fits one metric-based model to participant ratings.
pub fn fit_model(
    metrics: &[MetricVector],
    ratings: &[RatingRecord],
    metric: MetricId,
    log_transformed: bool,
) -> Result<CogLoadModel> {
    let means = mean_ratings(ratings)?;
    fit_model_from_means(metrics, &means, metric, log_transformed)
}

/// Fits one metric-based model to per-plot mean ratings.
///
/// Every rated plot needs a metric vector. Plots with metrics but no rating
/// are skipped with a warning. Observations enter in plot-id order.
pub fn fit_model_from_means(
    metrics: &[MetricVector],
    means: &ScoreMap,
    metric: MetricId,
    log_transformed: bool,
) -> Result<CogLoadModel> {
    let mut by_id: HashMap<&str, &MetricVector> = HashMap::with_capacity(metrics.len());
    for v in metrics {
        if by_id.insert(v.plot_id.as_str(), v).is_some() {
            return Err(Error::InvalidRecord(format!(
                "plot `{}` has two metric rows",
                v.plot_id
            )));
        }
    }

    let mut xs = Vec::with_capacity(means.len());
    let mut ys = Vec::with_capacity(means.len());
    for (id, &mean) in means {
        let v = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::MissingMetric(id.clone()))?;
        xs.push(v.feature(metric, log_transformed));
        ys.push(mean);
    }
    let unrated = metrics.len() - xs.len();
    if unrated > 0 {
        log::warn!("{unrated} plot(s) without ratings excluded from the fit");
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: xs.len(),
        });
    }

    let fit = ols_fit(&xs, &ys)?;
    Ok(CogLoadModel {
        metric,
        log_transformed,
        intercept: fit.intercept,
        slope: fit.slope,
        fit: Some(fit),
    })
}

fn lookup<'a>(scores: &'a ScoreMap, id: &str) -> Result<&'a f64> {
    scores
        .get(id)
        .ok_or_else(|| Error::MissingScore(id.to_owned()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankingSummary {
    pub mean_rho: f64,
    /// Population standard deviation across rankings.
    pub sd_rho: f64,
    pub n: usize,
}

/// Spearman agreement of each ranking with the order the scores induce
/// (higher score = more load).
///
/// A ranking whose plots all share one score carries no order information
/// and contributes rho = 0.
pub fn ranking_rhos(scores: &ScoreMap, rankings: &[RankingRecord]) -> Result<Vec<f64>> {
    rankings
        .iter()
        .map(|r| {
            r.validate()?;
            let len = r.ordered_plot_ids.len();
            let user: Vec<f64> = (0..len).map(|i| (len - i) as f64).collect();
            let model = r
                .ordered_plot_ids
                .iter()
                .map(|id| lookup(scores, id).copied())
                .collect::<Result<Vec<_>>>()?;
            match spearman_rho(&user, &model) {
                Err(Error::ZeroVariance) => Ok(0.0),
                other => other,
            }
        })
        .collect()
}

pub fn evaluate_rankings(scores: &ScoreMap, rankings: &[RankingRecord]) -> Result<RankingSummary> {
    if rankings.is_empty() {
        return Err(Error::EmptyInput("rankings"));
    }
    let rhos = ranking_rhos(scores, rankings)?;
    let n = rhos.len() as f64;
    let mean = rhos.iter().sum::<f64>() / n;
    let var = rhos.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    Ok(RankingSummary {
        mean_rho: mean,
        sd_rho: var.sqrt(),
        n: rhos.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChoiceOutcome {
    Correct,
    Wrong,
    Tie,
}

pub fn choice_outcome(
    scores: &ScoreMap,
    choice: &ChoiceRecord,
    tie_tol: f64,
) -> Result<ChoiceOutcome> {
    choice.validate()?;
    let a = *lookup(scores, &choice.plot_a)?;
    let b = *lookup(scores, &choice.plot_b)?;
    if (a - b).abs() <= tie_tol {
        return Ok(ChoiceOutcome::Tie);
    }
    let predicted = if a > b {
        &choice.plot_a
    } else {
        &choice.plot_b
    };
    Ok(if *predicted == choice.chosen {
        ChoiceOutcome::Correct
    } else {
        ChoiceOutcome::Wrong
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiceSummary {
    pub accuracy: f64,
    pub error_rate: f64,
    pub tie_freq: f64,
    pub n: usize,
}

/// Fraction of choices the scores reproduce, contradict, or cannot decide.
pub fn evaluate_choices(
    scores: &ScoreMap,
    choices: &[ChoiceRecord],
    tie_tol: f64,
) -> Result<ChoiceSummary> {
    if choices.is_empty() {
        return Err(Error::EmptyInput("choices"));
    }
    if tie_tol.is_nan() || tie_tol < 0.0 {
        return Err(Error::InvalidRecord(format!(
            "tie tolerance {tie_tol} is negative"
        )));
    }
    let (mut correct, mut wrong, mut ties) = (0usize, 0usize, 0usize);
    for c in choices {
        match choice_outcome(scores, c, tie_tol)? {
            ChoiceOutcome::Correct => correct += 1,
            ChoiceOutcome::Wrong => wrong += 1,
            ChoiceOutcome::Tie => ties += 1,
        }
    }
    let n = choices.len() as f64;
    Ok(ChoiceSummary {
        accuracy: correct as f64 / n,
        error_rate: wrong as f64 / n,
        tie_freq: ties as f64 / n,
        n: choices.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub mean_rho: f64,
    pub sd_rho: f64,
    pub accuracy: f64,
    pub error_rate: f64,
    pub tie_freq: f64,
}

pub fn evaluate(
    scores: &ScoreMap,
    rankings: &[RankingRecord],
    choices: &[ChoiceRecord],
    tie_tol: f64,
) -> Result<EvaluationReport> {
    let r = evaluate_rankings(scores, rankings)?;
    let c = evaluate_choices(scores, choices, tie_tol)?;
    Ok(EvaluationReport {
        mean_rho: r.mean_rho,
        sd_rho: r.sd_rho,
        accuracy: c.accuracy,
        error_rate: c.error_rate,
        tie_freq: c.tie_freq,
    })
}

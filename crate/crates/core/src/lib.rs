//! Visual-complexity metrics for GAM shape plots and log-linear models of the
//! cognitive load they impose.
//!
//! The pipeline is: ingest a [`curve::ShapePlot`], [`curve::prepare`] it into
//! a unit-square [`curve::NormalizedCurve`], compute its
//! [`metrics::MetricVector`], and predict perceived cognitive load with a
//! [`cogload::CogLoadModel`]. The [`cogload`] module also fits such models to
//! rating data and validates them on rankings and binary choices;
//! [`studygen`] synthesizes plot pools and the study's selection design.

pub mod cogload;
pub mod curve;
pub mod error;
pub mod metrics;
pub mod report;
pub mod stats;
pub mod studygen;

pub use cogload::{CogLoadModel, EvaluationReport, Prediction};
pub use curve::{IngestPolicy, NormalizedCurve, Point, ShapePlot};
pub use error::{Error, ErrorKind, Result};
pub use metrics::{MetricConfig, MetricId, MetricVector};

/// Normalizes, canonicalizes and measures one plot.
pub fn analyze_plot(
    plot: &ShapePlot,
    policy: &IngestPolicy,
    cfg: &MetricConfig,
) -> Result<MetricVector> {
    let curve = curve::prepare(plot, policy)?;
    metrics::metric_vector(&curve, cfg)
}

//! Chronological splits, forecast metrics, regime-entry events and
//! early-warning evaluation.

pub mod baselines;
pub mod early_warning;
pub mod events;
pub mod forecast;
pub mod metrics;
pub mod split;

pub use baselines::{baseline_scores, BaselineKind};
pub use early_warning::{
    cv_fbeta, early_warning_eval, evaluate_scores, subregion_breakdown, Detector, EarlyWarningMetrics,
    EarlyWarningReport, EwDataset, EwSettings, PrCurve, SubregionMetrics,
};
pub use events::{label_events, EventPanel, EventTarget};
pub use forecast::{build_forecast_tasks, forecast_eval, ForecastMetrics, ForecastReport, RegimeFilter};
pub use metrics::{auprc, auroc, regression_metrics};
pub use split::{chronological_split, Split, SplitSpec};

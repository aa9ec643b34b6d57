//! One-step-ahead emissions forecasts evaluated per regime.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::events::regime_table_name;
use super::metrics::regression_metrics;
use super::split::Split;
use crate::energetics::EnergeticsState;
use crate::error::{NeedError, Result};
use crate::models::{fit_forecaster, ForecastTask, ModelKind, ModelSpec};
use crate::panel::Panel;
use crate::regime::{RegimeAssignment, RegimeLabel, RegimeMethod};

pub type RegimeLookup = BTreeMap<(String, i32), RegimeLabel>;

pub fn regime_lookup(assignments: &[RegimeAssignment], method: RegimeMethod) -> RegimeLookup {
    assignments
        .iter()
        .filter(|a| a.method == method)
        .map(|a| ((a.country_code.clone(), a.year), a.label))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredictorSet {
    /// ln_co2_t, ln_gdp_t, epsilon_t, velocity_t
    Default,
    /// ln_co2_t, ln_gdp_t and the twelve energetics columns.
    Full,
}

impl FromStr for PredictorSet {
    type Err = NeedError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "default" => Ok(PredictorSet::Default),
            "full" => Ok(PredictorSet::Full),
            _ => Err(NeedError::invalid(format!("unknown predictor set '{s}'"))),
        }
    }
}

/// Rows (country, t) with an energetics state at t and a panel observation
/// at t+1.
pub fn build_forecast_tasks(panel: &Panel, states: &[EnergeticsState], set: PredictorSet) -> Vec<ForecastTask> {
    states
        .iter()
        .filter_map(|s| {
            let series = panel.country(&s.country_code)?;
            let now = series.get(s.year)?;
            let next = series.get(s.year + 1)?;
            let mut predictors = vec![now.ln_co2, now.ln_gdp];
            match set {
                PredictorSet::Default => predictors.extend([s.epsilon, s.velocity]),
                PredictorSet::Full => predictors.extend(s.feature_row()),
            }
            Some(ForecastTask {
                country_code: s.country_code.clone(),
                year: s.year,
                predictors,
                target: next.ln_co2,
                gdp_target: next.ln_gdp,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RegimeFilter {
    Global,
    Only(RegimeLabel),
}

impl RegimeFilter {
    pub const TABLE_ORDER: [RegimeFilter; 4] = [
        RegimeFilter::Global,
        RegimeFilter::Only(RegimeLabel::StoreDominant),
        RegimeFilter::Only(RegimeLabel::Transitional),
        RegimeFilter::Only(RegimeLabel::FlowDominant),
    ];

    pub fn table_name(self) -> &'static str {
        match self {
            RegimeFilter::Global => "Global",
            RegimeFilter::Only(l) => regime_table_name(l),
        }
    }

    pub fn admits(self, label: Option<RegimeLabel>) -> bool {
        match self {
            RegimeFilter::Global => true,
            RegimeFilter::Only(l) => label == Some(l),
        }
    }
}

impl fmt::Display for RegimeFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.table_name())
    }
}

pub const TABLE_MODELS: [ModelKind; 4] = [ModelKind::Ols, ModelKind::Forest, ModelKind::Var1, ModelKind::Boosted];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastMetrics {
    pub regime: String,
    pub model: String,
    pub rmse: f64,
    pub mae: f64,
    pub r2_oos: f64,
    pub n_test: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ForecastReport {
    pub rows: Vec<ForecastMetrics>,
    pub warnings: Vec<String>,
}

/// Fits every model on the train rows of every regime slice and scores the
/// matching test rows. Rows come out in (filter, model) order.
pub fn forecast_eval(
    tasks: &[ForecastTask],
    regimes: &RegimeLookup,
    split: &Split,
    filters: &[RegimeFilter],
    models: &[ModelSpec],
) -> ForecastReport {
    let label_of = |i: usize| regimes.get(&(tasks[i].country_code.clone(), tasks[i].year)).copied();
    let jobs: Vec<(RegimeFilter, &ModelSpec)> = filters
        .iter()
        .flat_map(|f| models.iter().map(move |m| (*f, m)))
        .collect();
    let results: Vec<std::result::Result<ForecastMetrics, String>> = jobs
        .par_iter()
        .map(|(filter, spec)| {
            let train: Vec<ForecastTask> = split
                .train
                .iter()
                .filter(|&&i| filter.admits(label_of(i)))
                .map(|&i| tasks[i].clone())
                .collect();
            let test: Vec<&ForecastTask> = split
                .test
                .iter()
                .filter(|&&i| filter.admits(label_of(i)))
                .map(|&i| &tasks[i])
                .collect();
            let tag = format!("forecast {} {}", filter.table_name(), spec.kind.table_name());
            if test.is_empty() {
                return Err(format!("{tag}: empty test set, row skipped"));
            }
            let model = fit_forecaster(spec, &train).map_err(|e| format!("{tag}: {e}, row skipped"))?;
            let y: Vec<f64> = test.iter().map(|t| t.target).collect();
            let yhat: Vec<f64> = test.iter().map(|t| model.predict_row(&t.predictors)).collect();
            let (rmse, mae, r2_oos) = regression_metrics(&y, &yhat);
            Ok(ForecastMetrics {
                regime: filter.table_name().to_string(),
                model: spec.kind.table_name().to_string(),
                rmse,
                mae,
                r2_oos,
                n_test: test.len(),
            })
        })
        .collect();
    let mut report = ForecastReport::default();
    for r in results {
        match r {
            Ok(row) => report.rows.push(row),
            Err(w) => {
                log::warn!("{w}");
                report.warnings.push(w);
            }
        }
    }
    report
}

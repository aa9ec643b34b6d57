//! Forecasting and classification models behind a common spec/fit/predict
//! surface. Fitted models serialise to JSON (trees as pre-order node lists,
//! linear models as coefficient arrays).

pub mod boosted;
pub mod forest;
pub mod linear;
pub mod logistic;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use boosted::{fit_boosted, BoostLoss, BoostedModel, BoostedParams};
pub use forest::{fit_forest, ForestModel, ForestParams};
pub use linear::{fit_ols, fit_var1, LinearModel, Var1Model};
pub use logistic::{fit_logistic, LogisticModel, LogisticParams};

use crate::error::{NeedError, Result};

/// One-step-ahead emissions forecast row keyed by (country, t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastTask {
    pub country_code: String,
    pub year: i32,
    /// Default set: ln_co2_t, ln_gdp_t, epsilon_t, velocity_t.
    pub predictors: Vec<f64>,
    /// ln_co2 at t+1.
    pub target: f64,
    /// ln_gdp at t+1; only the VAR(1) uses it.
    pub gdp_target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierTask {
    pub country_code: String,
    pub year: i32,
    pub features: Vec<f64>,
    pub label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Ols,
    Var1,
    Forest,
    Boosted,
    Logistic,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ols => "ols",
            ModelKind::Var1 => "var1",
            ModelKind::Forest => "forest",
            ModelKind::Boosted => "boosted",
            ModelKind::Logistic => "logistic",
        }
    }

    /// Column label used in metric tables.
    pub fn table_name(self) -> &'static str {
        match self {
            ModelKind::Ols => "OLS",
            ModelKind::Var1 => "VAR(1)",
            ModelKind::Forest => "RF",
            ModelKind::Boosted => "XGB",
            ModelKind::Logistic => "Logit",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = NeedError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ols" => Ok(ModelKind::Ols),
            "var1" | "var(1)" | "var" => Ok(ModelKind::Var1),
            "forest" | "rf" => Ok(ModelKind::Forest),
            "boosted" | "xgb" | "gbt" => Ok(ModelKind::Boosted),
            "logistic" | "logit" => Ok(ModelKind::Logistic),
            _ => Err(NeedError::invalid(format!("unknown model '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub hyperparameters: BTreeMap<String, String>,
    pub seed: u64,
}

/// Validated, typed hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Ols,
    Var1,
    Forest(ForestParams),
    Boosted(BoostedParams),
    Logistic(LogisticParams),
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| NeedError::config(key, format!("cannot parse '{value}'")))
}

impl ModelSpec {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        ModelSpec {
            kind,
            hyperparameters: BTreeMap::new(),
            seed,
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.hyperparameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn params(&self) -> Result<ModelParams> {
        let unknown = |k: &str| NeedError::config(k, format!("not a hyperparameter of {}", self.kind));
        match self.kind {
            ModelKind::Ols | ModelKind::Var1 => {
                if let Some(k) = self.hyperparameters.keys().next() {
                    return Err(unknown(k));
                }
                Ok(if self.kind == ModelKind::Ols {
                    ModelParams::Ols
                } else {
                    ModelParams::Var1
                })
            }
            ModelKind::Forest => {
                let mut p = ForestParams::default();
                for (k, v) in &self.hyperparameters {
                    match k.as_str() {
                        "n_trees" => p.n_trees = parse(k, v)?,
                        "max_depth" => p.max_depth = parse(k, v)?,
                        "mtry" => p.mtry = Some(parse(k, v)?),
                        "min_samples_leaf" => p.min_samples_leaf = parse(k, v)?,
                        "bootstrap" => p.bootstrap = parse(k, v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                if p.n_trees == 0 || p.mtry == Some(0) {
                    return Err(NeedError::config("n_trees", "n_trees and mtry must be positive"));
                }
                Ok(ModelParams::Forest(p))
            }
            ModelKind::Boosted => {
                let mut p = BoostedParams::default();
                for (k, v) in &self.hyperparameters {
                    match k.as_str() {
                        "n_rounds" => p.n_rounds = parse(k, v)?,
                        "max_depth" => p.max_depth = parse(k, v)?,
                        "learning_rate" => p.learning_rate = parse(k, v)?,
                        "lambda" => p.lambda = parse(k, v)?,
                        "min_child_weight" => p.min_child_weight = parse(k, v)?,
                        "subsample" => p.subsample = parse(k, v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                if !(p.learning_rate > 0.0) {
                    return Err(NeedError::config("learning_rate", "must be positive"));
                }
                if !(p.subsample > 0.0 && p.subsample <= 1.0) {
                    return Err(NeedError::config("subsample", "must lie in (0, 1]"));
                }
                if !(p.lambda >= 0.0) {
                    return Err(NeedError::config("lambda", "must be non-negative"));
                }
                Ok(ModelParams::Boosted(p))
            }
            ModelKind::Logistic => {
                let mut p = LogisticParams::default();
                for (k, v) in &self.hyperparameters {
                    match k.as_str() {
                        "lambda" => p.lambda = parse(k, v)?,
                        "max_iter" => p.max_iter = parse(k, v)?,
                        "tol" => p.tol = parse(k, v)?,
                        "standardize" => p.standardize = parse(k, v)?,
                        _ => return Err(unknown(k)),
                    }
                }
                if !(p.lambda >= 0.0) || !(p.tol > 0.0) {
                    return Err(NeedError::config("lambda", "lambda must be >= 0 and tol > 0"));
                }
                Ok(ModelParams::Logistic(p))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FittedModel {
    Ols(LinearModel),
    Var1(Var1Model),
    Forest(ForestModel),
    Boosted(BoostedModel),
    Logistic(LogisticModel),
}

impl FittedModel {
    /// Prediction for one row. For VAR(1) the first two features must be
    /// (ln_co2_t, ln_gdp_t); the ln_co2 forecast is returned.
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        match self {
            FittedModel::Ols(m) => m.predict_row(x),
            FittedModel::Var1(m) => m.forecast([x[0], x[1]])[0],
            FittedModel::Forest(m) => m.predict_row(x),
            FittedModel::Boosted(m) => m.predict_row(x),
            FittedModel::Logistic(m) => m.predict_row(x),
        }
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        x.iter().map(|r| self.predict_row(r)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Fits a regression model for one-step-ahead forecasting.
pub fn fit_forecaster(spec: &ModelSpec, tasks: &[ForecastTask]) -> Result<FittedModel> {
    let x: Vec<Vec<f64>> = tasks.iter().map(|t| t.predictors.clone()).collect();
    let y: Vec<f64> = tasks.iter().map(|t| t.target).collect();
    match spec.params()? {
        ModelParams::Ols => fit_ols(&x, &y).map(FittedModel::Ols),
        ModelParams::Var1 => {
            let pairs: Vec<([f64; 2], [f64; 2])> = tasks
                .iter()
                .map(|t| ([t.predictors[0], t.predictors[1]], [t.target, t.gdp_target]))
                .collect();
            fit_var1(&pairs).map(FittedModel::Var1)
        }
        ModelParams::Forest(p) => fit_forest(&x, &y, p, spec.seed).map(FittedModel::Forest),
        ModelParams::Boosted(p) => {
            fit_boosted(&x, &y, BoostLoss::SquaredError, p, spec.seed).map(FittedModel::Boosted)
        }
        ModelParams::Logistic(_) => Err(NeedError::invalid("logistic is a classifier, not a forecaster")),
    }
}

/// Fits a probabilistic classifier; predictions are class-1 scores in [0, 1].
pub fn fit_classifier(spec: &ModelSpec, tasks: &[ClassifierTask]) -> Result<FittedModel> {
    let x: Vec<Vec<f64>> = tasks.iter().map(|t| t.features.clone()).collect();
    let y: Vec<f64> = tasks.iter().map(|t| f64::from(u8::from(t.label))).collect();
    match spec.params()? {
        ModelParams::Forest(p) => fit_forest(&x, &y, p, spec.seed).map(FittedModel::Forest),
        ModelParams::Boosted(p) => fit_boosted(&x, &y, BoostLoss::Logistic, p, spec.seed).map(FittedModel::Boosted),
        ModelParams::Logistic(p) => fit_logistic(&x, &y, p).map(FittedModel::Logistic),
        _ => Err(NeedError::invalid(format!("{} is not a classifier", spec.kind))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::new(ModelKind::Forest, 1).with("n_trees", 10).params().is_ok());
        let err = ModelSpec::new(ModelKind::Forest, 1).with("depth", 3).params().unwrap_err();
        assert!(err.to_string().contains("depth"));
        assert!(ModelSpec::new(ModelKind::Boosted, 1).with("learning_rate", "x").params().is_err());
        assert!(ModelSpec::new(ModelKind::Ols, 1).with("alpha", 1).params().is_err());
        assert!("xgb".parse::<ModelKind>().unwrap() == ModelKind::Boosted);
        assert!("mlp".parse::<ModelKind>().is_err());
    }

    #[test]
    fn single_predictor_identity() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.7 - 1.0]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0]).collect();
        let m = fit_ols(&x, &y).unwrap();
        assert!((m.coefficients[0] - 1.0).abs() < 1e-12);
        assert!(m.intercept.abs() < 1e-12);
    }

    #[test]
    fn constant_forest_and_boost() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, (i * 7 % 5) as f64]).collect();
        let y = vec![2.5; 30];
        let f = fit_forest(&x, &y, ForestParams::default(), 3).unwrap();
        let b = fit_boosted(&x, &y, BoostLoss::SquaredError, BoostedParams::default(), 3).unwrap();
        for r in &x {
            assert_eq!(f.predict_row(r), 2.5);
            assert_eq!(b.predict_row(r), 2.5);
        }
    }

    #[test]
    fn logistic_rejects_one_class() {
        let x: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let err = fit_logistic(&x, &[0.0; 5], LogisticParams::default()).unwrap_err();
        assert!(err.to_string().contains("degenerate labels"));
    }

    #[test]
    fn tree_json_round_trip() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, ((i * 13) % 7) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| if r[0] > 20.0 { 1.0 } else { 0.0 }).collect();
        let spec = ModelSpec::new(ModelKind::Boosted, 9).with("n_rounds", 5);
        let tasks: Vec<ClassifierTask> = x
            .iter()
            .zip(&y)
            .enumerate()
            .map(|(i, (r, l))| ClassifierTask {
                country_code: "A".into(),
                year: i as i32,
                features: r.clone(),
                label: *l == 1.0,
            })
            .collect();
        let m = fit_classifier(&spec, &tasks).unwrap();
        let back = FittedModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(m.predict(&x), back.predict(&x));
    }
}

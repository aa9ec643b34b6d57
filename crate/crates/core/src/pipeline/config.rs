//! Run configuration: a plain `key = value` file plus command-line overrides.
//!
//! ```text
//! # demo.cfg
//! input = data/panel.csv
//! out = results
//! seed = 7
//! method = both
//! forest.n_trees = 100
//! ```
//!
//! Keys accept `-` or `_` interchangeably. Dotted keys (`forest.n_trees`)
//! set model hyperparameters for every model of that kind.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::elasticity::SmootherConfig;
use crate::energetics::EquilibriumSpec;
use crate::error::{NeedError, Result};
use crate::evaluation::baselines::BaselineKind;
use crate::evaluation::early_warning::Detector;
use crate::evaluation::events::EventTarget;
use crate::evaluation::forecast::PredictorSet;
use crate::evaluation::split::SplitSpec;
use crate::models::{ModelKind, ModelSpec};
use crate::panel::{CsvLayout, IngestConfig, WideLayout};
use crate::regime::{FeatureSet, RegimeMethod, TercileIndicator};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUT: &str = "need_out";

/// Every plain key with its default; `None` means "unset unless given".
pub const KEYS: &[(&str, Option<&str>)] = &[
    ("input", None),
    ("out", Some(DEFAULT_OUT)),
    ("seed", Some("42")),
    ("layout", Some("long")),
    ("id_column", Some("Country Code")),
    ("name_column", Some("Country Name")),
    ("indicator_column", Some("Series Code")),
    ("year_columns", Some("")),
    ("co2_indicator", Some("EN.ATM.CO2E.KT")),
    ("gdp_indicator", Some("NY.GDP.MKTP.KD")),
    ("year_min", Some("1991")),
    ("year_max", Some("2022")),
    ("window_length", Some("5")),
    ("smoother", Some("auto")),
    ("process_variance", Some("0.01")),
    ("observation_variance", Some("0.1")),
    ("equilibrium", Some("country_mean")),
    ("method", Some("both")),
    ("indicator", Some("lagrangian")),
    ("features", Some("diagnostic")),
    ("forecast_regimes", Some("exogenous_tercile")),
    ("earlywarn_regimes", Some("endogenous_kmeans")),
    ("predictors", Some("default")),
    ("models", Some("ols,forest,var1,boosted")),
    ("detectors", Some("kurt5,skew5,varctrl5,forest,boosted,logistic")),
    ("test_fraction", Some("0.25")),
    ("min_rows", Some("4")),
    ("horizon", Some("2")),
    ("alarm_window", Some("3")),
    ("event_targets", Some("global,store-dominant,transitional,flow-dominant")),
    ("subregion_target", Some("global")),
    ("debug_dumps", Some("false")),
    ("plots", Some("true")),
    ("workers", None),
];

pub const WORKERS_ENV: &str = "NEED_WORKERS";

fn normalize_key(k: &str) -> String {
    k.trim().trim_start_matches("--").replace('-', "_")
}

fn is_known(key: &str) -> bool {
    if KEYS.iter().any(|(k, _)| *k == key) {
        return true;
    }
    match key.split_once('.') {
        Some((kind, param)) => !param.is_empty() && kind.parse::<ModelKind>().is_ok(),
        None => false,
    }
}

/// Raw key/value pairs in precedence order: later inserts win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    entries: BTreeMap<String, String>,
}

impl Settings {
    pub fn new() -> Self {
        Settings::default()
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        let key = normalize_key(key);
        if !is_known(&key) {
            return Err(NeedError::config(key, "unknown configuration key"));
        }
        self.entries.insert(key, value.into().trim().to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut s = Settings::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(NeedError::config(
                    format!("line {}", n + 1),
                    format!("expected 'key = value', got '{line}'"),
                ));
            };
            let v = v.split(" #").next().unwrap_or("");
            s.set(k, v)?;
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| NeedError::config("config", format!("cannot read {}: {e}", path.display())))?;
        Settings::parse_str(&text)
    }

    /// Applies `other` on top of `self`.
    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.entries {
            self.entries.insert(k.clone(), v.clone());
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub ingest: IngestSettings,
    pub window_length: usize,
    pub smoother: SmootherConfig,
    pub equilibrium: EquilibriumSpec,
    pub methods: Vec<RegimeMethod>,
    pub indicator: TercileIndicator,
    pub features: FeatureSet,
    pub forecast_regimes: RegimeMethod,
    pub earlywarn_regimes: RegimeMethod,
    pub predictors: PredictorSet,
    pub models: Vec<ModelSpec>,
    pub detectors: Vec<Detector>,
    pub split: SplitSpec,
    pub horizon: usize,
    pub alarm_window: usize,
    pub event_targets: Vec<EventTarget>,
    pub subregion_target: EventTarget,
    pub debug_dumps: bool,
    pub plots: bool,
    pub workers: Option<usize>,
    /// Resolved value of every key, for the manifest.
    pub echo: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSettings {
    pub wide: Option<WideSettings>,
    pub year_min: i32,
    pub year_max: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WideSettings {
    pub id_column: String,
    pub name_column: Option<String>,
    pub indicator_column: String,
    pub year_columns: Vec<String>,
    pub co2_indicator: String,
    pub gdp_indicator: String,
}

fn typed<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| NeedError::config(key, format!("invalid value '{value}': {e}")))
}

fn list(value: &str) -> Vec<&str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(NeedError::config(key, format!("expected true/false, got '{value}'"))),
    }
}

fn parse_methods(key: &str, value: &str) -> Result<Vec<RegimeMethod>> {
    if value == "both" {
        return Ok(vec![RegimeMethod::ExogenousTercile, RegimeMethod::EndogenousKmeans]);
    }
    let methods: Vec<RegimeMethod> = list(value)
        .into_iter()
        .map(|m| typed(key, m))
        .collect::<Result<_>>()?;
    if methods.is_empty() {
        return Err(NeedError::config(key, "at least one method is required"));
    }
    Ok(methods)
}

fn parse_equilibrium(key: &str, value: &str) -> Result<EquilibriumSpec> {
    match value {
        "country_mean" | "country-mean" => Ok(EquilibriumSpec::CountryMean),
        "global_mean" | "global-mean" => Ok(EquilibriumSpec::GlobalMean),
        v => {
            let x: f64 = v
                .strip_prefix("fixed:")
                .unwrap_or(v)
                .parse()
                .map_err(|_| NeedError::config(key, format!("expected country_mean, global_mean or a number, got '{v}'")))?;
            if !x.is_finite() {
                return Err(NeedError::config(key, "fixed equilibrium must be finite"));
            }
            Ok(EquilibriumSpec::Fixed(x))
        }
    }
}

impl RunConfig {
    pub fn from_settings(settings: &Settings) -> Result<Self> {
        let mut echo = BTreeMap::new();
        for (k, default) in KEYS {
            if let Some(v) = settings.get(k).or(*default) {
                echo.insert(k.to_string(), v.to_string());
            }
        }
        let mut hyper: BTreeMap<ModelKind, BTreeMap<String, String>> = BTreeMap::new();
        for (k, v) in settings.iter() {
            if let Some((kind, param)) = k.split_once('.') {
                let kind: ModelKind = typed(k, kind)?;
                hyper.entry(kind).or_default().insert(param.to_string(), v.to_string());
                echo.insert(k.to_string(), v.to_string());
            }
        }
        let get = |k: &str| echo.get(k).map(String::as_str);
        let req = |k: &str| get(k).unwrap_or("");

        let seed: u64 = typed("seed", req("seed"))?;
        let wide = match req("layout") {
            "long" => None,
            "wide" => Some(WideSettings {
                id_column: req("id_column").to_string(),
                name_column: Some(req("name_column").to_string()).filter(|s| !s.is_empty()),
                indicator_column: req("indicator_column").to_string(),
                year_columns: list(req("year_columns")).into_iter().map(String::from).collect(),
                co2_indicator: req("co2_indicator").to_string(),
                gdp_indicator: req("gdp_indicator").to_string(),
            }),
            other => return Err(NeedError::config("layout", format!("expected long or wide, got '{other}'"))),
        };
        let ingest = IngestSettings {
            wide,
            year_min: typed("year_min", req("year_min"))?,
            year_max: typed("year_max", req("year_max"))?,
        };
        if ingest.year_min > ingest.year_max {
            return Err(NeedError::config("year_min", "must not exceed year_max"));
        }
        let window_length: usize = typed("window_length", req("window_length"))?;
        if window_length < 3 {
            return Err(NeedError::config("window_length", "must be at least 3"));
        }

        let auto_tune = match req("smoother") {
            "auto" => true,
            "fixed" => false,
            other => return Err(NeedError::config("smoother", format!("expected auto or fixed, got '{other}'"))),
        };
        let smoother = SmootherConfig {
            process_variance: typed("process_variance", req("process_variance"))?,
            observation_variance: typed("observation_variance", req("observation_variance"))?,
            auto_tune,
        };
        smoother
            .validate()
            .map_err(|e| NeedError::config("process_variance", e.to_string()))?;

        let models: Vec<ModelSpec> = list(req("models"))
            .into_iter()
            .map(|m| {
                let kind: ModelKind = typed("models", m)?;
                if kind == ModelKind::Logistic {
                    return Err(NeedError::config("models", "logistic is a classifier, not a forecaster"));
                }
                Ok(ModelSpec {
                    kind,
                    hyperparameters: hyper.get(&kind).cloned().unwrap_or_default(),
                    seed,
                })
            })
            .collect::<Result<_>>()?;
        let detectors: Vec<Detector> = list(req("detectors"))
            .into_iter()
            .map(|d| {
                if let Ok(b) = d.parse::<BaselineKind>() {
                    return Ok(Detector::Baseline(b));
                }
                let kind: ModelKind = typed("detectors", d)?;
                if matches!(kind, ModelKind::Ols | ModelKind::Var1) {
                    return Err(NeedError::config("detectors", format!("{kind} is not a classifier")));
                }
                Ok(Detector::Model(ModelSpec {
                    kind,
                    hyperparameters: hyper.get(&kind).cloned().unwrap_or_default(),
                    seed,
                }))
            })
            .collect::<Result<_>>()?;
        for spec in models
            .iter()
            .chain(detectors.iter().filter_map(|d| match d {
                Detector::Model(m) => Some(m),
                Detector::Baseline(_) => None,
            }))
        {
            spec.params().map_err(|e| match e {
                NeedError::Config { key, message } => NeedError::config(format!("{}.{key}", spec.kind), message),
                e => e,
            })?;
        }
        for kind in hyper.keys() {
            let used = models.iter().any(|m| m.kind == *kind)
                || detectors
                    .iter()
                    .any(|d| matches!(d, Detector::Model(m) if m.kind == *kind));
            if !used {
                log::warn!("hyperparameters given for {kind}, which is not run");
            }
        }

        let split = SplitSpec {
            test_fraction: typed("test_fraction", req("test_fraction"))?,
            min_rows: typed("min_rows", req("min_rows"))?,
        };
        split
            .validate()
            .map_err(|e| NeedError::config("test_fraction", e.to_string()))?;
        let horizon: usize = typed("horizon", req("horizon"))?;
        if horizon == 0 {
            return Err(NeedError::config("horizon", "must be at least 1"));
        }
        let alarm_window: usize = typed("alarm_window", req("alarm_window"))?;
        if alarm_window == 0 {
            return Err(NeedError::config("alarm_window", "must be at least 1"));
        }
        let event_targets: Vec<EventTarget> = list(req("event_targets"))
            .into_iter()
            .map(|t| typed("event_targets", t))
            .collect::<Result<_>>()?;

        let workers = match get("workers") {
            Some(w) => Some(typed::<usize>("workers", w)?),
            None => match std::env::var(WORKERS_ENV) {
                Ok(w) => Some(typed::<usize>(WORKERS_ENV, &w)?),
                Err(_) => None,
            },
        };
        if workers == Some(0) {
            return Err(NeedError::config("workers", "must be positive"));
        }

        Ok(RunConfig {
            input: get("input").map(PathBuf::from),
            out_dir: PathBuf::from(req("out")),
            seed,
            ingest,
            window_length,
            smoother,
            equilibrium: parse_equilibrium("equilibrium", req("equilibrium"))?,
            methods: parse_methods("method", req("method"))?,
            indicator: typed("indicator", req("indicator"))?,
            features: typed("features", req("features"))?,
            forecast_regimes: typed("forecast_regimes", req("forecast_regimes"))?,
            earlywarn_regimes: typed("earlywarn_regimes", req("earlywarn_regimes"))?,
            predictors: typed("predictors", req("predictors"))?,
            models,
            detectors,
            split,
            horizon,
            alarm_window,
            event_targets,
            subregion_target: typed("subregion_target", req("subregion_target"))?,
            debug_dumps: parse_bool("debug_dumps", req("debug_dumps"))?,
            plots: parse_bool("plots", req("plots"))?,
            workers,
            echo,
        })
    }

    /// Defaults only (seed 42, no input).
    pub fn defaults() -> Self {
        RunConfig::from_settings(&Settings::new()).expect("built-in defaults are valid")
    }

    pub fn ingest_config(&self, source: &str) -> IngestConfig {
        let layout = match &self.ingest.wide {
            None => CsvLayout::Long,
            Some(w) => CsvLayout::Wide(WideLayout {
                id_column: w.id_column.clone(),
                name_column: w.name_column.clone(),
                indicator_column: w.indicator_column.clone(),
                year_columns: w.year_columns.clone(),
                co2_indicator: w.co2_indicator.clone(),
                gdp_indicator: w.gdp_indicator.clone(),
            }),
        };
        IngestConfig {
            layout,
            year_min: self.ingest.year_min,
            year_max: self.ingest.year_max,
            window_length: self.window_length,
            source: source.to_string(),
        }
    }

    pub fn input_path(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| NeedError::config("input", "no input file given"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::early_warning::{DEFAULT_ALARM_WINDOW, DEFAULT_HORIZON};

    #[test]
    fn defaults_resolve() {
        let c = RunConfig::defaults();
        assert_eq!(c.seed, DEFAULT_SEED);
        assert_eq!(c.window_length, 5);
        assert_eq!(c.methods.len(), 2);
        assert_eq!(c.models.len(), 4);
        assert_eq!(c.detectors.len(), 6);
        assert_eq!(c.event_targets.len(), 4);
        assert!(c.smoother.auto_tune);
        assert_eq!((c.horizon, c.alarm_window), (DEFAULT_HORIZON, DEFAULT_ALARM_WINDOW));
    }

    #[test]
    fn file_then_override() {
        let mut s = Settings::parse_str("# comment\nseed = 7\nwindow-length = 6\nforest.n_trees = 10 # few\n").unwrap();
        let mut cli = Settings::new();
        cli.set("--window-length", "7").unwrap();
        s.merge(&cli);
        let c = RunConfig::from_settings(&s).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.window_length, 7);
        let forest = c.models.iter().find(|m| m.kind == ModelKind::Forest).unwrap();
        assert_eq!(forest.hyperparameters["n_trees"], "10");
        assert_eq!(c.echo["forest.n_trees"], "10");
    }

    fn key_of(e: NeedError) -> String {
        match e {
            NeedError::Config { key, .. } => key,
            e => panic!("expected config error, got {e}"),
        }
    }

    #[test]
    fn errors_name_the_key() {
        let mut s = Settings::new();
        assert_eq!(key_of(s.set("colour", "red").unwrap_err()), "colour");
        s.set("models", "ols,neural").unwrap();
        assert_eq!(key_of(RunConfig::from_settings(&s).unwrap_err()), "models");
        let mut s = Settings::new();
        s.set("forest.depth", "3").unwrap();
        assert_eq!(key_of(RunConfig::from_settings(&s).unwrap_err()), "forest.depth");
        let mut s = Settings::new();
        s.set("seed", "abc").unwrap();
        assert_eq!(key_of(RunConfig::from_settings(&s).unwrap_err()), "seed");
        assert!(Settings::parse_str("just words").is_err());
    }

    #[test]
    fn equilibrium_forms() {
        assert_eq!(parse_equilibrium("e", "global_mean").unwrap(), EquilibriumSpec::GlobalMean);
        assert_eq!(parse_equilibrium("e", "fixed:0.5").unwrap(), EquilibriumSpec::Fixed(0.5));
        assert_eq!(parse_equilibrium("e", "1.5").unwrap(), EquilibriumSpec::Fixed(1.5));
        assert!(parse_equilibrium("e", "median").is_err());
    }
}

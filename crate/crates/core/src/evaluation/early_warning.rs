//! Early-warning detectors scored against regime-entry events.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::baselines::{baseline_scores, BaselineKind};
use super::events::EventPanel;
use super::metrics::{auprc, auroc, best_threshold, pr_curve, Confusion};
use super::split::{chronological_split, Split, SplitSpec};
use crate::elasticity::RawElasticity;
use crate::energetics::EnergeticsState;
use crate::error::{NeedError, Result};
use crate::models::{fit_classifier, ClassifierTask, ModelKind, ModelSpec};
use crate::panel::Subregion;

pub const DEFAULT_ALARM_WINDOW: usize = 3;
pub const DEFAULT_HORIZON: usize = 2;
pub const CV_BETA: f64 = 0.5;
pub const CV_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub enum Detector {
    Baseline(BaselineKind),
    Model(ModelSpec),
}

impl Detector {
    pub fn name(&self) -> &'static str {
        match self {
            Detector::Baseline(b) => b.as_str(),
            Detector::Model(m) => m.kind.table_name(),
        }
    }

    /// Kurt5, Skew5, VarCtrl5, RF, XGB, Logit with default hyperparameters.
    pub fn defaults(seed: u64) -> Vec<Detector> {
        let mut d: Vec<Detector> = BaselineKind::ALL.iter().map(|b| Detector::Baseline(*b)).collect();
        for k in [ModelKind::Forest, ModelKind::Boosted, ModelKind::Logistic] {
            d.push(Detector::Model(ModelSpec::new(k, seed)));
        }
        d
    }
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Labeled rows with their features, baseline scores and the event list.
#[derive(Debug, Clone)]
pub struct EwDataset {
    pub tasks: Vec<ClassifierTask>,
    /// Kurt5, Skew5, VarCtrl5 per task; undefined scores are -inf.
    pub baselines: Vec<[f64; 3]>,
    pub events: Vec<(String, i32)>,
    pub subregions: Vec<Option<Subregion>>,
}

impl EwDataset {
    pub fn build(
        events: &EventPanel,
        states: &[EnergeticsState],
        raw: &[RawElasticity],
        subregions: &BTreeMap<String, Subregion>,
    ) -> Self {
        let features: BTreeMap<(&str, i32), &EnergeticsState> =
            states.iter().map(|s| ((s.country_code.as_str(), s.year), s)).collect();
        let mut base: BTreeMap<(&str, i32), [f64; 3]> = BTreeMap::new();
        for r in raw {
            let cols: Vec<Vec<Option<f64>>> = BaselineKind::ALL
                .iter()
                .map(|k| baseline_scores(*k, &r.epsilon_raw))
                .collect();
            for (i, y) in r.years.iter().enumerate() {
                let v = [0, 1, 2].map(|k| cols[k][i].unwrap_or(f64::NEG_INFINITY));
                base.insert((r.country_code.as_str(), *y), v);
            }
        }
        let mut ds = EwDataset {
            tasks: vec![],
            baselines: vec![],
            events: events.events().map(|(c, y)| (c.to_string(), y)).collect(),
            subregions: vec![],
        };
        for row in events.labeled() {
            let key = (row.country_code.as_str(), row.year);
            let Some(s) = features.get(&key) else { continue };
            ds.tasks.push(ClassifierTask {
                country_code: row.country_code.clone(),
                year: row.year,
                features: s.feature_row().to_vec(),
                label: row.label == Some(true),
            });
            ds.baselines.push(base.get(&key).copied().unwrap_or([f64::NEG_INFINITY; 3]));
            ds.subregions.push(subregions.get(&row.country_code).copied());
        }
        ds
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Rows and events of the countries accepted by `keep`.
    pub fn restrict(&self, keep: impl Fn(&str, Option<Subregion>) -> bool) -> EwDataset {
        let mut countries = BTreeSet::new();
        let mut out = EwDataset {
            tasks: vec![],
            baselines: vec![],
            events: vec![],
            subregions: vec![],
        };
        for i in 0..self.len() {
            if keep(&self.tasks[i].country_code, self.subregions[i]) {
                countries.insert(self.tasks[i].country_code.clone());
                out.tasks.push(self.tasks[i].clone());
                out.baselines.push(self.baselines[i]);
                out.subregions.push(self.subregions[i]);
            }
        }
        out.events = self
            .events
            .iter()
            .filter(|(c, _)| countries.contains(c))
            .cloned()
            .collect();
        out
    }

    pub fn base_rate(&self, rows: &[usize]) -> f64 {
        rows.iter().filter(|&&i| self.tasks[i].label).count() as f64 / rows.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EarlyWarningMetrics {
    pub regime: String,
    pub model: String,
    pub auprc: f64,
    pub auroc: f64,
    pub base_rate: f64,
    pub pr_lift: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub lead_time_mean: f64,
    pub detect_rate: f64,
    pub n_test: usize,
    pub n_events: usize,
    pub threshold: f64,
}

/// Scores for every row of `ds`; model detectors are fit on `train` only.
pub fn detector_scores(detector: &Detector, ds: &EwDataset, train: &[usize]) -> Result<Vec<f64>> {
    match detector {
        Detector::Baseline(k) => {
            let col = BaselineKind::ALL.iter().position(|b| b == k).unwrap();
            Ok(ds.baselines.iter().map(|b| b[col]).collect())
        }
        Detector::Model(spec) => {
            let tasks: Vec<ClassifierTask> = train.iter().map(|&i| ds.tasks[i].clone()).collect();
            let model = fit_classifier(spec, &tasks)?;
            Ok(ds.tasks.iter().map(|t| model.predict_row(&t.features)).collect())
        }
    }
}

/// Metrics on `test` with the F1-optimal threshold from `train`. `None` when
/// the test rows hold no positive label.
pub fn evaluate_scores(
    ds: &EwDataset,
    scores: &[f64],
    train: &[usize],
    test: &[usize],
    window: usize,
) -> Option<EarlyWarningMetrics> {
    let test_labels: Vec<bool> = test.iter().map(|&i| ds.tasks[i].label).collect();
    if !test_labels.iter().any(|l| *l) {
        return None;
    }
    let test_scores: Vec<f64> = test.iter().map(|&i| scores[i]).collect();
    let train_scores: Vec<f64> = train.iter().map(|&i| scores[i]).collect();
    let train_labels: Vec<bool> = train.iter().map(|&i| ds.tasks[i].label).collect();
    let threshold = best_threshold(&train_scores, &train_labels, 1.0);
    let conf = Confusion::at(&test_scores, &test_labels, threshold);

    let test_rows: HashSet<(&str, i32)> = test
        .iter()
        .map(|&i| (ds.tasks[i].country_code.as_str(), ds.tasks[i].year))
        .collect();
    let alarm: HashSet<(&str, i32)> = test
        .iter()
        .filter(|&&i| scores[i] >= threshold)
        .map(|&i| (ds.tasks[i].country_code.as_str(), ds.tasks[i].year))
        .collect();
    let w = window as i32;
    let (mut counted, mut detected, mut lead_sum) = (0usize, 0usize, 0.0);
    for (c, e) in &ds.events {
        let years = (e - w)..*e;
        if !years.clone().any(|t| test_rows.contains(&(c.as_str(), t))) {
            continue;
        }
        counted += 1;
        if let Some(first) = years.into_iter().find(|t| alarm.contains(&(c.as_str(), *t))) {
            detected += 1;
            lead_sum += (e - first) as f64;
        }
    }
    let base_rate = test_labels.iter().filter(|l| **l).count() as f64 / test.len() as f64;
    let auprc = auprc(&test_scores, &test_labels);
    Some(EarlyWarningMetrics {
        regime: String::new(),
        model: String::new(),
        auprc,
        auroc: auroc(&test_scores, &test_labels),
        base_rate,
        pr_lift: auprc / base_rate,
        precision: conf.precision(),
        recall: conf.recall(),
        f1: conf.f1(),
        lead_time_mean: if detected > 0 {
            lead_sum / detected as f64
        } else {
            f64::NAN
        },
        detect_rate: if counted > 0 {
            detected as f64 / counted as f64
        } else {
            0.0
        },
        n_test: test.len(),
        n_events: counted,
        threshold,
    })
}

/// Test-set precision-recall points (recall, precision) of one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub regime: String,
    pub model: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Default)]
pub struct EarlyWarningReport {
    pub rows: Vec<EarlyWarningMetrics>,
    pub curves: Vec<PrCurve>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EwSettings {
    pub split: SplitSpec,
    pub window: usize,
}

impl Default for EwSettings {
    fn default() -> Self {
        EwSettings {
            split: SplitSpec::default(),
            window: DEFAULT_ALARM_WINDOW,
        }
    }
}

fn run_detectors(
    ds: &EwDataset,
    split: &Split,
    detectors: &[Detector],
    regime: &str,
    settings: &EwSettings,
) -> EarlyWarningReport {
    let results: Vec<std::result::Result<(EarlyWarningMetrics, PrCurve), String>> = detectors
        .par_iter()
        .map(|d| {
            let tag = format!("early warning {regime} {}", d.name());
            let scores = detector_scores(d, ds, &split.train).map_err(|e| format!("{tag}: {e}, row suppressed"))?;
            let mut m = evaluate_scores(ds, &scores, &split.train, &split.test, settings.window)
                .ok_or_else(|| format!("{tag}: no positives in test, row suppressed"))?;
            m.regime = regime.to_string();
            m.model = d.name().to_string();
            let test_scores: Vec<f64> = split.test.iter().map(|&i| scores[i]).collect();
            let test_labels: Vec<bool> = split.test.iter().map(|&i| ds.tasks[i].label).collect();
            let curve = PrCurve {
                regime: m.regime.clone(),
                model: m.model.clone(),
                points: pr_curve(&test_scores, &test_labels),
            };
            Ok((m, curve))
        })
        .collect();
    let mut report = EarlyWarningReport::default();
    for r in results {
        match r {
            Ok((m, c)) => {
                report.rows.push(m);
                report.curves.push(c);
            }
            Err(w) => {
                log::warn!("{w}");
                report.warnings.push(w);
            }
        }
    }
    report
}

pub fn early_warning_eval(
    ds: &EwDataset,
    detectors: &[Detector],
    regime: &str,
    settings: &EwSettings,
) -> Result<EarlyWarningReport> {
    if ds.is_empty() {
        return Err(NeedError::insufficient("no labeled rows for early warning"));
    }
    let split = chronological_split(&ds.tasks, &settings.split)?;
    Ok(run_detectors(ds, &split, detectors, regime, settings))
}

/// Country to fold index: sorted countries dealt round-robin.
pub fn country_folds(countries: &BTreeSet<String>, k: usize) -> BTreeMap<String, usize> {
    countries.iter().enumerate().map(|(i, c)| (c.clone(), i % k)).collect()
}

/// Mean F-beta over country-grouped folds (min(5, #countries) of them).
/// Thresholds are picked on the training folds. Folds whose validation part
/// has no positives, or whose training part has none, are skipped.
pub fn cv_fbeta(ds: &EwDataset, detector: &Detector, beta: f64) -> f64 {
    let countries: BTreeSet<String> = ds.tasks.iter().map(|t| t.country_code.clone()).collect();
    let k = CV_FOLDS.min(countries.len());
    if k < 2 {
        return f64::NAN;
    }
    let folds = country_folds(&countries, k);
    let mut scores_sum = 0.0;
    let mut used = 0;
    for f in 0..k {
        let (val, train): (Vec<usize>, Vec<usize>) =
            (0..ds.len()).partition(|&i| folds[&ds.tasks[i].country_code] == f);
        let has_pos = |rows: &[usize]| rows.iter().any(|&i| ds.tasks[i].label);
        if !has_pos(&val) || !has_pos(&train) {
            continue;
        }
        let Ok(scores) = detector_scores(detector, ds, &train) else {
            continue;
        };
        let tr_s: Vec<f64> = train.iter().map(|&i| scores[i]).collect();
        let tr_l: Vec<bool> = train.iter().map(|&i| ds.tasks[i].label).collect();
        let thr = best_threshold(&tr_s, &tr_l, beta);
        let va_s: Vec<f64> = val.iter().map(|&i| scores[i]).collect();
        let va_l: Vec<bool> = val.iter().map(|&i| ds.tasks[i].label).collect();
        scores_sum += Confusion::at(&va_s, &va_l, thr).f_beta(beta);
        used += 1;
    }
    if used == 0 {
        f64::NAN
    } else {
        scores_sum / used as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubregionMetrics {
    pub subregion: Subregion,
    pub metrics: EarlyWarningMetrics,
    pub cv_fbeta: f64,
}

/// Early-warning evaluation repeated on each subregion's slice, with
/// grouped cross-validated F-beta appended.
pub fn subregion_breakdown(
    ds: &EwDataset,
    detectors: &[Detector],
    regime: &str,
    settings: &EwSettings,
) -> (Vec<SubregionMetrics>, Vec<String>) {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for sr in Subregion::ALL {
        let slice = ds.restrict(|_, s| s == Some(sr));
        if slice.events.is_empty() || slice.is_empty() {
            let w = format!("subregion {}: no events, rows suppressed", sr.code());
            log::warn!("{w}");
            warnings.push(w);
            continue;
        }
        let report = match early_warning_eval(&slice, detectors, regime, settings) {
            Ok(r) => r,
            Err(e) => {
                let w = format!("subregion {}: {e}, rows suppressed", sr.code());
                log::warn!("{w}");
                warnings.push(w);
                continue;
            }
        };
        warnings.extend(report.warnings.into_iter().map(|w| format!("subregion {}: {w}", sr.code())));
        let cvs: Vec<f64> = report
            .rows
            .par_iter()
            .map(|m| {
                let d = detectors.iter().find(|d| d.name() == m.model).expect("detector");
                cv_fbeta(&slice, d, CV_BETA)
            })
            .collect();
        for (metrics, cv_fbeta) in report.rows.into_iter().zip(cvs) {
            rows.push(SubregionMetrics {
                subregion: sr,
                metrics,
                cv_fbeta,
            });
        }
    }
    (rows, warnings)
}

//! CSV artifacts exchanged between stages. Floats are written in Rust's
//! shortest round-trip form, so a stage run from cached files sees exactly the
//! values an in-memory run would.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::elasticity::{ElasticitySeries, RawElasticity};
use crate::energetics::EnergeticsState;
use crate::error::{NeedError, Result};
use crate::evaluation::early_warning::{EarlyWarningMetrics, SubregionMetrics};
use crate::evaluation::forecast::ForecastMetrics;
use crate::regime::{RegimeAssignment, RegimeDistribution, RegimeLabel};

pub const PANEL: &str = "panel.csv";
pub const ELASTICITY: &str = "elasticity.csv";
pub const SMOOTHER: &str = "smoother_params.csv";
pub const ENERGETICS: &str = "energetics.csv";
pub const REGIMES: &str = "regimes.csv";
pub const DISTRIBUTION: &str = "regime_distribution.csv";
pub const CLUSTER: &str = "cluster_model.json";
pub const FORECAST: &str = "forecast_metrics.csv";
pub const EARLY_WARNING: &str = "early_warning_metrics.csv";
pub const SUBREGION: &str = "subregion_metrics.csv";
pub const MANIFEST: &str = "run_manifest.json";

pub const ELASTICITY_HEADER: [&str; 5] = ["country_code", "year", "epsilon_raw", "epsilon_se", "epsilon_smooth"];
pub const REGIMES_HEADER: [&str; 7] = [
    "country_code",
    "year",
    "method",
    "label",
    "tension_z",
    "pace_z",
    "instability_z",
];
pub const FORECAST_HEADER: [&str; 6] = ["regime", "model", "rmse", "mae", "r2_oos", "n_test"];
pub const EARLY_WARNING_HEADER: [&str; 11] = [
    "regime",
    "model",
    "auprc",
    "auroc",
    "base_rate",
    "pr_lift",
    "precision",
    "recall",
    "f1",
    "lead_time_mean",
    "detect_rate",
];
pub const SUBREGION_HEADER: [&str; 9] = [
    "subregion",
    "model",
    "precision",
    "recall",
    "f1",
    "auprc",
    "lead_time_mean",
    "detect_rate",
    "cv_fbeta",
];

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn parse_f64(field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| NeedError::Schema(format!("{what}: cannot parse '{field}' as a number")))
}

fn parse_opt(field: &str, what: &str) -> Result<Option<f64>> {
    if field.trim().is_empty() {
        Ok(None)
    } else {
        parse_f64(field, what).map(Some)
    }
}

fn parse_year(field: &str, what: &str) -> Result<i32> {
    field
        .trim()
        .parse()
        .map_err(|_| NeedError::Schema(format!("{what}: cannot parse year '{field}'")))
}

fn reader_with_header<R: Read>(src: R, expected: &[&str], what: &str) -> Result<csv::Reader<R>> {
    let mut r = csv::Reader::from_reader(src);
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != expected {
        return Err(NeedError::Schema(format!(
            "{what}: expected header {}, found {}",
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(r)
}

/// Pooled elasticity table; empty cells are gaps.
pub fn write_elasticity<W: Write>(series: &[ElasticitySeries], dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(ELASTICITY_HEADER)?;
    for s in series {
        for i in 0..s.years.len() {
            w.write_record([
                s.country_code.clone(),
                s.years[i].to_string(),
                opt(s.epsilon_raw[i]),
                opt(s.epsilon_se[i]),
                num(s.epsilon_smooth[i]),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Per-country debug dump without the country column.
pub fn write_elasticity_country<W: Write>(s: &ElasticitySeries, dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(&ELASTICITY_HEADER[1..])?;
    for i in 0..s.years.len() {
        w.write_record([
            s.years[i].to_string(),
            opt(s.epsilon_raw[i]),
            opt(s.epsilon_se[i]),
            num(s.epsilon_smooth[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the raw part of `elasticity.csv` back, one entry per country.
pub fn read_elasticity<R: Read>(src: R, window_length: usize) -> Result<Vec<RawElasticity>> {
    let what = ELASTICITY;
    let mut r = reader_with_header(src, &ELASTICITY_HEADER, what)?;
    let mut out: Vec<RawElasticity> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let code = &rec[0];
        let year = parse_year(&rec[1], what)?;
        if out.last().map(|e| e.country_code.as_str()) != Some(code) {
            out.push(RawElasticity {
                country_code: code.to_string(),
                years: vec![],
                epsilon_raw: vec![],
                epsilon_se: vec![],
                window_length,
                degenerate_anchors: vec![],
            });
        }
        let e = out.last_mut().unwrap();
        e.years.push(year);
        e.epsilon_raw.push(parse_opt(&rec[2], what)?);
        e.epsilon_se.push(parse_opt(&rec[3], what)?);
    }
    Ok(out)
}

pub fn write_smoother_params<W: Write>(series: &[ElasticitySeries], dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(["country_code", "process_variance", "observation_variance", "auto_tune"])?;
    for s in series {
        w.write_record([
            s.country_code.clone(),
            num(s.smoother.process_variance),
            num(s.smoother.observation_variance),
            s.smoother.auto_tune.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn energetics_header() -> Vec<&'static str> {
    let mut h = vec!["country_code", "year"];
    h.extend(EnergeticsState::COLUMNS);
    h.push("total_power");
    h
}

/// Pooled energetics: the twelve state columns plus `total_power`.
pub fn write_energetics<W: Write>(states: &[EnergeticsState], dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(energetics_header())?;
    for s in states {
        let mut row = vec![s.country_code.clone(), s.year.to_string()];
        row.extend(s.feature_row().iter().map(|x| num(*x)));
        row.push(num(s.total_power));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Debug dump: `year` plus the twelve state columns.
pub fn write_energetics_country<W: Write>(states: &[EnergeticsState], dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    let mut h = vec!["year"];
    h.extend(EnergeticsState::COLUMNS);
    w.write_record(h)?;
    for s in states {
        let mut row = vec![s.year.to_string()];
        row.extend(s.feature_row().iter().map(|x| num(*x)));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_energetics<R: Read>(src: R) -> Result<Vec<EnergeticsState>> {
    let what = ENERGETICS;
    let header = energetics_header();
    let mut r = reader_with_header(src, &header, what)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let v: Vec<f64> = (2..header.len())
            .map(|i| parse_f64(&rec[i], what))
            .collect::<Result<_>>()?;
        out.push(EnergeticsState {
            country_code: rec[0].to_string(),
            year: parse_year(&rec[1], what)?,
            epsilon: v[0],
            velocity: v[1],
            acceleration: v[2],
            jerk: v[3],
            kinetic: v[4],
            potential: v[5],
            hamiltonian: v[6],
            lagrangian: v[7],
            accel_energy: v[8],
            jerk_energy: v[9],
            total_energy: v[10],
            power: v[11],
            total_power: v[12],
        });
    }
    Ok(out)
}

pub fn write_regimes<W: Write>(assignments: &[RegimeAssignment], dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(REGIMES_HEADER)?;
    for a in assignments {
        w.write_record([
            a.country_code.clone(),
            a.year.to_string(),
            a.method.as_str().to_string(),
            a.label.as_str().to_string(),
            num(a.features[0]),
            num(a.features[1]),
            num(a.features[2]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_regimes<R: Read>(src: R) -> Result<Vec<RegimeAssignment>> {
    let what = REGIMES;
    let mut r = reader_with_header(src, &REGIMES_HEADER, what)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let bad = |e: NeedError| NeedError::Schema(format!("{what}: {e}"));
        out.push(RegimeAssignment {
            country_code: rec[0].to_string(),
            year: parse_year(&rec[1], what)?,
            method: rec[2].parse().map_err(bad)?,
            label: rec[3].parse().map_err(bad)?,
            features: [
                parse_f64(&rec[4], what)?,
                parse_f64(&rec[5], what)?,
                parse_f64(&rec[6], what)?,
            ],
        });
    }
    Ok(out)
}

/// Label counts by subregion, one block per method, each closed by a total
/// row.
pub fn write_distribution<W: Write>(dists: &[RegimeDistribution], dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    let order = [
        RegimeLabel::FlowDominant,
        RegimeLabel::StoreDominant,
        RegimeLabel::Transitional,
    ];
    let col = |l: RegimeLabel| RegimeLabel::ALL.iter().position(|x| *x == l).unwrap();
    w.write_record(["method", "subregion", "Flow-dominant", "Store-dominant", "Transitional"])?;
    for d in dists {
        let mut emit = |name: &str, counts: &[usize; 3]| -> Result<()> {
            let mut row = vec![d.method.as_str().to_string(), name.to_string()];
            row.extend(order.iter().map(|l| counts[col(*l)].to_string()));
            w.write_record(row)?;
            Ok(())
        };
        for (sr, counts) in &d.rows {
            emit(sr.display_name(), counts)?;
        }
        emit("total", &d.total)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_forecast<W: Write>(rows: &[ForecastMetrics], dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(FORECAST_HEADER)?;
    for r in rows {
        w.write_record([
            r.regime.clone(),
            r.model.clone(),
            num(r.rmse),
            num(r.mae),
            num(r.r2_oos),
            r.n_test.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_forecast<R: Read>(src: R) -> Result<Vec<ForecastMetrics>> {
    let what = FORECAST;
    let mut r = reader_with_header(src, &FORECAST_HEADER, what)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(ForecastMetrics {
            regime: rec[0].to_string(),
            model: rec[1].to_string(),
            rmse: parse_f64(&rec[2], what)?,
            mae: parse_f64(&rec[3], what)?,
            r2_oos: parse_f64(&rec[4], what)?,
            n_test: rec[5]
                .parse()
                .map_err(|_| NeedError::Schema(format!("{what}: bad n_test '{}'", &rec[5])))?,
        });
    }
    Ok(out)
}

pub fn write_early_warning<W: Write>(rows: &[EarlyWarningMetrics], dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(EARLY_WARNING_HEADER)?;
    for m in rows {
        w.write_record([
            m.regime.clone(),
            m.model.clone(),
            num(m.auprc),
            num(m.auroc),
            num(m.base_rate),
            num(m.pr_lift),
            num(m.precision),
            num(m.recall),
            num(m.f1),
            num(m.lead_time_mean),
            num(m.detect_rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The metric columns of `early_warning_metrics.csv` (counts and threshold are
/// not part of the file and come back as zero).
pub fn read_early_warning<R: Read>(src: R) -> Result<Vec<EarlyWarningMetrics>> {
    let what = EARLY_WARNING;
    let mut r = reader_with_header(src, &EARLY_WARNING_HEADER, what)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let f = |i: usize| parse_f64(&rec[i], what);
        out.push(EarlyWarningMetrics {
            regime: rec[0].to_string(),
            model: rec[1].to_string(),
            auprc: f(2)?,
            auroc: f(3)?,
            base_rate: f(4)?,
            pr_lift: f(5)?,
            precision: f(6)?,
            recall: f(7)?,
            f1: f(8)?,
            lead_time_mean: f(9)?,
            detect_rate: f(10)?,
            n_test: 0,
            n_events: 0,
            threshold: 0.0,
        });
    }
    Ok(out)
}

pub fn write_subregion<W: Write>(rows: &[SubregionMetrics], dst: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(dst);
    w.write_record(SUBREGION_HEADER)?;
    for r in rows {
        let m = &r.metrics;
        w.write_record([
            r.subregion.code().to_string(),
            m.model.clone(),
            num(m.precision),
            num(m.recall),
            num(m.f1),
            num(m.auprc),
            num(m.lead_time_mean),
            num(m.detect_rate),
            num(r.cv_fbeta),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Files written during one command. On failure everything it wrote is
/// removed again, so a failed stage never leaves half a bundle behind.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
    created_dirs: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        let mut created_dirs = Vec::new();
        if !root.exists() {
            let mut missing = Vec::new();
            let mut p = root.to_path_buf();
            while !p.as_os_str().is_empty() && !p.exists() {
                missing.push(p.clone());
                if !p.pop() {
                    break;
                }
            }
            fs::create_dir_all(root)?;
            created_dirs = missing;
        }
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
            created_dirs,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes `name` (relative, may contain one subdirectory) through `f`.
    pub fn write(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            if !parent.exists() {
                fs::create_dir_all(parent)?;
                self.created_dirs.push(parent.to_path_buf());
            }
        }
        fs::write(&path, buf)?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    /// Removes everything written so far, then any directories this command
    /// created that are now empty.
    pub fn discard(&mut self) {
        for p in self.written.drain(..) {
            let _ = fs::remove_file(&p);
        }
        self.created_dirs.sort_by_key(|d| std::cmp::Reverse(d.components().count()));
        for d in self.created_dirs.drain(..) {
            let _ = fs::remove_dir(d);
        }
    }
}

/// Opens an upstream artifact, or explains which command produces it.
pub fn open_upstream(root: &Path, name: &str, stage: &'static str) -> Result<fs::File> {
    let path = root.join(name);
    fs::File::open(&path).map_err(|_| NeedError::MissingArtifact { path, stage })
}

/// Rows per country, keyed by country code.
pub fn group_by_country<T>(items: &[T], key: impl Fn(&T) -> &str) -> BTreeMap<String, Vec<&T>> {
    let mut map: BTreeMap<String, Vec<&T>> = BTreeMap::new();
    for it in items {
        map.entry(key(it).to_string()).or_default().push(it);
    }
    map
}

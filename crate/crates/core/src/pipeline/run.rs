//! Stage orchestration: each subcommand loads its upstream artifacts from the
//! output directory, computes, and writes its own artifacts; `run` chains all
//! stages in memory.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::artifacts::{self as art, OutputDir};
use super::compute::{compute_elasticity, compute_energetics, compute_regimes, ElasticityStage, RegimeStage};
use super::config::RunConfig;
use super::plots;
use crate::elasticity::{self, RawElasticity};
use crate::energetics::{EnergeticsState, MIN_RUN};
use crate::error::{NeedError, Result};
use crate::evaluation::baselines::BASELINE_WINDOW;
use crate::evaluation::early_warning::{
    early_warning_eval, subregion_breakdown, EarlyWarningMetrics, EwDataset, EwSettings, PrCurve, SubregionMetrics,
    CV_BETA, CV_FOLDS,
};
use crate::evaluation::events::{label_events, EventTarget};
use crate::evaluation::forecast::{build_forecast_tasks, forecast_eval, regime_lookup, ForecastMetrics, RegimeFilter};
use crate::evaluation::split::chronological_split;
use crate::models::forest::MIN_TREE_ROWS;
use crate::models::linear::{RIDGE_FALLBACK, VAR1_MIN_PAIRS};
use crate::panel::{load_panel, write_long_csv, CsvLayout, IngestConfig, Panel, Subregion};
use crate::regime::{self, regime_distribution, RegimeAssignment, RegimeDistribution, RegimeMethod};
use crate::synth::{generate, write_truth_csv, SynthSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Elasticity,
    Regimes,
    Forecast,
    Earlywarn,
    Run,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Elasticity => "elasticity",
            Stage::Regimes => "regimes",
            Stage::Forecast => "forecast",
            Stage::Earlywarn => "earlywarn",
            Stage::Run => "run",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Data rows per file written by the stage.
    pub outputs: BTreeMap<String, usize>,
    pub counts: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

/// `run_manifest.json`: config echo, fixed constants and per-stage records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub defaults: BTreeMap<String, serde_json::Value>,
    pub stages: BTreeMap<String, StageRecord>,
}

fn fixed_defaults() -> BTreeMap<String, serde_json::Value> {
    let pairs = [
        ("elasticity.window_alignment", json!("trailing; anchor is the last year of the window")),
        ("elasticity.regression", json!("OLS of ln_co2 on ln_gdp with intercept")),
        ("smoother.model", json!("local level, exact diffuse initialisation, RTS smoother")),
        (
            "smoother.tune_grid_log10",
            json!([elasticity::TUNE_GRID_MIN, elasticity::TUNE_GRID_MAX, elasticity::TUNE_GRID_STEP]),
        ),
        ("smoother.variance_floor", json!(elasticity::VARIANCE_FLOOR)),
        ("smoother.tune_min_points", json!(8)),
        ("energetics.min_run", json!(MIN_RUN)),
        ("energetics.differences", json!("central inside runs, one-sided at run ends")),
        ("energetics.kinetic", json!("0.5 * velocity^2")),
        ("energetics.potential", json!("0.5 * (epsilon - epsilon_star)^2")),
        ("energetics.power", json!("difference of the hamiltonian")),
        ("regimes.tercile_order", json!("ascending; bottom store-dominant, middle transitional, top flow-dominant")),
        ("regimes.tercile_ties", json!("value, then country_code, then year")),
        ("regimes.kmeans_k", json!(3)),
        ("regimes.kmeans_starts", json!(regime::KMEANS_STARTS)),
        ("regimes.kmeans_tol", json!(regime::KMEANS_TOL)),
        ("regimes.kmeans_max_iter", json!(regime::KMEANS_MAX_ITER)),
        ("regimes.kmeans_init", json!("farthest point from distinct seeded starts, start 0 nearest the mean; Lloyd then single-point moves")),
        (
            "regimes.kmeans_labels",
            json!("highest mean jerk_energy transitional; of the rest, higher mean lagrangian flow-dominant"),
        ),
        ("models.ridge_fallback", json!(RIDGE_FALLBACK)),
        ("models.var1_min_pairs", json!(VAR1_MIN_PAIRS)),
        ("models.tree_min_rows", json!(MIN_TREE_ROWS)),
        ("forecast.target", json!("ln_co2 at t+1")),
        ("forecast.r2_baseline", json!("test-set mean")),
        ("events.definition", json!("entry into the target regime; global = any regime change")),
        ("events.label", json!("1 iff an event occurs in (t, t+horizon]")),
        ("earlywarn.threshold", json!("maximises F1 on train rows; ties to the highest score")),
        ("earlywarn.alarm", json!("score >= threshold")),
        (
            "earlywarn.lead_time",
            json!("event year minus earliest alarm among test rows in the alarm window"),
        ),
        ("earlywarn.baseline_window", json!(BASELINE_WINDOW)),
        ("earlywarn.cv_folds", json!(CV_FOLDS)),
        ("earlywarn.cv_beta", json!(CV_BETA)),
        ("earlywarn.cv_grouping", json!("countries sorted by code, dealt round-robin")),
    ];
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn echo_without_out(config: &BTreeMap<String, String>) -> BTreeMap<String, String> {
    config.iter().filter(|(k, _)| *k != "out").map(|(k, v)| (k.clone(), v.clone())).collect()
}

impl Manifest {
    fn new(command: &str, config: &BTreeMap<String, String>) -> Self {
        Manifest {
            tool: "need".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: echo_without_out(config),
            defaults: fixed_defaults(),
            stages: BTreeMap::new(),
        }
    }

    /// The manifest already in `dir`, updated for a new command, or a fresh
    /// one.
    fn continue_in(dir: &Path, command: &str, config: &BTreeMap<String, String>) -> Self {
        let prior = std::fs::read(dir.join(art::MANIFEST))
            .ok()
            .and_then(|b| serde_json::from_slice::<Manifest>(&b).ok());
        match prior {
            Some(mut m) => {
                m.command = command.into();
                m.config = echo_without_out(config);
                m.defaults = fixed_defaults();
                m.version = env!("CARGO_PKG_VERSION").into();
                m
            }
            None => Manifest::new(command, config),
        }
    }

    fn write(&self, out: &mut OutputDir) -> Result<()> {
        out.write(art::MANIFEST, |b| {
            serde_json::to_writer_pretty(&mut *b, self)?;
            b.push(b'\n');
            Ok(())
        })
    }
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub warnings: usize,
}

fn file_stem(code: &str) -> String {
    code.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

// ---- stage computations ----

pub fn ingest_input(cfg: &RunConfig) -> Result<Panel> {
    let path = cfg.input_path()?;
    let file = File::open(path).map_err(|e| NeedError::config("input", format!("cannot open {}: {e}", path.display())))?;
    load_panel(BufReader::new(file), &cfg.ingest_config(&path.display().to_string()))
}

fn load_cached_panel(cfg: &RunConfig, dir: &Path) -> Result<Panel> {
    let f = art::open_upstream(dir, art::PANEL, "ingest")?;
    let ic = IngestConfig {
        layout: CsvLayout::Long,
        source: art::PANEL.into(),
        ..cfg.ingest_config(art::PANEL)
    };
    load_panel(BufReader::new(f), &ic)
}

#[derive(Debug, Clone)]
pub struct ElasticityOutput {
    pub stage: ElasticityStage,
    pub states: Vec<EnergeticsState>,
    pub warnings: Vec<String>,
}

pub fn elasticity_stage(cfg: &RunConfig, panel: &Panel) -> Result<ElasticityOutput> {
    let stage = compute_elasticity(panel, cfg.window_length, &cfg.smoother)?;
    let (states, ew) = compute_energetics(&stage.series, cfg.equilibrium)?;
    let mut warnings = stage.warnings.clone();
    warnings.extend(ew);
    Ok(ElasticityOutput {
        stage,
        states,
        warnings,
    })
}

#[derive(Debug, Clone)]
pub struct RegimesOutput {
    pub stage: RegimeStage,
    pub distributions: Vec<RegimeDistribution>,
}

pub fn regimes_stage(
    cfg: &RunConfig,
    states: &[EnergeticsState],
    subregions: &BTreeMap<String, Subregion>,
) -> Result<RegimesOutput> {
    let stage = compute_regimes(states, &cfg.methods, cfg.indicator, cfg.features, cfg.seed)?;
    let distributions = cfg
        .methods
        .iter()
        .map(|m| regime_distribution(&stage.assignments, *m, subregions))
        .collect();
    Ok(RegimesOutput { stage, distributions })
}

fn labels_for(assignments: &[RegimeAssignment], method: RegimeMethod, key: &str) -> Result<Vec<RegimeAssignment>> {
    let rows: Vec<RegimeAssignment> = assignments.iter().filter(|a| a.method == method).cloned().collect();
    if rows.is_empty() {
        return Err(NeedError::config(
            key,
            format!("no {} regime labels available; run `need regimes --method {}` first", method.as_str(), method.as_str()),
        ));
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct ForecastOutput {
    pub rows: Vec<ForecastMetrics>,
    pub n_tasks: usize,
    pub warnings: Vec<String>,
}

pub fn forecast_stage(
    cfg: &RunConfig,
    panel: &Panel,
    states: &[EnergeticsState],
    assignments: &[RegimeAssignment],
) -> Result<ForecastOutput> {
    let labels = labels_for(assignments, cfg.forecast_regimes, "forecast_regimes")?;
    let lookup = regime_lookup(&labels, cfg.forecast_regimes);
    let tasks = build_forecast_tasks(panel, states, cfg.predictors);
    let split = chronological_split(&tasks, &cfg.split)?;
    let mut warnings: Vec<String> = split
        .excluded_countries
        .iter()
        .map(|c| format!("forecast: {c} has too few rows for a split; excluded"))
        .collect();
    let filters: Vec<RegimeFilter> = RegimeFilter::TABLE_ORDER
        .into_iter()
        .filter(|f| match f {
            RegimeFilter::Global => true,
            RegimeFilter::Only(l) => lookup.values().any(|v| v == l),
        })
        .collect();
    let report = forecast_eval(&tasks, &lookup, &split, &filters, &cfg.models);
    warnings.extend(report.warnings);
    let mut sizes: Vec<String> = Vec::new();
    for f in &filters {
        let n = split
            .test
            .iter()
            .filter(|&&i| f.admits(lookup.get(&(tasks[i].country_code.clone(), tasks[i].year)).copied()))
            .count();
        sizes.push(format!("{}={n}", f.table_name()));
    }
    log::info!("forecast test rows per regime: {}", sizes.join(", "));
    Ok(ForecastOutput {
        rows: report.rows,
        n_tasks: tasks.len(),
        warnings,
    })
}

#[derive(Debug, Clone, Default)]
pub struct EarlyWarnOutput {
    pub rows: Vec<EarlyWarningMetrics>,
    pub curves: Vec<PrCurve>,
    pub subregions: Vec<SubregionMetrics>,
    pub events: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

pub fn earlywarn_stage(
    cfg: &RunConfig,
    raw: &[RawElasticity],
    states: &[EnergeticsState],
    assignments: &[RegimeAssignment],
    subregions: &BTreeMap<String, Subregion>,
) -> Result<EarlyWarnOutput> {
    let labels = labels_for(assignments, cfg.earlywarn_regimes, "earlywarn_regimes")?;
    let settings = EwSettings {
        split: cfg.split,
        window: cfg.alarm_window,
    };
    let mut out = EarlyWarnOutput::default();
    let mut targets: Vec<EventTarget> = cfg.event_targets.clone();
    if !targets.contains(&cfg.subregion_target) {
        targets.push(cfg.subregion_target);
    }
    for target in targets {
        let name = target.table_name();
        let events = match label_events(&labels, target, cfg.horizon) {
            Ok(e) => e,
            Err(e) => {
                let w = format!("early warning {name}: {e}; rows suppressed");
                log::warn!("{w}");
                out.warnings.push(w);
                continue;
            }
        };
        let ds = EwDataset::build(&events, states, raw, subregions);
        out.events.insert(name.to_string(), ds.events.len());
        if cfg.event_targets.contains(&target) {
            match early_warning_eval(&ds, &cfg.detectors, name, &settings) {
                Ok(rep) => {
                    out.rows.extend(rep.rows);
                    out.curves.extend(rep.curves);
                    out.warnings.extend(rep.warnings);
                }
                Err(e) => {
                    let w = format!("early warning {name}: {e}; rows suppressed");
                    log::warn!("{w}");
                    out.warnings.push(w);
                }
            }
        }
        if target == cfg.subregion_target {
            let (rows, w) = subregion_breakdown(&ds, &cfg.detectors, name, &settings);
            out.subregions = rows;
            out.warnings.extend(w);
        }
    }
    Ok(out)
}

// ---- artifact writers per stage ----

fn write_ingest(out: &mut OutputDir, panel: &Panel, rec: &mut StageRecord) -> Result<()> {
    out.write(art::PANEL, |b| write_long_csv(panel, b))?;
    rec.outputs.insert(art::PANEL.into(), panel.n_observations());
    rec.counts.insert("countries".into(), panel.countries.len());
    rec.counts.insert("rows_in".into(), panel.metadata.rows_in);
    rec.counts.insert("rows_dropped".into(), panel.metadata.rows_dropped);
    rec.counts
        .insert("dropped_missing_or_nonpositive".into(), panel.metadata.drops.missing_or_nonpositive);
    rec.counts
        .insert("dropped_year_out_of_range".into(), panel.metadata.drops.year_out_of_range);
    rec.counts.insert("dropped_short_country".into(), panel.metadata.drops.short_country);
    rec.counts
        .insert("dropped_unmapped_country".into(), panel.metadata.drops.unmapped_country);
    rec.warnings.extend(panel.metadata.warnings.iter().cloned());
    Ok(())
}

fn write_elasticity_outputs(cfg: &RunConfig, out: &mut OutputDir, e: &ElasticityOutput, rec: &mut StageRecord) -> Result<()> {
    let series = &e.stage.series;
    out.write(art::ELASTICITY, |b| art::write_elasticity(series, b))?;
    out.write(art::SMOOTHER, |b| art::write_smoother_params(series, b))?;
    out.write(art::ENERGETICS, |b| art::write_energetics(&e.states, b))?;
    rec.outputs
        .insert(art::ELASTICITY.into(), series.iter().map(|s| s.years.len()).sum());
    rec.outputs.insert(art::SMOOTHER.into(), series.len());
    rec.outputs.insert(art::ENERGETICS.into(), e.states.len());
    rec.counts.insert("countries".into(), series.len());
    rec.counts.insert(
        "countries_tuned".into(),
        series.iter().filter(|s| s.smoother.auto_tune).count(),
    );
    rec.warnings.extend(e.warnings.iter().cloned());
    if cfg.debug_dumps {
        let by_country = art::group_by_country(&e.states, |s| s.country_code.as_str());
        for s in series {
            let stem = file_stem(&s.country_code);
            out.write(&format!("debug/elasticity_{stem}.csv"), |b| art::write_elasticity_country(s, b))?;
            if let Some(rows) = by_country.get(&s.country_code) {
                let rows: Vec<EnergeticsState> = rows.iter().map(|r| (*r).clone()).collect();
                out.write(&format!("debug/energetics_{stem}.csv"), |b| art::write_energetics_country(&rows, b))?;
            }
        }
    }
    if cfg.plots {
        for s in series {
            let svg = plots::elasticity_svg(s);
            out.write(&format!("plots/elasticity_{}.svg", file_stem(&s.country_code)), |b| {
                b.extend_from_slice(svg.as_bytes());
                Ok(())
            })?;
        }
        rec.counts.insert("elasticity_plots".into(), series.len());
    }
    Ok(())
}

fn write_regime_outputs(cfg: &RunConfig, out: &mut OutputDir, r: &RegimesOutput, rec: &mut StageRecord) -> Result<()> {
    out.write(art::REGIMES, |b| art::write_regimes(&r.stage.assignments, b))?;
    out.write(art::DISTRIBUTION, |b| art::write_distribution(&r.distributions, b))?;
    rec.outputs.insert(art::REGIMES.into(), r.stage.assignments.len());
    rec.outputs
        .insert(art::DISTRIBUTION.into(), r.distributions.len() * (Subregion::ALL.len() + 1));
    for d in &r.distributions {
        for (l, n) in crate::regime::RegimeLabel::ALL.iter().zip(d.total) {
            rec.counts.insert(format!("{}.{}", d.method.as_str(), l.as_str()), n);
        }
    }
    if let Some(model) = &r.stage.cluster {
        out.write(art::CLUSTER, |b| {
            serde_json::to_writer_pretty(&mut *b, model)?;
            b.push(b'\n');
            Ok(())
        })?;
        rec.outputs.insert(art::CLUSTER.into(), 3);
        rec.counts.insert("kmeans_iterations".into(), model.iterations);
    }
    rec.warnings.extend(r.stage.warnings.iter().cloned());
    if cfg.plots {
        for m in &cfg.methods {
            let rows: Vec<RegimeAssignment> = r.stage.assignments.iter().filter(|a| a.method == *m).cloned().collect();
            let svg = plots::regime_scatter_svg(&rows, &format!("regimes ({})", m.as_str()));
            out.write(&format!("plots/regimes_{}.svg", m.as_str()), |b| {
                b.extend_from_slice(svg.as_bytes());
                Ok(())
            })?;
        }
    }
    Ok(())
}

fn write_forecast_outputs(out: &mut OutputDir, f: &ForecastOutput, rec: &mut StageRecord) -> Result<()> {
    out.write(art::FORECAST, |b| art::write_forecast(&f.rows, b))?;
    rec.outputs.insert(art::FORECAST.into(), f.rows.len());
    rec.counts.insert("forecast_tasks".into(), f.n_tasks);
    for r in f.rows.iter().filter(|r| r.model == "OLS") {
        rec.counts.insert(format!("n_test.{}", r.regime), r.n_test);
    }
    rec.warnings.extend(f.warnings.iter().cloned());
    Ok(())
}

fn write_earlywarn_outputs(cfg: &RunConfig, out: &mut OutputDir, e: &EarlyWarnOutput, rec: &mut StageRecord) -> Result<()> {
    out.write(art::EARLY_WARNING, |b| art::write_early_warning(&e.rows, b))?;
    out.write(art::SUBREGION, |b| art::write_subregion(&e.subregions, b))?;
    rec.outputs.insert(art::EARLY_WARNING.into(), e.rows.len());
    rec.outputs.insert(art::SUBREGION.into(), e.subregions.len());
    for (t, n) in &e.events {
        rec.counts.insert(format!("events.{t}"), *n);
    }
    rec.warnings.extend(e.warnings.iter().cloned());
    if cfg.plots {
        let mut by_regime: BTreeMap<&str, Vec<PrCurve>> = BTreeMap::new();
        for c in &e.curves {
            by_regime.entry(c.regime.as_str()).or_default().push(c.clone());
        }
        for (regime, curves) in by_regime {
            let svg = plots::pr_curves_svg(&curves, &format!("precision-recall: {regime}"));
            out.write(&format!("plots/pr_{}.svg", file_stem(&regime.to_ascii_lowercase())), |b| {
                b.extend_from_slice(svg.as_bytes());
                Ok(())
            })?;
        }
    }
    Ok(())
}

// ---- commands ----

fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match workers {
        None => f(),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| NeedError::config("workers", e.to_string()))?;
            pool.install(f)
        }
    }
}

fn finish(out: &mut OutputDir, manifest: &Manifest) -> Result<RunSummary> {
    manifest.write(out)?;
    let warnings = manifest.stages.values().map(|s| s.warnings.len()).sum();
    Ok(RunSummary {
        out_dir: out.root().to_path_buf(),
        files: out.written().to_vec(),
        warnings,
    })
}

fn guarded(dir: &Path, body: impl FnOnce(&mut OutputDir) -> Result<RunSummary>) -> Result<RunSummary> {
    let mut out = OutputDir::create(dir)?;
    match body(&mut out) {
        Ok(s) => Ok(s),
        Err(e) => {
            out.discard();
            Err(e)
        }
    }
}

/// Runs one pipeline command against `cfg.out_dir`.
pub fn execute(stage: Stage, cfg: &RunConfig) -> Result<RunSummary> {
    with_workers(cfg.workers, || match stage {
        Stage::Run => run_all(cfg),
        s => run_stage(s, cfg),
    })
}

fn run_all(cfg: &RunConfig) -> Result<RunSummary> {
    let panel = ingest_input(cfg).map_err(|e| e.in_stage("ingest"))?;
    let el = elasticity_stage(cfg, &panel).map_err(|e| e.in_stage("elasticity"))?;
    let subregions = panel.subregion_map();
    let rg = regimes_stage(cfg, &el.states, &subregions).map_err(|e| e.in_stage("regimes"))?;
    let fc = forecast_stage(cfg, &panel, &el.states, &rg.stage.assignments).map_err(|e| e.in_stage("forecast"))?;
    let ew = earlywarn_stage(cfg, &el.stage.raw, &el.states, &rg.stage.assignments, &subregions)
        .map_err(|e| e.in_stage("earlywarn"))?;
    guarded(&cfg.out_dir, |out| {
        let mut manifest = Manifest::new("run", &cfg.echo);
        let mut rec = StageRecord::default();
        write_ingest(out, &panel, &mut rec)?;
        manifest.stages.insert("ingest".into(), std::mem::take(&mut rec));
        write_elasticity_outputs(cfg, out, &el, &mut rec)?;
        manifest.stages.insert("elasticity".into(), std::mem::take(&mut rec));
        write_regime_outputs(cfg, out, &rg, &mut rec)?;
        manifest.stages.insert("regimes".into(), std::mem::take(&mut rec));
        write_forecast_outputs(out, &fc, &mut rec)?;
        manifest.stages.insert("forecast".into(), std::mem::take(&mut rec));
        write_earlywarn_outputs(cfg, out, &ew, &mut rec)?;
        manifest.stages.insert("earlywarn".into(), rec);
        finish(out, &manifest)
    })
}

fn run_stage(stage: Stage, cfg: &RunConfig) -> Result<RunSummary> {
    let dir = cfg.out_dir.as_path();
    let tag = stage.as_str();
    guarded(dir, |out| {
        let mut manifest = Manifest::continue_in(dir, tag, &cfg.echo);
        let mut rec = StageRecord::default();
        let mut body = || -> Result<()> {
            match stage {
                Stage::Ingest => {
                    let panel = ingest_input(cfg)?;
                    write_ingest(out, &panel, &mut rec)
                }
                Stage::Elasticity => {
                    let panel = load_cached_panel(cfg, dir)?;
                    let el = elasticity_stage(cfg, &panel)?;
                    write_elasticity_outputs(cfg, out, &el, &mut rec)
                }
                Stage::Regimes => {
                    let panel = load_cached_panel(cfg, dir)?;
                    let states = art::read_energetics(art::open_upstream(dir, art::ENERGETICS, "elasticity")?)?;
                    let rg = regimes_stage(cfg, &states, &panel.subregion_map())?;
                    write_regime_outputs(cfg, out, &rg, &mut rec)
                }
                Stage::Forecast => {
                    let panel = load_cached_panel(cfg, dir)?;
                    let states = art::read_energetics(art::open_upstream(dir, art::ENERGETICS, "elasticity")?)?;
                    let regimes = art::read_regimes(art::open_upstream(dir, art::REGIMES, "regimes")?)?;
                    let fc = forecast_stage(cfg, &panel, &states, &regimes)?;
                    write_forecast_outputs(out, &fc, &mut rec)
                }
                Stage::Earlywarn => {
                    let panel = load_cached_panel(cfg, dir)?;
                    let raw = art::read_elasticity(
                        art::open_upstream(dir, art::ELASTICITY, "elasticity")?,
                        cfg.window_length,
                    )?;
                    let states = art::read_energetics(art::open_upstream(dir, art::ENERGETICS, "elasticity")?)?;
                    let regimes = art::read_regimes(art::open_upstream(dir, art::REGIMES, "regimes")?)?;
                    let ew = earlywarn_stage(cfg, &raw, &states, &regimes, &panel.subregion_map())?;
                    write_earlywarn_outputs(cfg, out, &ew, &mut rec)
                }
                Stage::Run => unreachable!("run is handled by run_all"),
            }
        };
        body().map_err(|e| e.in_stage(tag))?;
        manifest.stages.insert(tag.into(), rec);
        finish(out, &manifest)
    })
}

/// Writes a synthetic panel (`panel.csv`) and its ground truth sidecars.
pub fn run_synth(spec: &SynthSpec, dir: &Path, preset: &str) -> Result<RunSummary> {
    let synth = generate(spec).map_err(|e| e.in_stage("synth"))?;
    guarded(dir, |out| {
        let mut config = BTreeMap::new();
        config.insert("spec".to_string(), preset.to_string());
        config.insert("seed".to_string(), spec.seed.to_string());
        config.insert("n_countries".to_string(), spec.n_countries.to_string());
        config.insert("n_years".to_string(), spec.n_years.to_string());
        config.insert("gdp_sd".to_string(), spec.gdp_sd.to_string());
        config.insert("co2_sd".to_string(), spec.co2_sd.to_string());
        let mut manifest = Manifest::new("synth", &config);
        let mut rec = StageRecord::default();
        write_ingest(out, &synth.panel, &mut rec)?;
        rec.counts.clear();
        rec.counts.insert("countries".into(), synth.panel.countries.len());
        let (mut e, mut r, mut v) = (Vec::new(), Vec::new(), Vec::new());
        write_truth_csv(&synth, &mut e, &mut r, &mut v)?;
        for (name, buf) in [
            ("truth_elasticity.csv", e),
            ("truth_regimes.csv", r),
            ("truth_events.csv", v),
        ] {
            let rows = buf.iter().filter(|c| **c == b'\n').count().saturating_sub(1);
            out.write(name, |b| {
                b.extend_from_slice(&buf);
                Ok(())
            })?;
            rec.outputs.insert(name.into(), rows);
        }
        manifest.stages.insert("synth".into(), rec);
        finish(out, &manifest)
    })
}

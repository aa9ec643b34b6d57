use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use need_core::pipeline::{execute, run_synth, RunConfig, RunSummary, Settings, Stage};
use need_core::synth::SynthSpec;
use need_core::{NeedError, Result};

/// Elasticity-energetics regime diagnostics for CO2/GDP panels.
#[derive(Parser, Debug)]
#[command(name = "need", version, propagate_version = true)]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG overrides.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Only errors.
    #[arg(short, long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate and normalise a raw panel into panel.csv.
    Ingest(StageArgs),
    /// Rolling elasticity, smoother and energetics from panel.csv.
    Elasticity(StageArgs),
    /// Regime labels from energetics.csv.
    Regimes(StageArgs),
    /// Regime-conditional one-step forecasting metrics.
    Forecast(StageArgs),
    /// Early-warning detector metrics.
    Earlywarn(StageArgs),
    /// All stages end to end.
    Run(StageArgs),
    /// Generate a synthetic panel with planted regimes.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct StageArgs {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Any configuration key, e.g. `--set forest.n_trees=200`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// long | wide
    #[arg(long)]
    layout: Option<String>,
    #[arg(long)]
    year_min: Option<String>,
    #[arg(long)]
    year_max: Option<String>,
    #[arg(long)]
    window_length: Option<String>,
    /// auto | fixed
    #[arg(long)]
    smoother: Option<String>,
    #[arg(long)]
    process_variance: Option<String>,
    #[arg(long)]
    observation_variance: Option<String>,
    /// country_mean | global_mean | fixed:<value>
    #[arg(long)]
    equilibrium: Option<String>,
    /// exogenous_tercile | endogenous_kmeans | both
    #[arg(long)]
    method: Option<String>,
    /// lagrangian | potential | kinetic | total_energy
    #[arg(long)]
    indicator: Option<String>,
    /// diagnostic | full
    #[arg(long)]
    features: Option<String>,
    #[arg(long)]
    forecast_regimes: Option<String>,
    #[arg(long)]
    earlywarn_regimes: Option<String>,
    /// default | diagnostic
    #[arg(long)]
    predictors: Option<String>,
    /// Comma-separated forecasting models.
    #[arg(long)]
    models: Option<String>,
    /// Comma-separated early-warning detectors.
    #[arg(long)]
    detectors: Option<String>,
    #[arg(long)]
    test_fraction: Option<String>,
    #[arg(long)]
    min_rows: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    alarm_window: Option<String>,
    #[arg(long)]
    event_targets: Option<String>,
    #[arg(long)]
    subregion_target: Option<String>,
    /// Per-country intermediate CSVs under debug/.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    debug_dumps: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    plots: Option<String>,
    /// Worker threads (default: all cores, or NEED_WORKERS).
    #[arg(long)]
    workers: Option<String>,
}

impl StageArgs {
    fn flags(&self) -> [(&'static str, &Option<String>); 28] {
        [
            ("input", &self.input),
            ("out", &self.out),
            ("seed", &self.seed),
            ("layout", &self.layout),
            ("year_min", &self.year_min),
            ("year_max", &self.year_max),
            ("window_length", &self.window_length),
            ("smoother", &self.smoother),
            ("process_variance", &self.process_variance),
            ("observation_variance", &self.observation_variance),
            ("equilibrium", &self.equilibrium),
            ("method", &self.method),
            ("indicator", &self.indicator),
            ("features", &self.features),
            ("forecast_regimes", &self.forecast_regimes),
            ("earlywarn_regimes", &self.earlywarn_regimes),
            ("predictors", &self.predictors),
            ("models", &self.models),
            ("detectors", &self.detectors),
            ("test_fraction", &self.test_fraction),
            ("min_rows", &self.min_rows),
            ("horizon", &self.horizon),
            ("alarm_window", &self.alarm_window),
            ("event_targets", &self.event_targets),
            ("subregion_target", &self.subregion_target),
            ("debug_dumps", &self.debug_dumps),
            ("plots", &self.plots),
            ("workers", &self.workers),
        ]
    }

    fn resolve(&self) -> Result<RunConfig> {
        let mut settings = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::new(),
        };
        let mut cli = Settings::new();
        for (key, value) in self.flags() {
            if let Some(v) = value {
                cli.set(key, v.as_str())?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| NeedError::config("set", format!("expected KEY=VALUE, got '{kv}'")))?;
            cli.set(k, v)?;
        }
        settings.merge(&cli);
        RunConfig::from_settings(&settings)
    }
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Preset: default | small | noiseless
    #[arg(long, default_value = "default")]
    spec: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = "need_synth")]
    out: PathBuf,
    #[arg(long)]
    countries: Option<usize>,
    #[arg(long)]
    years: Option<usize>,
    #[arg(long)]
    gdp_sd: Option<f64>,
    #[arg(long)]
    co2_sd: Option<f64>,
}

impl SynthArgs {
    fn spec(&self) -> Result<SynthSpec> {
        let mut spec = SynthSpec::preset(&self.spec, self.seed)?;
        if let Some(n) = self.countries {
            spec.n_countries = n;
        }
        if let Some(n) = self.years {
            spec.n_years = n;
        }
        if let Some(x) = self.gdp_sd {
            spec.gdp_sd = x;
        }
        if let Some(x) = self.co2_sd {
            spec.co2_sd = x;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn dispatch(command: &Command) -> Result<RunSummary> {
    let (stage, args) = match command {
        Command::Synth(a) => return run_synth(&a.spec()?, &a.out, &a.spec),
        Command::Ingest(a) => (Stage::Ingest, a),
        Command::Elasticity(a) => (Stage::Elasticity, a),
        Command::Regimes(a) => (Stage::Regimes, a),
        Command::Forecast(a) => (Stage::Forecast, a),
        Command::Earlywarn(a) => (Stage::Earlywarn, a),
        Command::Run(a) => (Stage::Run, a),
    };
    let cfg = args.resolve()?;
    execute(stage, &cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "error",
        (false, 0) => "warn",
        (false, 1) => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match dispatch(&cli.command) {
        Ok(summary) => {
            println!(
                "wrote {} files to {} ({} warnings)",
                summary.files.len(),
                summary.out_dir.display(),
                summary.warnings
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines are always printed. The
//! process fails if any criterion fails other than those listed in
//! `EXPECTED_RED`, which cannot be met by construction (see the detail line).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use need_core::elasticity::{local_level, rolling_elasticity, SmootherConfig};
use need_core::energetics::{derivative_chain, energy_states, integrated_power, EquilibriumSpec};
use need_core::evaluation::early_warning::{early_warning_eval, evaluate_scores, Detector, EwDataset, EwSettings};
use need_core::evaluation::events::{label_events, EventTarget};
use need_core::evaluation::forecast::{build_forecast_tasks, forecast_eval, regime_lookup, PredictorSet, RegimeFilter};
use need_core::evaluation::split::{chronological_split, SplitSpec};
use need_core::models::boosted::{gradient_hessian, loss, BoostLoss};
use need_core::models::linear::{fit_ols, fit_var1};
use need_core::models::logistic::LogisticObjective;
use need_core::models::{ModelKind, ModelSpec};
use need_core::panel::write_long_csv;
use need_core::pipeline::artifacts::{read_early_warning, read_forecast};
use need_core::pipeline::{compute_elasticity, compute_energetics, execute, RunConfig, Settings, Stage};
use need_core::regime::{
    adjusted_rand_index, feature_vectors, kmeans, tercile_regimes, tercile_sizes, FeatureSet, RegimeAssignment,
    RegimeLabel, RegimeMethod, TercileIndicator, KMEANS_STARTS,
};
use need_core::synth::{generate, SynthOutput, SynthSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const EXPECTED_RED: &[u32] = &[8];
const SEEDS: u64 = 20;
const REQUIRED: usize = 17;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---- 1 ----

fn elasticity_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let noise = Normal::new(0.0, 0.03).unwrap();
    let panel: Vec<(f64, Vec<i32>, Vec<f64>, Vec<f64>)> = (0..150)
        .map(|_| {
            let beta = rng.random_range(-0.5..1.8);
            let c = rng.random_range(-3.0..3.0);
            let mut g = rng.random_range(20.0..28.0);
            let mut ln_gdp = Vec::with_capacity(32);
            for _ in 0..32 {
                g += 0.02 + noise.sample(&mut rng);
                ln_gdp.push(g);
            }
            let ln_co2: Vec<f64> = ln_gdp.iter().map(|x| beta * x + c).collect();
            (beta, (1991..2023).collect(), ln_gdp, ln_co2)
        })
        .collect();
    let t0 = Instant::now();
    let fits: Vec<_> = panel
        .iter()
        .enumerate()
        .map(|(i, (_, y, g, c))| rolling_elasticity(&format!("C{i}"), y, g, c, 5).unwrap())
        .collect();
    let elapsed = t0.elapsed();
    let mut worst: f64 = 0.0;
    let mut anchors = 0;
    for ((beta, ..), fit) in panel.iter().zip(&fits) {
        for e in &fit.epsilon_raw {
            let Some(e) = e else {
                return outcome(false, "undefined anchor on a gap-free series");
            };
            worst = worst.max((e - beta).abs());
            anchors += 1;
        }
    }
    outcome(
        worst < 1e-10 && anchors == 150 * 28 && elapsed < Duration::from_secs(1),
        format!("max |error| {worst:.2e} over {anchors} anchors, {elapsed:.2?}"),
    )
}

// ---- 2 ----

fn smoother_limits() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let raw: Vec<Option<f64>> = (0..32).map(|_| Some(rng.random_range(-1.0..2.0))).collect();
    let fit = local_level(&raw, 0.01, 1e-12).unwrap();
    let dev = raw
        .iter()
        .zip(&fit.smoothed)
        .map(|(r, s)| (r.unwrap() - s).abs())
        .fold(0.0, f64::max);

    let mut flat = vec![Some(0.731); 28];
    flat[9] = None;
    flat[10] = None;
    let mut spread: f64 = 0.0;
    for (q, h) in [(0.01, 0.1), (1e-6, 100.0), (10.0, 1e-3)] {
        let s = local_level(&flat, q, h).unwrap().smoothed;
        spread = spread.max(s.iter().map(|v| (v - 0.731).abs()).fold(0.0, f64::max));
    }
    outcome(
        dev < 1e-6 && spread < 1e-12,
        format!("tiny observation variance: max dev {dev:.2e}; constant input: max dev {spread:.2e}"),
    )
}

// ---- shared synthetic pipeline ----

struct Prepared {
    synth: SynthOutput,
    raw: Vec<need_core::elasticity::RawElasticity>,
    states: Vec<need_core::energetics::EnergeticsState>,
}

fn prepare(seed: u64) -> Prepared {
    let synth = generate(&SynthSpec::preset("default", seed).unwrap()).unwrap();
    let smoother = SmootherConfig {
        auto_tune: true,
        ..SmootherConfig::default()
    };
    let el = compute_elasticity(&synth.panel, 5, &smoother).unwrap();
    let (states, _) = compute_energetics(&el.series, EquilibriumSpec::CountryMean).unwrap();
    Prepared {
        synth,
        raw: el.raw,
        states,
    }
}

fn prepared_seed1() -> &'static Prepared {
    static P: OnceLock<Prepared> = OnceLock::new();
    P.get_or_init(|| prepare(1))
}

// ---- 3 ----

fn energetics_identities() -> Outcome {
    let p = prepared_seed1();
    let mut worst: f64 = 0.0;
    for s in &p.states {
        worst = worst
            .max((s.hamiltonian - (s.kinetic + s.potential)).abs())
            .max((s.lagrangian - (s.kinetic - s.potential)).abs())
            .max((s.total_energy - (s.kinetic + s.potential + s.accel_energy + s.jerk_energy)).abs());
    }
    let years: Vec<i32> = (2000..2012).collect();
    let chain = derivative_chain(&years, &[0.42; 12]).unwrap();
    let flat = energy_states("X", &chain, 0.42);
    let flat_max = flat
        .iter()
        .flat_map(|s| {
            [
                s.kinetic,
                s.potential,
                s.hamiltonian,
                s.lagrangian,
                s.accel_energy,
                s.jerk_energy,
                s.total_energy,
                s.power,
            ]
        })
        .map(f64::abs)
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-12 && flat_max == 0.0,
        format!("{} rows, max identity residual {worst:.2e}; constant series max |energy| {flat_max:.1e}", p.states.len()),
    )
}

// ---- 4 ----

fn telescoping_power() -> Outcome {
    let p = prepared_seed1();
    let mut by_country: BTreeMap<&str, Vec<need_core::energetics::EnergeticsState>> = BTreeMap::new();
    for s in &p.states {
        by_country.entry(&s.country_code).or_default().push(s.clone());
    }
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for rows in by_country.values() {
        if rows.windows(2).any(|w| w[1].year != w[0].year + 1) {
            continue;
        }
        let lhs = integrated_power(rows);
        let rhs = rows[rows.len() - 1].hamiltonian - rows[0].hamiltonian;
        worst = worst.max((lhs - rhs).abs());
        checked += 1;
    }
    outcome(
        worst < 1e-9 && checked > 0,
        format!("{checked} gap-free countries, max |sum power dt - (H_end - H_start)| {worst:.2e}"),
    )
}

// ---- 5 ----

fn brute_force_inertia(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut labels = vec![0usize; n];
        let mut c = code;
        for l in labels.iter_mut() {
            *l = c % 3;
            c /= 3;
        }
        if (0..3).any(|k| !labels.contains(&k)) {
            continue;
        }
        let mut total = 0.0;
        for k in 0..3 {
            let members: Vec<&Vec<f64>> = points.iter().zip(&labels).filter(|(_, l)| **l == k).map(|(p, _)| p).collect();
            let d = members[0].len();
            let mean: Vec<f64> = (0..d)
                .map(|j| members.iter().map(|m| m[j]).sum::<f64>() / members.len() as f64)
                .collect();
            total += members
                .iter()
                .map(|m| m.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .sum::<f64>();
        }
        best = best.min(total);
    }
    best
}

fn clustering_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let centers = [[-3.0, 0.0, 0.0], [0.0, 0.0, 3.0], [3.0, 3.0, 0.0]];
    let mut points = Vec::new();
    let mut truth = Vec::new();
    for (k, c) in centers.iter().enumerate() {
        for _ in 0..50 {
            points.push(c.iter().map(|v| v + noise.sample(&mut rng)).collect::<Vec<f64>>());
            truth.push(k);
        }
    }
    let fit = kmeans(&points, 3, 7, KMEANS_STARTS).unwrap();
    let ari = adjusted_rand_index(&truth, &fit.assignments);

    let mut worst_ratio: f64 = 0.0;
    for trial in 0..40 {
        let pts: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..2).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let opt = brute_force_inertia(&pts);
        let got = kmeans(&pts, 3, trial, KMEANS_STARTS).unwrap().inertia;
        worst_ratio = worst_ratio.max(got / opt);
    }
    outcome(
        ari >= 0.99 && worst_ratio <= 1.05,
        format!("planted blobs ARI {ari:.4}; worst k-means/optimal inertia over 40 8-point sets {worst_ratio:.4}"),
    )
}

// ---- 6 ----

fn tercile_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let states: Vec<need_core::energetics::EnergeticsState> = (0..1000)
        .map(|i| {
            let mut s = energy_states("X", &derivative_chain(&[0, 1, 2, 3], &[0.0; 4]).unwrap(), 0.0)[0].clone();
            s.country_code = format!("C{:03}", rng.random_range(0..60));
            s.year = 1990 + i % 33;
            // a coarse grid forces ties
            s.lagrangian = if i % 2 == 0 {
                (rng.random_range(-20..20) as f64) / 4.0
            } else {
                rng.random_range(-5.0..5.0)
            };
            s
        })
        .collect();
    let features = feature_vectors(&states, FeatureSet::Diagnostic);
    let got = tercile_regimes(&states, TercileIndicator::Lagrangian, &features).unwrap();

    // rank by counting strictly smaller keys
    let key = |i: usize| (states[i].lagrangian, states[i].country_code.clone(), states[i].year, i);
    let n = states.len();
    let cut1 = n.div_ceil(3);
    let cut2 = cut1 + (n - cut1).div_ceil(2);
    let mut mismatches = 0;
    let mut counts = [0usize; 3];
    for i in 0..n {
        let ki = key(i);
        let rank = (0..n)
            .filter(|&j| {
                let kj = key(j);
                kj.0 < ki.0 || (kj.0 == ki.0 && (&kj.1, kj.2, kj.3) < (&ki.1, ki.2, ki.3))
            })
            .count();
        let expected = if rank < cut1 {
            RegimeLabel::StoreDominant
        } else if rank < cut2 {
            RegimeLabel::Transitional
        } else {
            RegimeLabel::FlowDominant
        };
        if got[i].label != expected {
            mismatches += 1;
        }
        counts[RegimeLabel::ALL.iter().position(|l| *l == got[i].label).unwrap()] += 1;
    }
    let spread = counts.iter().max().unwrap() - counts.iter().min().unwrap();
    outcome(
        mismatches == 0 && spread <= 1 && tercile_sizes(n).iter().sum::<usize>() == n,
        format!("{mismatches} mismatches of {n}; group sizes {counts:?}"),
    )
}

// ---- end-to-end runs shared by 7 and 12 ----

struct Runs {
    _tmp: tempfile::TempDir,
    a: PathBuf,
    b: PathBuf,
    times: [Duration; 2],
}

fn runs() -> &'static Runs {
    static R: OnceLock<Runs> = OnceLock::new();
    R.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        let synth = generate(&SynthSpec::preset("default", 12).unwrap()).unwrap();
        let input = tmp.path().join("panel.csv");
        write_long_csv(&synth.panel, std::fs::File::create(&input).unwrap()).unwrap();
        let mut times = [Duration::ZERO; 2];
        let dirs = [tmp.path().join("a"), tmp.path().join("b")];
        for (dir, t) in dirs.iter().zip(times.iter_mut()) {
            let mut s = Settings::new();
            s.set("input", input.display().to_string()).unwrap();
            s.set("out", dir.display().to_string()).unwrap();
            s.set("seed", "7").unwrap();
            s.set("workers", "1").unwrap();
            let cfg = RunConfig::from_settings(&s).unwrap();
            let t0 = Instant::now();
            execute(Stage::Run, &cfg).unwrap();
            *t = t0.elapsed();
        }
        let [a, b] = dirs;
        Runs { _tmp: tmp, a, b, times }
    })
}

// ---- 7 ----

fn metric_identities() -> Outcome {
    let r = runs();
    let ew = read_early_warning(std::fs::File::open(r.a.join("early_warning_metrics.csv")).unwrap()).unwrap();
    let fc = read_forecast(std::fs::File::open(r.a.join("forecast_metrics.csv")).unwrap()).unwrap();
    let lift_residual = ew
        .iter()
        .map(|m| (m.pr_lift * m.base_rate - m.auprc).abs())
        .fold(0.0, f64::max);
    let mae_ok = fc.iter().all(|m| m.mae <= m.rmse);

    let p = prepared_seed1();
    let planted = planted_assignments(&p.synth);
    let events = label_events(&planted, EventTarget::AnyChange, 2).unwrap();
    let ds = EwDataset::build(&events, &p.states, &p.raw, &p.synth.panel.subregion_map());
    let split = chronological_split(&ds.tasks, &SplitSpec::default()).unwrap();
    let oracle: Vec<f64> = ds.tasks.iter().map(|t| f64::from(u8::from(t.label))).collect();
    let m = evaluate_scores(&ds, &oracle, &split.train, &split.test, 3).unwrap();
    let perfect = [m.auprc, m.auroc, m.f1, m.detect_rate].iter().all(|v| *v == 1.0);
    outcome(
        lift_residual <= 1e-12 && mae_ok && perfect && !ew.is_empty(),
        format!(
            "{} early-warning rows, max |lift*base - auprc| {lift_residual:.1e}; mae <= rmse on {} forecast rows: {mae_ok}; oracle auprc/auroc/f1/detect {}/{}/{}/{}",
            ew.len(),
            fc.len(),
            m.auprc,
            m.auroc,
            m.f1,
            m.detect_rate
        ),
    )
}

// ---- 8 ----

/// (regime, model, auprc, base rate, published lift)
const PUBLISHED_LIFTS: [(&str, &str, f64, f64, f64); 6] = [
    ("Regime2", "RF", 0.592, 0.097, 6.131),
    ("Regime3", "RF", 0.578, 0.026, 22.213),
    ("Regime2", "VarCtrl5", 0.172, 0.097, 1.78),
    ("Regime3", "VarCtrl5", 0.056, 0.026, 2.134),
    ("Regime2", "XGB", 0.617, 0.097, 6.383),
    ("Regime3", "XGB", 0.454, 0.026, 17.443),
];

fn published_lift_consistency() -> Outcome {
    let mut within = 0;
    let mut rounding_consistent = 0;
    let mut worst: f64 = 0.0;
    for (_, _, auprc, base, lift) in PUBLISHED_LIFTS {
        let rel = (lift - auprc / base).abs() / lift;
        worst = worst.max(rel);
        within += usize::from(rel < 0.002);
        // every value is printed to three decimals
        let lo = (auprc - 5e-4) / (base + 5e-4);
        let hi = (auprc + 5e-4) / (base - 5e-4);
        rounding_consistent += usize::from(lo <= lift && lift <= hi);
    }
    outcome(
        within == PUBLISHED_LIFTS.len(),
        format!(
            "{within}/6 rows within 0.2% (worst {:.2}%); {rounding_consistent}/6 consistent once 3-decimal rounding of auprc and base rate is allowed",
            worst * 100.0
        ),
    )
}

// ---- 9 and 10 ----

fn planted_assignments(s: &SynthOutput) -> Vec<RegimeAssignment> {
    s.truth
        .iter()
        .map(|t| RegimeAssignment {
            country_code: t.country_code.clone(),
            year: t.year,
            label: t.label,
            method: RegimeMethod::ExogenousTercile,
            features: [0.0; 3],
        })
        .collect()
}

struct SeedResult {
    direction_holds: bool,
    detectors: Option<bool>,
}

fn seed_result(seed: u64) -> SeedResult {
    let p = if seed == 1 { None } else { Some(prepare(seed)) };
    let p = p.as_ref().unwrap_or_else(|| prepared_seed1());
    let planted = planted_assignments(&p.synth);

    let tasks = build_forecast_tasks(&p.synth.panel, &p.states, PredictorSet::Default);
    let split = chronological_split(&tasks, &SplitSpec::default()).unwrap();
    let lookup = regime_lookup(&planted, RegimeMethod::ExogenousTercile);
    let ols = [ModelSpec::new(ModelKind::Ols, seed)];
    let report = forecast_eval(&tasks, &lookup, &split, &RegimeFilter::TABLE_ORDER, &ols);
    let row = |r: &str| report.rows.iter().find(|m| m.regime == r);
    let direction_holds = match (row("Global"), row("Store-dominant"), row("Transitional"), row("Flow-dominant")) {
        (Some(g), Some(s), Some(t), Some(f)) => s.r2_oos > g.r2_oos && t.rmse > s.rmse && t.rmse > f.rmse,
        _ => false,
    };

    let events = label_events(&planted, EventTarget::Entry(RegimeLabel::Transitional), 2).unwrap();
    let ds = EwDataset::build(&events, &p.states, &p.raw, &p.synth.panel.subregion_map());
    let detectors: Vec<Detector> = Detector::defaults(seed)
        .into_iter()
        .filter(|d| !matches!(d, Detector::Model(m) if m.kind == ModelKind::Logistic))
        .collect();
    let detectors = early_warning_eval(&ds, &detectors, "Transitional", &EwSettings::default())
        .ok()
        .and_then(|rep| {
            let lift = |n: &str| rep.rows.iter().find(|m| m.model == n).map(|m| m.pr_lift);
            let best = ["Kurt5", "Skew5", "VarCtrl5"]
                .iter()
                .map(|n| lift(n).unwrap_or(f64::NEG_INFINITY))
                .fold(f64::NEG_INFINITY, f64::max);
            Some(lift("RF")? >= 2.0 * best && lift("XGB")? >= 2.0 * best)
        });
    SeedResult { direction_holds, detectors }
}

fn seed_results() -> &'static Vec<SeedResult> {
    static R: OnceLock<Vec<SeedResult>> = OnceLock::new();
    R.get_or_init(|| (1..=SEEDS).map(seed_result).collect())
}

fn forecast_direction() -> Outcome {
    let n = seed_results().iter().filter(|r| r.direction_holds).count();
    outcome(
        n >= REQUIRED,
        format!("{n}/{SEEDS} seeds: stable-regime OLS R2 above pooled, volatile regime has the highest RMSE"),
    )
}

fn detector_ordering() -> Outcome {
    let n = seed_results().iter().filter(|r| r.detectors == Some(true)).count();
    outcome(
        n >= REQUIRED,
        format!("{n}/{SEEDS} seeds: forest and boosted lift >= 2x best rolling-moment baseline"),
    )
}

// ---- 11 ----

fn model_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let beta = [2.0, -0.7, 0.3];
    let x: Vec<Vec<f64>> = (0..40)
        .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let y: Vec<f64> = x.iter().map(|r| 1.5 + r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>()).collect();
    let ols = fit_ols(&x, &y).unwrap();
    let ols_err = ols
        .coefficients
        .iter()
        .zip(&beta)
        .map(|(a, b)| (a - b).abs())
        .fold((ols.intercept - 1.5).abs(), f64::max);

    let c = [0.1, -0.2];
    let a = [[0.6, 0.2], [-0.1, 0.9]];
    let pairs: Vec<([f64; 2], [f64; 2])> = (0..30)
        .map(|_| {
            let s = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            (
                s,
                [c[0] + a[0][0] * s[0] + a[0][1] * s[1], c[1] + a[1][0] * s[0] + a[1][1] * s[1]],
            )
        })
        .collect();
    let var = fit_var1(&pairs).unwrap();
    let mut var_err: f64 = 0.0;
    for i in 0..2 {
        var_err = var_err.max((var.intercept[i] - c[i]).abs());
        for j in 0..2 {
            var_err = var_err.max((var.transition[i][j] - a[i][j]).abs());
        }
    }

    let rel = |analytic: f64, numeric: f64| (analytic - numeric).abs() / numeric.abs().max(1e-8);
    let mut grad_err: f64 = 0.0;
    let h = 1e-5;
    for kind in [BoostLoss::SquaredError, BoostLoss::Logistic] {
        for _ in 0..50 {
            let yv = if kind == BoostLoss::Logistic {
                f64::from(rng.random_range(0..2u8))
            } else {
                rng.random_range(-2.0..2.0)
            };
            let f = rng.random_range(-4.0..4.0);
            let (g, hess) = gradient_hessian(kind, yv, f);
            let g_fd = (loss(kind, yv, f + h) - loss(kind, yv, f - h)) / (2.0 * h);
            let h_fd = (gradient_hessian(kind, yv, f + h).0 - gradient_hessian(kind, yv, f - h).0) / (2.0 * h);
            grad_err = grad_err.max(rel(g, g_fd)).max(rel(hess, h_fd));
        }
    }
    let lx: Vec<Vec<f64>> = (0..30)
        .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let ly: Vec<f64> = (0..30).map(|_| f64::from(rng.random_range(0..2u8))).collect();
    let obj = LogisticObjective {
        x: &lx,
        y: &ly,
        lambda: 0.7,
    };
    for _ in 0..10 {
        let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = obj.gradient(&theta);
        for j in 0..4 {
            let (mut up, mut dn) = (theta.clone(), theta.clone());
            up[j] += h;
            dn[j] -= h;
            grad_err = grad_err.max(rel(g[j], (obj.value(&up) - obj.value(&dn)) / (2.0 * h)));
        }
    }
    outcome(
        ols_err < 1e-8 && var_err < 1e-8 && grad_err < 1e-5,
        format!("OLS max error {ols_err:.1e}, VAR(1) max error {var_err:.1e}, worst gradient relative error {grad_err:.1e}"),
    )
}

// ---- 12 ----

fn files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn determinism_and_speed() -> Outcome {
    let r = runs();
    let (fa, fb) = (files(&r.a), files(&r.b));
    let differing: Vec<String> = fa
        .iter()
        .filter(|(k, v)| fb.get(*k) != Some(*v))
        .map(|(k, _)| k.display().to_string())
        .collect();
    let same = differing.is_empty() && fa.len() == fb.len();
    let slowest = r.times[0].max(r.times[1]);
    outcome(
        same && slowest < Duration::from_secs(60),
        format!(
            "{} files, byte-identical: {same}{}; single-threaded run times {:.2?} / {:.2?}",
            fa.len(),
            if differing.is_empty() { String::new() } else { format!(" (differ: {})", differing.join(", ")) },
            r.times[0],
            r.times[1]
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 12] = [
        (1, "elasticity exactness", elasticity_exactness),
        (2, "smoother limits", smoother_limits),
        (3, "energetics identities", energetics_identities),
        (4, "telescoping power", telescoping_power),
        (5, "clustering recovery", clustering_recovery),
        (6, "tercile oracle", tercile_oracle),
        (7, "metric identities", metric_identities),
        (8, "published lift consistency", published_lift_consistency),
        (9, "regime-conditional forecast direction", forecast_direction),
        (10, "detector ordering", detector_ordering),
        (11, "model oracles", model_oracles),
        (12, "end-to-end determinism and speed", determinism_and_speed),
    ];
    let mut unexpected = Vec::new();
    for (id, name, check) in criteria {
        let t0 = Instant::now();
        let o = check();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && EXPECTED_RED.contains(&id) { " [expected]" } else { "" };
        println!("{verdict} criterion {id:>2} {name}{note}: {} ({:.1?})", o.detail, t0.elapsed());
        if !o.pass && !EXPECTED_RED.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}

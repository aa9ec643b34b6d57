//! Time-varying elasticity of emissions with respect to output.
//!
//! The raw estimate at anchor year `t` is the OLS slope of `ln_co2` on
//! `ln_gdp` (with intercept) over the `window_length` consecutive years
//! ending at `t`. The raw path is then smoothed with a local-level
//! state-space model:
//!
//! ```text
//! y_t  = mu_t + e_t,        e_t ~ N(0, observation_variance)
//! mu_t = mu_{t-1} + n_t,    n_t ~ N(0, process_variance)
//! ```
//!
//! using a Kalman filter with exact diffuse initialisation followed by the
//! Rauch-Tung-Striebel fixed-interval smoother. Missing raw values are
//! bridged by prediction-only steps.

use serde::{Deserialize, Serialize};

use crate::error::{NeedError, Result};

pub const DEFAULT_WINDOW: usize = 5;

/// Raw rolling-window estimates over a contiguous span of years.
#[derive(Debug, Clone, PartialEq)]
pub struct RawElasticity {
    pub country_code: String,
    /// Every calendar year from the first to the last defined anchor.
    pub years: Vec<i32>,
    pub epsilon_raw: Vec<Option<f64>>,
    pub epsilon_se: Vec<Option<f64>>,
    pub window_length: usize,
    /// Anchors skipped because `ln_gdp` had no variation in the window.
    pub degenerate_anchors: Vec<i32>,
}

impl RawElasticity {
    pub fn n_defined(&self) -> usize {
        self.epsilon_raw.iter().filter(|v| v.is_some()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub process_variance: f64,
    pub observation_variance: f64,
    /// Pick the variances by maximum likelihood over a log grid.
    pub auto_tune: bool,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        SmootherConfig {
            process_variance: 0.01,
            observation_variance: 0.1,
            auto_tune: false,
        }
    }
}

impl SmootherConfig {
    pub fn fixed(process_variance: f64, observation_variance: f64) -> Self {
        SmootherConfig {
            process_variance,
            observation_variance,
            auto_tune: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.process_variance) || !ok(self.observation_variance) {
            return Err(NeedError::invalid(format!(
                "smoother variances must be positive and finite (got {}, {})",
                self.process_variance, self.observation_variance
            )));
        }
        Ok(())
    }
}

/// Raw and smoothed elasticity for one country.
#[derive(Debug, Clone, PartialEq)]
pub struct ElasticitySeries {
    pub country_code: String,
    pub years: Vec<i32>,
    pub epsilon_raw: Vec<Option<f64>>,
    pub epsilon_se: Vec<Option<f64>>,
    pub epsilon_smooth: Vec<f64>,
    pub window_length: usize,
    /// Variances actually used (after tuning, if requested).
    pub smoother: SmootherConfig,
}

/// OLS slope and its standard error for `y = a + b x`.
fn window_ols(x: &[f64], y: &[f64]) -> Option<(f64, Option<f64>)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        sxx += dx * dx;
        sxy += dx * (yi - my);
    }
    let tol = 1e-12 * mx.abs().max(1.0);
    if sxx <= n * tol * tol {
        return None;
    }
    let slope = sxy / sxx;
    let df = x.len() as i64 - 2;
    let se = (df > 0).then(|| {
        let intercept = my - slope * mx;
        let ssr: f64 = x
            .iter()
            .zip(y)
            .map(|(xi, yi)| {
                let r = yi - intercept - slope * xi;
                r * r
            })
            .sum();
        (ssr / df as f64 / sxx).sqrt()
    });
    Some((slope, se))
}

/// Rolling trailing-window OLS elasticity.
///
/// `years` must be strictly increasing; a window is only formed over
/// `window_length` consecutive calendar years, so gaps restart the window.
pub fn rolling_elasticity(
    country_code: &str,
    years: &[i32],
    ln_gdp: &[f64],
    ln_co2: &[f64],
    window_length: usize,
) -> Result<RawElasticity> {
    if window_length < 3 {
        return Err(NeedError::invalid("window_length must be at least 3"));
    }
    if years.len() != ln_gdp.len() || years.len() != ln_co2.len() {
        return Err(NeedError::invalid("years, ln_gdp and ln_co2 must have equal length"));
    }
    if years.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NeedError::invalid(format!("{country_code}: years must be strictly increasing")));
    }

    let mut anchors: Vec<(i32, Option<(f64, Option<f64>)>)> = Vec::new();
    for end in (window_length - 1)..years.len() {
        let start = end + 1 - window_length;
        if years[end] - years[start] != (window_length - 1) as i32 {
            continue;
        }
        anchors.push((years[end], window_ols(&ln_gdp[start..=end], &ln_co2[start..=end])));
    }
    if anchors.is_empty() {
        return Err(NeedError::insufficient(format!(
            "{country_code}: no run of {window_length} consecutive years"
        )));
    }

    let degenerate_anchors: Vec<i32> = anchors.iter().filter(|a| a.1.is_none()).map(|a| a.0).collect();
    for y in &degenerate_anchors {
        log::warn!("{country_code}: ln_gdp constant in window ending {y}; elasticity left undefined");
    }

    let defined: Vec<_> = anchors.iter().filter(|a| a.1.is_some()).collect();
    let (first, last) = match (defined.first(), defined.last()) {
        (Some(f), Some(l)) => (f.0, l.0),
        _ => (anchors[0].0, anchors[anchors.len() - 1].0),
    };
    let span: Vec<i32> = (first..=last).collect();
    let mut epsilon_raw = vec![None; span.len()];
    let mut epsilon_se = vec![None; span.len()];
    for (year, est) in &anchors {
        if *year < first || *year > last {
            continue;
        }
        if let Some((slope, se)) = est {
            let i = (year - first) as usize;
            epsilon_raw[i] = Some(*slope);
            epsilon_se[i] = *se;
        }
    }
    Ok(RawElasticity {
        country_code: country_code.to_string(),
        years: span,
        epsilon_raw,
        epsilon_se,
        window_length,
        degenerate_anchors,
    })
}

/// Filtered and smoothed output of the local-level model.
#[derive(Debug, Clone)]
pub struct LocalLevelFit {
    pub filtered: Vec<f64>,
    pub smoothed: Vec<f64>,
    pub smoothed_variance: Vec<f64>,
    /// Prediction-error-decomposition log-likelihood (diffuse first step excluded).
    pub log_likelihood: f64,
}

/// Runs the local-level Kalman filter and RTS smoother on a gapped series.
pub fn local_level(obs: &[Option<f64>], process_variance: f64, observation_variance: f64) -> Result<LocalLevelFit> {
    let first = obs
        .iter()
        .position(Option::is_some)
        .ok_or_else(|| NeedError::insufficient("nothing to smooth"))?;
    let (q, h) = (process_variance, observation_variance);
    let n = obs.len();
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();

    let mut a_filt = vec![0.0; n];
    let mut p_filt = vec![0.0; n];
    let mut p_pred = vec![0.0; n];
    // Diffuse prior collapses onto the first observation.
    a_filt[first] = obs[first].unwrap();
    p_filt[first] = h;
    p_pred[first] = f64::INFINITY;
    let mut ll = 0.0;
    for t in first + 1..n {
        let a = a_filt[t - 1];
        let p = p_filt[t - 1] + q;
        p_pred[t] = p;
        match obs[t] {
            Some(y) => {
                let f = p + h;
                let v = y - a;
                let k = p / f;
                a_filt[t] = a + k * v;
                p_filt[t] = p * h / f;
                ll -= 0.5 * (ln_2pi + f.ln() + v * v / f);
            }
            None => {
                a_filt[t] = a;
                p_filt[t] = p;
            }
        }
    }

    let mut smoothed = a_filt.clone();
    let mut svar = p_filt.clone();
    for t in (first..n.saturating_sub(1)).rev() {
        let j = p_filt[t] / p_pred[t + 1];
        smoothed[t] = a_filt[t] + j * (smoothed[t + 1] - a_filt[t]);
        svar[t] = p_filt[t] + j * j * (svar[t + 1] - p_pred[t + 1]);
    }
    for t in 0..first {
        smoothed[t] = smoothed[first];
        svar[t] = f64::INFINITY;
        a_filt[t] = f64::NAN;
    }
    Ok(LocalLevelFit {
        filtered: a_filt,
        smoothed,
        smoothed_variance: svar,
        log_likelihood: ll,
    })
}

/// Log10 grid used by [`tune_smoother`].
pub const TUNE_GRID_MIN: f64 = -6.0;
pub const TUNE_GRID_MAX: f64 = 2.0;
pub const TUNE_GRID_STEP: f64 = 0.25;
pub const VARIANCE_FLOOR: f64 = 1e-8;

pub fn tune_grid() -> Vec<f64> {
    let n = ((TUNE_GRID_MAX - TUNE_GRID_MIN) / TUNE_GRID_STEP).round() as usize;
    (0..=n)
        .map(|i| 10f64.powf(TUNE_GRID_MIN + i as f64 * TUNE_GRID_STEP))
        .collect()
}

/// Maximum-likelihood variances over the log10 grid `[-6, 2]²`.
pub fn tune_smoother(raw: &[Option<f64>]) -> Result<SmootherConfig> {
    let defined: Vec<f64> = raw.iter().flatten().copied().collect();
    if defined.len() < 8 {
        return Err(NeedError::insufficient(format!(
            "tuning needs at least 8 defined values, got {}",
            defined.len()
        )));
    }
    let mean = defined.iter().sum::<f64>() / defined.len() as f64;
    let var = defined.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / defined.len() as f64;
    if var <= 1e-24 * mean.abs().max(1.0).powi(2) {
        return Ok(SmootherConfig {
            process_variance: VARIANCE_FLOOR,
            observation_variance: VARIANCE_FLOOR,
            auto_tune: true,
        });
    }
    let grid = tune_grid();
    let mut best = (f64::NEG_INFINITY, grid[0], grid[0]);
    for &q in &grid {
        for &h in &grid {
            let ll = local_level(raw, q, h)?.log_likelihood;
            if ll > best.0 {
                best = (ll, q, h);
            }
        }
    }
    Ok(SmootherConfig {
        process_variance: best.1,
        observation_variance: best.2,
        auto_tune: true,
    })
}

/// Smooths a raw elasticity path. With `auto_tune` the variances are chosen by
/// [`tune_smoother`] when at least 8 raw values exist; otherwise the given
/// variances are used.
pub fn smooth_series(raw: &RawElasticity, cfg: &SmootherConfig) -> Result<ElasticitySeries> {
    cfg.validate()?;
    if raw.n_defined() < 2 {
        return Err(NeedError::insufficient(format!(
            "{}: nothing to smooth ({} defined values)",
            raw.country_code,
            raw.n_defined()
        )));
    }
    let used = if cfg.auto_tune && raw.n_defined() >= 8 {
        tune_smoother(&raw.epsilon_raw)?
    } else {
        SmootherConfig { auto_tune: false, ..*cfg }
    };
    let fit = local_level(&raw.epsilon_raw, used.process_variance, used.observation_variance)?;
    Ok(ElasticitySeries {
        country_code: raw.country_code.clone(),
        years: raw.years.clone(),
        epsilon_raw: raw.epsilon_raw.clone(),
        epsilon_se: raw.epsilon_se.clone(),
        epsilon_smooth: fit.smoothed,
        window_length: raw.window_length,
        smoother: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn years(n: usize) -> Vec<i32> {
        (0..n as i32).map(|i| 1991 + i).collect()
    }

    /// Textbook uncentred normal-equation slope.
    fn oracle_slope(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    }

    #[test]
    fn exact_linear_law_gives_constant_slope() {
        let x: Vec<f64> = (0..12).map(|i| 23.0 + 0.03 * i as f64 + 0.01 * ((i * i) % 5) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 7.0).collect();
        let raw = rolling_elasticity("X", &years(12), &x, &y, 5).unwrap();
        assert_eq!(raw.years.len(), 8);
        for v in raw.epsilon_raw.iter().flatten() {
            assert!((v - 2.0).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn flat_emissions_give_zero() {
        let x: Vec<f64> = (0..8).map(|i| 20.0 + 0.1 * i as f64).collect();
        let y = vec![3.0; 8];
        let raw = rolling_elasticity("X", &years(8), &x, &y, 5).unwrap();
        assert!(raw.epsilon_raw.iter().flatten().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn six_points_match_closed_form_oracle() {
        let x = [0.3, 1.1, 1.9, 3.2, 3.9, 5.4];
        let y = [1.0, 1.7, 2.2, 3.9, 4.1, 6.3];
        let raw = rolling_elasticity("X", &years(6), &x, &y, 5).unwrap();
        assert_eq!(raw.years, vec![1995, 1996]);
        let expected = [oracle_slope(&x[0..5], &y[0..5]), oracle_slope(&x[1..6], &y[1..6])];
        for (got, want) in raw.epsilon_raw.iter().zip(expected) {
            assert!((got.unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_gdp_variance_leaves_a_gap() {
        let x = [5.0, 5.0, 5.0, 5.0, 5.0, 5.5, 6.0];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let raw = rolling_elasticity("X", &years(7), &x, &y, 5).unwrap();
        assert_eq!(raw.degenerate_anchors, vec![1995]);
        assert_eq!(raw.years, vec![1996, 1997]);
        assert!(raw.epsilon_raw.iter().all(Option::is_some));
    }

    #[test]
    fn gaps_restart_the_window() {
        let yrs = [2000, 2001, 2002, 2003, 2004, 2006, 2007, 2008, 2009, 2010];
        let x: Vec<f64> = (0..10).map(|i| 1.0 + 0.1 * i as f64 + 0.01 * (i % 3) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.5 * v).collect();
        let raw = rolling_elasticity("X", &yrs, &x, &y, 5).unwrap();
        assert_eq!(raw.years, (2004..=2010).collect::<Vec<_>>());
        let defined: Vec<i32> = raw
            .years
            .iter()
            .zip(&raw.epsilon_raw)
            .filter(|(_, v)| v.is_some())
            .map(|(y, _)| *y)
            .collect();
        assert_eq!(defined, vec![2004, 2010]);
    }

    #[test]
    fn constant_series_smooths_to_itself() {
        let obs = vec![Some(0.7); 20];
        let fit = local_level(&obs, 0.3, 2.0).unwrap();
        assert!(fit.smoothed.iter().all(|v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn tiny_observation_variance_reproduces_input() {
        let obs: Vec<Option<f64>> = (0..25).map(|i| Some((i as f64 * 0.7).sin())).collect();
        let fit = local_level(&obs, 0.01, 1e-12).unwrap();
        for (s, o) in fit.smoothed.iter().zip(&obs) {
            assert!((s - o.unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn heavy_observation_noise_reduces_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let obs: Vec<Option<f64>> = (0..200).map(|_| Some(noise.sample(&mut rng))).collect();
        let fit = local_level(&obs, 1e-3, 1.0).unwrap();
        let var = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
        };
        let raw: Vec<f64> = obs.iter().flatten().copied().collect();
        assert!(var(&fit.smoothed) < var(&raw));
    }

    #[test]
    fn gaps_are_bridged() {
        let obs = vec![Some(1.0), None, None, Some(2.0), Some(2.5), None, Some(3.0)];
        let fit = local_level(&obs, 0.1, 0.1).unwrap();
        assert!(fit.smoothed.iter().all(|v| v.is_finite()));
        assert!(fit.smoothed[1] > 1.0 && fit.smoothed[2] < 2.5);
    }

    #[test]
    fn all_gap_input_is_an_error() {
        assert!(local_level(&[None, None], 1.0, 1.0).is_err());
    }

    #[test]
    fn tuning_constant_input_returns_floor() {
        let cfg = tune_smoother(&vec![Some(1.25); 12]).unwrap();
        assert_eq!(cfg.process_variance, VARIANCE_FLOOR);
        assert_eq!(cfg.observation_variance, VARIANCE_FLOOR);
    }

    #[test]
    fn tuned_pair_is_the_grid_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut level = 0.0;
        let obs: Vec<Option<f64>> = (0..40)
            .map(|_| {
                level += 0.2 * noise.sample(&mut rng);
                Some(level + 0.5 * noise.sample(&mut rng))
            })
            .collect();
        let cfg = tune_smoother(&obs).unwrap();
        let best = local_level(&obs, cfg.process_variance, cfg.observation_variance)
            .unwrap()
            .log_likelihood;
        for &q in &tune_grid() {
            for &h in &tune_grid() {
                assert!(best >= local_level(&obs, q, h).unwrap().log_likelihood);
            }
        }
    }

    #[test]
    fn tuning_recovers_simulated_variances() {
        let (q_true, h_true) = (0.1_f64, 1.0_f64);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let state = Normal::new(0.0, q_true.sqrt()).unwrap();
        let meas = Normal::new(0.0, h_true.sqrt()).unwrap();
        let mut level = 0.0;
        let obs: Vec<Option<f64>> = (0..4000)
            .map(|_| {
                level += state.sample(&mut rng);
                Some(level + meas.sample(&mut rng))
            })
            .collect();
        let cfg = tune_smoother(&obs).unwrap();
        let step = TUNE_GRID_STEP + 1e-9;
        assert!((cfg.process_variance.log10() - q_true.log10()).abs() <= step, "{cfg:?}");
        assert!((cfg.observation_variance.log10() - h_true.log10()).abs() <= step, "{cfg:?}");
    }

    #[test]
    fn smooth_series_without_tuning_uses_given_variances() {
        let x: Vec<f64> = (0..15).map(|i| 1.0 + 0.1 * i as f64 + 0.02 * ((i * 7) % 4) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.5 * v).collect();
        let raw = rolling_elasticity("X", &years(15), &x, &y, 5).unwrap();
        let s = smooth_series(&raw, &SmootherConfig::default()).unwrap();
        assert_eq!(s.smoother, SmootherConfig::default());
        assert_eq!(s.epsilon_smooth.len(), s.years.len());
        assert!(s.epsilon_smooth.iter().all(|v| (v - 1.5).abs() < 1e-10));
    }
}

use need_core::elasticity::rolling_elasticity;
use need_core::models::{fit_logistic, LogisticParams};
use need_core::regime::{adjusted_rand_index, kmeans, KMEANS_STARTS};
use need_core::synth::{generate, SynthSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[test]
fn two_point_logistic_matches_fixed_point() {
    // symmetric data forces b = 0 and w = 2 * sigmoid(-w) / lambda
    let x = vec![vec![-1.0], vec![1.0]];
    let y = vec![0.0, 1.0];
    let (mut lo, mut hi) = (0.0, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - 2.0 * sigmoid(-mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let expected = 0.5 * (lo + hi);
    assert!((expected - 0.6749).abs() < 1e-4);

    for standardize in [false, true] {
        let params = LogisticParams {
            lambda: 1.0,
            tol: 1e-12,
            standardize,
            ..LogisticParams::default()
        };
        let m = fit_logistic(&x, &y, params).unwrap();
        assert!(m.intercept.abs() < 1e-9, "{standardize}: b = {}", m.intercept);
        assert!((m.coefficients[0] - expected).abs() < 1e-8, "{standardize}: w = {}", m.coefficients[0]);
    }
}

#[test]
fn kmeans_recovers_planted_blobs() {
    let centers = [[0.0, 0.0, 0.0], [8.0, 0.0, 1.0], [0.0, 9.0, -4.0]];
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for i in 0..300 {
            let c = i % 3;
            pts.push(centers[c].iter().map(|m| m + rng.random_range(-1.0..1.0)).collect::<Vec<f64>>());
            truth.push(c);
        }
        let fit = kmeans(&pts, 3, seed, KMEANS_STARTS).unwrap();
        assert_eq!(adjusted_rand_index(&truth, &fit.assignments), 1.0, "seed {seed}");
    }
}

/// OLS slope of the cumulative path implied by `eps` against time, in
/// units of the constant GDP step.
fn window_slope(eps: &[f64], start: usize, end: usize) -> f64 {
    let mut y = vec![0.0];
    for e in &eps[start + 1..=end] {
        y.push(y[y.len() - 1] + e);
    }
    let n = y.len() as f64;
    let tbar = (n - 1.0) / 2.0;
    let ybar = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in y.iter().enumerate() {
        sxy += (t as f64 - tbar) * (v - ybar);
        sxx += (t as f64 - tbar).powi(2);
    }
    sxy / sxx
}

#[test]
fn noiseless_synth_elasticity_is_exact() {
    let spec = SynthSpec {
        n_countries: 60,
        n_years: 72,
        ..SynthSpec::preset("noiseless", 3).unwrap()
    };
    let out = generate(&spec).unwrap();
    let window = 10;
    let mut checked = 0;
    for c in &out.panel.countries {
        let eps: Vec<f64> = out
            .truth
            .iter()
            .filter(|t| t.country_code == c.country_code)
            .map(|t| t.epsilon)
            .collect();
        assert_eq!(eps.len(), spec.n_years);
        let raw = rolling_elasticity(&c.country_code, &c.years(), &c.ln_gdp(), &c.ln_co2(), window).unwrap();
        for (year, est) in raw.years.iter().zip(&raw.epsilon_raw) {
            let end = (year - spec.start_year) as usize;
            let want = window_slope(&eps, end + 1 - window, end);
            let got = est.unwrap();
            assert!((got - want).abs() < 1e-6 * (1.0 + want.abs()), "{} {year}: {got} vs {want}", c.country_code);
            checked += 1;
        }
    }
    assert_eq!(checked, 60 * (72 - window + 1));
}

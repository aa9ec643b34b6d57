//! Rolling moment detectors on the raw elasticity series.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NeedError, Result};

pub const BASELINE_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BaselineKind {
    Kurt5,
    Skew5,
    VarCtrl5,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Kurt5, BaselineKind::Skew5, BaselineKind::VarCtrl5];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Kurt5 => "Kurt5",
            BaselineKind::Skew5 => "Skew5",
            BaselineKind::VarCtrl5 => "VarCtrl5",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = NeedError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kurt5" => Ok(BaselineKind::Kurt5),
            "skew5" => Ok(BaselineKind::Skew5),
            "varctrl5" => Ok(BaselineKind::VarCtrl5),
            _ => Err(NeedError::invalid(format!("unknown baseline '{s}'"))),
        }
    }
}

/// Population mean and central moments m2, m3, m4.
fn moments(w: &[f64]) -> (f64, f64, f64, f64) {
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in w {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    (mean, m2 / n, m3 / n, m4 / n)
}

fn degenerate(w: &[f64], m2: f64) -> bool {
    let scale = w.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    m2 <= (1e-14 * scale).powi(2) || m2 == 0.0
}

/// Excess kurtosis with population moments; `None` for zero variance.
pub fn excess_kurtosis(w: &[f64]) -> Option<f64> {
    let (_, m2, _, m4) = moments(w);
    (!degenerate(w, m2)).then(|| m4 / (m2 * m2) - 3.0)
}

pub fn skewness(w: &[f64]) -> Option<f64> {
    let (_, m2, m3, _) = moments(w);
    (!degenerate(w, m2)).then(|| m3 / m2.powf(1.5))
}

/// Baseline score per year of `raw` (aligned with it). The window ending at
/// t needs all five values t-4..t defined; VarCtrl5 also needs the window
/// ending at t-1 with non-zero variance.
pub fn baseline_scores(kind: BaselineKind, raw: &[Option<f64>]) -> Vec<Option<f64>> {
    let w = BASELINE_WINDOW;
    let window = |t: usize| -> Option<Vec<f64>> {
        if t + 1 < w {
            return None;
        }
        raw[t + 1 - w..=t].iter().copied().collect()
    };
    (0..raw.len())
        .map(|t| {
            let cur = window(t)?;
            match kind {
                BaselineKind::Kurt5 => excess_kurtosis(&cur),
                BaselineKind::Skew5 => skewness(&cur).map(f64::abs),
                BaselineKind::VarCtrl5 => {
                    if t == 0 {
                        return None;
                    }
                    let prev = window(t - 1)?;
                    let (_, v_prev, _, _) = moments(&prev);
                    let (_, v_cur, _, _) = moments(&cur);
                    if degenerate(&prev, v_prev) {
                        log::debug!("varctrl5: zero variance in previous window");
                        return None;
                    }
                    Some(v_cur / v_prev)
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spike_is_more_kurtotic_than_ramp() {
        let spike = excess_kurtosis(&[0.0, 0.0, 0.0, 0.0, 10.0]).unwrap();
        let ramp = excess_kurtosis(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!((spike - 0.25).abs() < 1e-12);
        assert!((ramp + 1.3).abs() < 1e-12);
        assert!(spike > ramp);
    }

    #[test]
    fn constant_window_is_a_gap() {
        let raw = vec![Some(1.0); 7];
        for k in BaselineKind::ALL {
            assert!(baseline_scores(k, &raw).iter().all(Option::is_none));
        }
    }

    #[test]
    fn gaps_block_windows() {
        let mut raw: Vec<Option<f64>> = (0..10).map(|i| Some((i * i) as f64)).collect();
        raw[5] = None;
        let s = baseline_scores(BaselineKind::Kurt5, &raw);
        assert!(s[4].is_some());
        assert!(s[5..=9].iter().all(Option::is_none));
    }
}

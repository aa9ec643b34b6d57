//! Synthetic panels with planted elasticity paths, regimes and events.
//!
//! ln_gdp is a random walk with drift. Emissions follow the incremental law
//! `ln_co2_t = ln_co2_{t-1} + eps_t * (ln_gdp_t - ln_gdp_{t-1}) + noise`,
//! so within a constant-eps segment `ln_co2 = c + eps * ln_gdp` exactly
//! (the intercept `c` is whatever keeps the path continuous).
//!
//! Segment kinds map to regime truth: constant -> store-dominant, drift ->
//! flow-dominant, burst -> transitional. Events are the first years of burst
//! segments.

use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{NeedError, Result};
use crate::panel::{assemble_panel, IngestConfig, Panel, RawRecord, Subregion};
use crate::regime::RegimeLabel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SegmentKind {
    Constant { epsilon: f64 },
    /// eps = start + slope * (k + 1), k = years into the segment
    Drift { start: f64, slope: f64 },
    /// eps = center + amplitude * (1, 0, -1, 0)[k mod 4], k = years into the
    /// segment, with the amplitude ramped over the first and last four years
    Burst { center: f64, amplitude: f64 },
}

impl SegmentKind {
    pub fn regime(&self) -> RegimeLabel {
        match self {
            SegmentKind::Constant { .. } => RegimeLabel::StoreDominant,
            SegmentKind::Drift { .. } => RegimeLabel::FlowDominant,
            SegmentKind::Burst { .. } => RegimeLabel::Transitional,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SegmentKind::Constant { .. } => "constant",
            SegmentKind::Drift { .. } => "drift",
            SegmentKind::Burst { .. } => "burst",
        }
    }
}

/// Years `start..=end`, 1-based within the country's span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub kind: SegmentKind,
}

/// Ranges for randomly drawn cycles
/// `store low -> drift up -> burst -> store high -> drift down -> burst`.
/// Segments default to 11-13 years so every type has years unaffected by
/// its neighbours.
///
/// Store plateaus sit at `center ± spread`, drifts cross between them at
/// constant speed and bursts oscillate around `center` with the period-4
/// pattern `(A, 0, -A, 0)`, which survives the five-year trailing window as a
/// square wave of constant derivative magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleStyle {
    pub store_len: (usize, usize),
    pub drift_len: (usize, usize),
    pub burst_len: (usize, usize),
    pub center: (f64, f64),
    pub spread: (f64, f64),
    pub burst_amplitude: (f64, f64),
}

impl Default for CycleStyle {
    fn default() -> Self {
        CycleStyle {
            store_len: (11, 13),
            drift_len: (11, 13),
            burst_len: (11, 13),
            center: (0.4, 1.2),
            spread: (0.9, 1.0),
            burst_amplitude: (7.0, 7.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Scripts {
    Random(CycleStyle),
    /// One script per country.
    Explicit(Vec<Vec<Segment>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_countries: usize,
    pub n_years: usize,
    pub start_year: i32,
    pub gdp_drift: f64,
    pub gdp_sd: f64,
    pub co2_sd: f64,
    pub scripts: Scripts,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_countries: 150,
            n_years: 32,
            start_year: 1991,
            gdp_drift: 0.025,
            gdp_sd: 0.02,
            co2_sd: 0.002,
            scripts: Scripts::Random(CycleStyle::default()),
            seed: 42,
        }
    }
}

impl SynthSpec {
    /// Named presets: `default` (150 x 32), `small` (30 x 32) and
    /// `noiseless` (default shape, no noise).
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        let base = SynthSpec {
            seed,
            ..SynthSpec::default()
        };
        match name {
            "default" => Ok(base),
            "small" => Ok(SynthSpec {
                n_countries: 30,
                ..base
            }),
            "noiseless" => Ok(SynthSpec {
                gdp_sd: 0.0,
                co2_sd: 0.0,
                ..base
            }),
            _ => Err(NeedError::config("spec", format!("unknown synthetic preset '{name}'"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_countries == 0 || self.n_years == 0 {
            return Err(NeedError::config("n_countries", "countries and years must be positive"));
        }
        if !(self.gdp_sd >= 0.0) || !(self.co2_sd >= 0.0) {
            return Err(NeedError::config("noise", "noise standard deviations must be >= 0"));
        }
        if let Scripts::Explicit(scripts) = &self.scripts {
            if scripts.len() != self.n_countries {
                return Err(NeedError::invalid(format!(
                    "{} scripts for {} countries",
                    scripts.len(),
                    self.n_countries
                )));
            }
            for s in scripts {
                check_tiling(s, self.n_years)?;
            }
        }
        Ok(())
    }
}

fn check_tiling(script: &[Segment], n_years: usize) -> Result<()> {
    let mut next = 1;
    for seg in script {
        if seg.start != next || seg.end < seg.start {
            return Err(NeedError::invalid(format!(
                "segments overlap or leave a hole at year {next}"
            )));
        }
        next = seg.end + 1;
    }
    if next != n_years + 1 {
        return Err(NeedError::invalid("segments do not cover the full span"));
    }
    Ok(())
}

fn draw_len(rng: &mut ChaCha8Rng, (lo, hi): (usize, usize)) -> usize {
    rng.random_range(lo..=hi.max(lo))
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// Six-phase cycles starting at a random phase.
pub fn random_script(style: &CycleStyle, n_years: usize, rng: &mut ChaCha8Rng) -> Vec<Segment> {
    let center = draw(rng, style.center);
    let spread = draw(rng, style.spread);
    let mut segs = Vec::new();
    let mut phase = rng.random_range(0..6usize);
    // the first segment starts part-way through
    let mut skip = rng.random_range(0..=2usize);
    let mut t = 1;
    while t <= n_years {
        let (len, kind) = match phase {
            0 | 3 => {
                let sign = if phase == 0 { -1.0 } else { 1.0 };
                let kind = SegmentKind::Constant {
                    epsilon: center + sign * spread,
                };
                (draw_len(rng, style.store_len), kind)
            }
            1 | 4 => {
                let sign = if phase == 1 { 1.0 } else { -1.0 };
                let len = draw_len(rng, style.drift_len);
                let kind = SegmentKind::Drift {
                    start: center - sign * spread,
                    slope: sign * 2.0 * spread / len as f64,
                };
                (len, kind)
            }
            _ => {
                let kind = SegmentKind::Burst {
                    center,
                    amplitude: draw(rng, style.burst_amplitude),
                };
                (draw_len(rng, style.burst_len), kind)
            }
        };
        let len = len.saturating_sub(skip).max(1);
        skip = 0;
        let end = (t + len - 1).min(n_years);
        segs.push(Segment { start: t, end, kind });
        t = end + 1;
        phase = (phase + 1) % 6;
    }
    segs
}

/// Years over which a burst ramps up to (and down from) full amplitude.
const BURST_TAPER: f64 = 4.0;

fn epsilon_path(script: &[Segment]) -> Vec<f64> {
    let mut eps = Vec::new();
    for seg in script {
        for t in seg.start..=seg.end {
            let k = (t - seg.start) as f64;
            eps.push(match seg.kind {
                SegmentKind::Constant { epsilon } => epsilon,
                SegmentKind::Drift { start, slope } => start + slope * (k + 1.0),
                SegmentKind::Burst { center, amplitude } => {
                    let len = (seg.end - seg.start + 1) as f64;
                    let taper = ((k + 1.0) / BURST_TAPER).min((len - k) / BURST_TAPER).min(1.0);
                    center + taper * amplitude * [1.0, 0.0, -1.0, 0.0][(t - seg.start) % 4]
                }
            });
        }
    }
    eps
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthRow {
    pub country_code: String,
    pub year: i32,
    pub epsilon: f64,
    pub segment: &'static str,
    pub label: RegimeLabel,
    /// Years since the current segment began (0 in its first year).
    pub segment_age: usize,
    /// Years until the segment ends (0 in its last year).
    pub segment_remaining: usize,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub panel: Panel,
    pub truth: Vec<TruthRow>,
    pub events: Vec<(String, i32)>,
    pub scripts: Vec<Vec<Segment>>,
}

pub fn country_code(i: usize) -> String {
    format!("S{:03}", i + 1)
}

pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let mut records = Vec::with_capacity(spec.n_countries * spec.n_years);
    let mut truth = Vec::new();
    let mut events = Vec::new();
    let mut scripts = Vec::new();
    for c in 0..spec.n_countries {
        let mut rng = ChaCha8Rng::seed_from_u64(master.random());
        let script = match &spec.scripts {
            Scripts::Random(style) => random_script(style, spec.n_years, &mut rng),
            Scripts::Explicit(s) => s[c].clone(),
        };
        let eps = epsilon_path(&script);
        let code = country_code(c);
        let subregion = Subregion::ALL[c % Subregion::ALL.len()];
        let mut ln_gdp = 23.0 + 2.0 * rng.random::<f64>();
        let mut ln_co2 = 9.0 + 2.0 * rng.random::<f64>();
        for (t, e) in eps.iter().enumerate() {
            if t > 0 {
                let dg = spec.gdp_drift + spec.gdp_sd * unit.sample(&mut rng);
                ln_gdp += dg;
                ln_co2 += e * dg + spec.co2_sd * unit.sample(&mut rng);
            }
            let year = spec.start_year + t as i32;
            records.push(RawRecord {
                country_code: code.clone(),
                country_name: format!("Synthetic {}", c + 1),
                subregion: Some(subregion),
                year,
                co2_kt: Some(ln_co2.exp()),
                gdp_const_usd: Some(ln_gdp.exp()),
            });
        }
        for seg in &script {
            if matches!(seg.kind, SegmentKind::Burst { .. }) && seg.start > 1 {
                events.push((code.clone(), spec.start_year + seg.start as i32 - 1));
            }
            for t in seg.start..=seg.end {
                truth.push(TruthRow {
                    country_code: code.clone(),
                    year: spec.start_year + t as i32 - 1,
                    epsilon: eps[t - 1],
                    segment: seg.kind.name(),
                    label: seg.kind.regime(),
                    segment_age: t - seg.start,
                    segment_remaining: seg.end - t,
                });
            }
        }
        scripts.push(script);
    }
    let cfg = IngestConfig {
        year_min: spec.start_year,
        year_max: spec.start_year + spec.n_years as i32 - 1,
        source: format!("synthetic (seed {})", spec.seed),
        ..IngestConfig::default()
    };
    let panel = assemble_panel(records, &cfg)?;
    Ok(SynthOutput {
        panel,
        truth,
        events,
        scripts,
    })
}

pub fn write_truth_csv<W: Write>(out: &SynthOutput, elasticity: W, regimes: W, events: W) -> Result<()> {
    let mut e = csv::Writer::from_writer(elasticity);
    e.write_record(["country_code", "year", "epsilon_true"])?;
    let mut r = csv::Writer::from_writer(regimes);
    r.write_record(["country_code", "year", "segment", "label"])?;
    for t in &out.truth {
        e.write_record([t.country_code.clone(), t.year.to_string(), t.epsilon.to_string()])?;
        r.write_record([
            t.country_code.clone(),
            t.year.to_string(),
            t.segment.to_string(),
            t.label.as_str().to_string(),
        ])?;
    }
    let mut v = csv::Writer::from_writer(events);
    v.write_record(["country_code", "year"])?;
    for (c, y) in &out.events {
        v.write_record([c.clone(), y.to_string()])?;
    }
    e.flush()?;
    r.flush()?;
    v.flush()?;
    Ok(())
}

impl FromStr for CycleStyle {
    type Err = NeedError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(CycleStyle::default()),
            _ => Err(NeedError::invalid(format!("unknown cycle style '{s}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overlapping_segments_rejected() {
        let seg = |start, end| Segment {
            start,
            end,
            kind: SegmentKind::Constant { epsilon: 1.0 },
        };
        let spec = SynthSpec {
            n_countries: 1,
            n_years: 10,
            scripts: Scripts::Explicit(vec![vec![seg(1, 6), seg(5, 10)]]),
            ..SynthSpec::default()
        };
        assert!(generate(&spec).is_err());
    }

    #[test]
    fn random_scripts_tile_the_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let s = random_script(&CycleStyle::default(), 32, &mut rng);
            check_tiling(&s, 32).unwrap();
        }
    }

    #[test]
    fn default_panel_shape() {
        let out = generate(&SynthSpec::default()).unwrap();
        assert_eq!(out.panel.n_observations(), 150 * 32);
        assert_eq!(out.truth.len(), 150 * 32);
        assert!(!out.events.is_empty());
    }
}

//! Derivative chain and quadratic energy functionals of the smoothed
//! elasticity path.
//!
//! With unit mass and unit stiffness:
//!
//! ```text
//! kinetic      = v^2 / 2            potential   = (eps - eps*)^2 / 2
//! accel_energy = a^2 / 2            jerk_energy = j^2 / 2
//! hamiltonian  = kinetic + potential
//! lagrangian   = kinetic - potential
//! total_energy = kinetic + potential + accel_energy + jerk_energy
//! power        = dH/dt
//! ```
//!
//! Differences use annual spacing: central differences inside a run of
//! consecutive years, one-sided first differences at the run's ends.

use serde::{Deserialize, Serialize};

use crate::error::{NeedError, Result};

pub const MIN_RUN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EquilibriumSpec {
    CountryMean,
    GlobalMean,
    Fixed(f64),
}

impl Default for EquilibriumSpec {
    fn default() -> Self {
        EquilibriumSpec::CountryMean
    }
}

impl EquilibriumSpec {
    /// Resolves eps* for one country. `global_mean` is the pooled mean of all
    /// smoothed values and is only consulted in `GlobalMean` mode.
    pub fn resolve(&self, country_values: &[f64], global_mean: f64) -> Result<f64> {
        let v = match *self {
            EquilibriumSpec::CountryMean => {
                if country_values.is_empty() {
                    return Err(NeedError::insufficient("no values for equilibrium"));
                }
                country_values.iter().sum::<f64>() / country_values.len() as f64
            }
            EquilibriumSpec::GlobalMean => global_mean,
            EquilibriumSpec::Fixed(v) => v,
        };
        if !v.is_finite() {
            return Err(NeedError::invalid("equilibrium elasticity is not finite"));
        }
        Ok(v)
    }
}

/// Elasticity with its first three time derivatives, restricted to runs of at
/// least [`MIN_RUN`] consecutive years.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeChain {
    pub years: Vec<i32>,
    pub epsilon: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
    pub jerk: Vec<f64>,
}

/// First derivative on unit spacing.
pub fn difference(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| {
                if i == 0 {
                    x[1] - x[0]
                } else if i == n - 1 {
                    x[n - 1] - x[n - 2]
                } else {
                    (x[i + 1] - x[i - 1]) / 2.0
                }
            })
            .collect(),
    }
}

/// Splits strictly increasing years into runs of consecutive years.
pub(crate) fn consecutive_runs(years: &[i32]) -> Vec<std::ops::Range<usize>> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=years.len() {
        if i == years.len() || years[i] != years[i - 1] + 1 {
            if i > start {
                runs.push(start..i);
            }
            start = i;
        }
    }
    runs
}

pub fn derivative_chain(years: &[i32], epsilon: &[f64]) -> Result<DerivativeChain> {
    if years.len() != epsilon.len() {
        return Err(NeedError::invalid("years and epsilon must have equal length"));
    }
    if years.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NeedError::invalid("years must be strictly increasing"));
    }
    let mut chain = DerivativeChain {
        years: vec![],
        epsilon: vec![],
        velocity: vec![],
        acceleration: vec![],
        jerk: vec![],
    };
    for run in consecutive_runs(years) {
        if run.len() < MIN_RUN {
            continue;
        }
        let eps = &epsilon[run.clone()];
        let v = difference(eps);
        let a = difference(&v);
        let j = difference(&a);
        chain.years.extend_from_slice(&years[run]);
        chain.epsilon.extend_from_slice(eps);
        chain.velocity.extend(v);
        chain.acceleration.extend(a);
        chain.jerk.extend(j);
    }
    if chain.years.is_empty() {
        return Err(NeedError::insufficient("series too short for jerk"));
    }
    Ok(chain)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergeticsState {
    pub country_code: String,
    pub year: i32,
    pub epsilon: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub jerk: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub hamiltonian: f64,
    pub lagrangian: f64,
    pub accel_energy: f64,
    pub jerk_energy: f64,
    pub total_energy: f64,
    pub power: f64,
    /// d(total_energy)/dt, kept for diagnostics.
    pub total_power: f64,
}

impl EnergeticsState {
    pub const COLUMNS: [&'static str; 12] = [
        "epsilon",
        "velocity",
        "acceleration",
        "jerk",
        "kinetic",
        "potential",
        "hamiltonian",
        "lagrangian",
        "accel_energy",
        "jerk_energy",
        "total_energy",
        "power",
    ];

    /// The twelve state columns, in [`Self::COLUMNS`] order.
    pub fn feature_row(&self) -> [f64; 12] {
        [
            self.epsilon,
            self.velocity,
            self.acceleration,
            self.jerk,
            self.kinetic,
            self.potential,
            self.hamiltonian,
            self.lagrangian,
            self.accel_energy,
            self.jerk_energy,
            self.total_energy,
            self.power,
        ]
    }
}

pub fn energy_states(country_code: &str, chain: &DerivativeChain, equilibrium: f64) -> Vec<EnergeticsState> {
    let mut states: Vec<EnergeticsState> = (0..chain.years.len())
        .map(|i| {
            let kinetic = 0.5 * chain.velocity[i] * chain.velocity[i];
            let dev = chain.epsilon[i] - equilibrium;
            let potential = 0.5 * dev * dev;
            let accel_energy = 0.5 * chain.acceleration[i] * chain.acceleration[i];
            let jerk_energy = 0.5 * chain.jerk[i] * chain.jerk[i];
            EnergeticsState {
                country_code: country_code.to_string(),
                year: chain.years[i],
                epsilon: chain.epsilon[i],
                velocity: chain.velocity[i],
                acceleration: chain.acceleration[i],
                jerk: chain.jerk[i],
                kinetic,
                potential,
                hamiltonian: kinetic + potential,
                lagrangian: kinetic - potential,
                accel_energy,
                jerk_energy,
                total_energy: kinetic + potential + accel_energy + jerk_energy,
                power: 0.0,
                total_power: 0.0,
            }
        })
        .collect();
    for run in consecutive_runs(&chain.years) {
        let h: Vec<f64> = states[run.clone()].iter().map(|s| s.hamiltonian).collect();
        let e: Vec<f64> = states[run.clone()].iter().map(|s| s.total_energy).collect();
        for ((s, p), tp) in states[run].iter_mut().zip(difference(&h)).zip(difference(&e)) {
            s.power = p;
            s.total_power = tp;
        }
    }
    states
}

/// Trapezoid-rule integral of power over one run: equals `H_end - H_start`.
pub fn integrated_power(states: &[EnergeticsState]) -> f64 {
    match states.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = states[1..n - 1].iter().map(|s| s.power).sum();
            interior + 0.5 * (states[0].power + states[n - 1].power)
        }
    }
}

//! In-memory stage computations; no file I/O.

use rayon::prelude::*;

use crate::elasticity::{rolling_elasticity, smooth_series, ElasticitySeries, RawElasticity, SmootherConfig};
use crate::energetics::{derivative_chain, energy_states, EnergeticsState, EquilibriumSpec};
use crate::error::{NeedError, Result};
use crate::panel::Panel;
use crate::regime::{
    feature_vectors, kmeans_regimes, tercile_regimes, ClusterModel, FeaturePanel, FeatureSet, RegimeAssignment,
    RegimeMethod, TercileIndicator,
};

#[derive(Debug, Clone)]
pub struct ElasticityStage {
    pub raw: Vec<RawElasticity>,
    pub series: Vec<ElasticitySeries>,
    pub warnings: Vec<String>,
}

pub fn compute_elasticity(panel: &Panel, window: usize, smoother: &SmootherConfig) -> Result<ElasticityStage> {
    smoother.validate()?;
    let results: Vec<Result<(RawElasticity, ElasticitySeries), String>> = panel
        .countries
        .par_iter()
        .map(|c| {
            let raw = rolling_elasticity(&c.country_code, &c.years(), &c.ln_gdp(), &c.ln_co2(), window)
                .map_err(|e| format!("{}: {e}; country skipped", c.country_code))?;
            let series = smooth_series(&raw, smoother).map_err(|e| format!("{}: {e}; country skipped", c.country_code))?;
            Ok((raw, series))
        })
        .collect();
    let mut stage = ElasticityStage {
        raw: vec![],
        series: vec![],
        warnings: vec![],
    };
    for r in results {
        match r {
            Ok((raw, s)) => {
                if !raw.degenerate_anchors.is_empty() {
                    stage.warnings.push(format!(
                        "{}: zero GDP variation at anchors {:?}; left as gaps",
                        raw.country_code, raw.degenerate_anchors
                    ));
                }
                stage.raw.push(raw);
                stage.series.push(s);
            }
            Err(w) => stage.warnings.push(w),
        }
    }
    for w in &stage.warnings {
        log::warn!("{w}");
    }
    if stage.series.is_empty() {
        return Err(NeedError::insufficient("no country yields an elasticity series"));
    }
    Ok(stage)
}

pub fn compute_energetics(
    series: &[ElasticitySeries],
    equilibrium: EquilibriumSpec,
) -> Result<(Vec<EnergeticsState>, Vec<String>)> {
    let all: Vec<f64> = series.iter().flat_map(|s| s.epsilon_smooth.iter().copied()).collect();
    if all.is_empty() {
        return Err(NeedError::insufficient("no smoothed elasticity values"));
    }
    let global_mean = all.iter().sum::<f64>() / all.len() as f64;
    let results: Vec<Result<Vec<EnergeticsState>, String>> = series
        .par_iter()
        .map(|s| {
            let skip = |e: NeedError| format!("{}: {e}; country skipped", s.country_code);
            let chain = derivative_chain(&s.years, &s.epsilon_smooth).map_err(skip)?;
            let eq = equilibrium.resolve(&s.epsilon_smooth, global_mean).map_err(skip)?;
            Ok(energy_states(&s.country_code, &chain, eq))
        })
        .collect();
    let mut states = Vec::new();
    let mut warnings = Vec::new();
    for r in results {
        match r {
            Ok(v) => states.extend(v),
            Err(w) => {
                log::warn!("{w}");
                warnings.push(w);
            }
        }
    }
    if states.is_empty() {
        return Err(NeedError::insufficient("no country has a complete derivative chain"));
    }
    Ok((states, warnings))
}

#[derive(Debug, Clone)]
pub struct RegimeStage {
    pub assignments: Vec<RegimeAssignment>,
    pub cluster: Option<ClusterModel>,
    pub features: FeaturePanel,
    pub warnings: Vec<String>,
}

pub fn compute_regimes(
    states: &[EnergeticsState],
    methods: &[RegimeMethod],
    indicator: TercileIndicator,
    feature_set: FeatureSet,
    seed: u64,
) -> Result<RegimeStage> {
    if states.is_empty() {
        return Err(NeedError::insufficient("no energetics states to classify"));
    }
    let features = feature_vectors(states, feature_set);
    let mut stage = RegimeStage {
        assignments: vec![],
        cluster: None,
        warnings: features.warnings.clone(),
        features,
    };
    for m in methods {
        match m {
            RegimeMethod::ExogenousTercile => {
                stage
                    .assignments
                    .extend(tercile_regimes(states, indicator, &stage.features)?);
            }
            RegimeMethod::EndogenousKmeans => {
                let (model, a) = kmeans_regimes(states, &stage.features, seed)?;
                stage.cluster = Some(model);
                stage.assignments.extend(a);
            }
        }
    }
    Ok(stage)
}

//! Regime identification: exogenous ascending terciles of an energetic
//! indicator, and endogenous k-means over z-scored diagnostic features.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energetics::EnergeticsState;
use crate::error::{NeedError, Result};
use crate::panel::Subregion;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegimeLabel {
    FlowDominant,
    Transitional,
    StoreDominant,
}

impl RegimeLabel {
    pub const ALL: [RegimeLabel; 3] = [
        RegimeLabel::FlowDominant,
        RegimeLabel::Transitional,
        RegimeLabel::StoreDominant,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeLabel::FlowDominant => "flow-dominant",
            RegimeLabel::Transitional => "transitional",
            RegimeLabel::StoreDominant => "store-dominant",
        }
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegimeLabel {
    type Err = NeedError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "flow-dominant" | "flow" => Ok(RegimeLabel::FlowDominant),
            "transitional" => Ok(RegimeLabel::Transitional),
            "store-dominant" | "store" => Ok(RegimeLabel::StoreDominant),
            _ => Err(NeedError::invalid(format!("unknown regime label '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegimeMethod {
    ExogenousTercile,
    EndogenousKmeans,
}

impl RegimeMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeMethod::ExogenousTercile => "exogenous_tercile",
            RegimeMethod::EndogenousKmeans => "endogenous_kmeans",
        }
    }
}

impl fmt::Display for RegimeMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegimeMethod {
    type Err = NeedError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exogenous_tercile" | "exogenous" => Ok(RegimeMethod::ExogenousTercile),
            "endogenous_kmeans" | "endogenous" => Ok(RegimeMethod::EndogenousKmeans),
            _ => Err(NeedError::invalid(format!("unknown regime method '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TercileIndicator {
    Lagrangian,
    Potential,
    Kinetic,
    TotalEnergy,
}

impl TercileIndicator {
    pub fn value(self, s: &EnergeticsState) -> f64 {
        match self {
            TercileIndicator::Lagrangian => s.lagrangian,
            TercileIndicator::Potential => s.potential,
            TercileIndicator::Kinetic => s.kinetic,
            TercileIndicator::TotalEnergy => s.total_energy,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TercileIndicator::Lagrangian => "lagrangian",
            TercileIndicator::Potential => "potential",
            TercileIndicator::Kinetic => "kinetic",
            TercileIndicator::TotalEnergy => "total_energy",
        }
    }
}

impl FromStr for TercileIndicator {
    type Err = NeedError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "lagrangian" => Ok(TercileIndicator::Lagrangian),
            "potential" => Ok(TercileIndicator::Potential),
            "kinetic" => Ok(TercileIndicator::Kinetic),
            "total_energy" => Ok(TercileIndicator::TotalEnergy),
            _ => Err(NeedError::invalid(format!("unknown tercile indicator '{s}'"))),
        }
    }
}

/// Which columns feed the clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSet {
    /// Tension (potential), pace (kinetic), instability (jerk energy).
    Diagnostic,
    /// All twelve energetics columns.
    Full,
}

impl FromStr for FeatureSet {
    type Err = NeedError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "diagnostic" => Ok(FeatureSet::Diagnostic),
            "full" => Ok(FeatureSet::Full),
            _ => Err(NeedError::invalid(format!("unknown feature set '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeAssignment {
    pub country_code: String,
    pub year: i32,
    pub label: RegimeLabel,
    pub method: RegimeMethod,
    /// z-scored (tension, pace, instability).
    pub features: [f64; 3],
}

/// Pooled, z-scored features aligned with the input states.
#[derive(Debug, Clone)]
pub struct FeaturePanel {
    pub diagnostic: Vec<[f64; 3]>,
    pub clustering: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

/// Standardises each column by its pooled mean and population sd. Columns with
/// zero sd become all zeros; their indices are returned.
pub fn zscore_columns(rows: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let Some(width) = rows.first().map(Vec::len) else {
        return (vec![], vec![]);
    };
    let n = rows.len() as f64;
    let mut out = vec![vec![0.0; width]; rows.len()];
    let mut degenerate = Vec::new();
    for c in 0..width {
        let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd <= 1e-300 || !sd.is_finite() {
            degenerate.push(c);
            continue;
        }
        for (o, r) in out.iter_mut().zip(rows) {
            o[c] = (r[c] - mean) / sd;
        }
    }
    (out, degenerate)
}

pub fn feature_vectors(states: &[EnergeticsState], set: FeatureSet) -> FeaturePanel {
    let diag_raw: Vec<Vec<f64>> = states
        .iter()
        .map(|s| vec![s.potential, s.kinetic, s.jerk_energy])
        .collect();
    let (diag, zero) = zscore_columns(&diag_raw);
    let names = ["tension", "pace", "instability"];
    let mut warnings: Vec<String> = zero
        .iter()
        .map(|&c| format!("feature '{}' has zero spread; z-scores set to 0", names[c]))
        .collect();
    let diagnostic: Vec<[f64; 3]> = diag.iter().map(|r| [r[0], r[1], r[2]]).collect();
    let clustering = match set {
        FeatureSet::Diagnostic => diag,
        FeatureSet::Full => {
            let raw: Vec<Vec<f64>> = states.iter().map(|s| s.feature_row().to_vec()).collect();
            let (z, zero) = zscore_columns(&raw);
            warnings.extend(zero.iter().map(|&c| {
                format!(
                    "feature '{}' has zero spread; z-scores set to 0",
                    EnergeticsState::COLUMNS[c]
                )
            }));
            z
        }
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    FeaturePanel {
        diagnostic,
        clustering,
        warnings,
    }
}

/// Group sizes for splitting `n` ranked items into thirds (remainder goes to
/// the lowest groups first).
pub fn tercile_sizes(n: usize) -> [usize; 3] {
    let q = n / 3;
    let r = n % 3;
    [q + usize::from(r > 0), q + usize::from(r > 1), q]
}

/// Ascending-tercile rule: bottom third store-dominant, middle transitional,
/// top flow-dominant. Ties are broken by (country_code, year).
pub fn tercile_regimes(
    states: &[EnergeticsState],
    indicator: TercileIndicator,
    features: &FeaturePanel,
) -> Result<Vec<RegimeAssignment>> {
    if states.len() < 3 {
        return Err(NeedError::insufficient(format!(
            "tercile rule needs at least 3 observations, got {}",
            states.len()
        )));
    }
    if let Some(s) = states.iter().find(|s| !indicator.value(s).is_finite()) {
        return Err(NeedError::invalid(format!(
            "{} is not finite for {} {}",
            indicator.as_str(),
            s.country_code,
            s.year
        )));
    }
    let mut order: Vec<usize> = (0..states.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (&states[a], &states[b]);
        indicator
            .value(sa)
            .total_cmp(&indicator.value(sb))
            .then_with(|| sa.country_code.cmp(&sb.country_code))
            .then_with(|| sa.year.cmp(&sb.year))
    });
    let sizes = tercile_sizes(states.len());
    let mut labels = vec![RegimeLabel::Transitional; states.len()];
    for (rank, &i) in order.iter().enumerate() {
        labels[i] = if rank < sizes[0] {
            RegimeLabel::StoreDominant
        } else if rank < sizes[0] + sizes[1] {
            RegimeLabel::Transitional
        } else {
            RegimeLabel::FlowDominant
        };
    }
    Ok(states
        .iter()
        .zip(labels)
        .zip(&features.diagnostic)
        .map(|((s, label), f)| RegimeAssignment {
            country_code: s.country_code.clone(),
            year: s.year,
            label,
            method: RegimeMethod::ExogenousTercile,
            features: *f,
        })
        .collect())
}

/// Result of Lloyd's algorithm.
#[derive(Debug, Clone)]
pub struct KmeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
}

pub const KMEANS_TOL: f64 = 1e-8;
pub const KMEANS_MAX_ITER: usize = 300;
pub const KMEANS_STARTS: usize = 8;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

/// Greedy farthest-point seeding from a given first point.
fn farthest_point_init(points: &[Vec<f64>], k: usize, first: usize) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[first].clone()];
    let mut min_d: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centroids.len() < k {
        let (idx, _) = min_d
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        let c = points[idx].clone();
        for (m, p) in min_d.iter_mut().zip(points) {
            *m = m.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> KmeansFit {
    let k = centroids.len();
    let dim = points[0].len();
    let mut assignments = vec![0; points.len()];
    let mut iterations = 0;
    loop {
        iterations += 1;
        for (a, p) in assignments.iter_mut().zip(points) {
            *a = nearest(p, &centroids).0;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                // Re-seed an empty cluster at the point worst served by its centroid.
                let far = (0..points.len())
                    .filter(|&i| counts[assignments[i]] > 1)
                    .max_by(|&a, &b| {
                        sq_dist(&points[a], &centroids[assignments[a]])
                            .total_cmp(&sq_dist(&points[b], &centroids[assignments[b]]))
                            .then(b.cmp(&a))
                    });
                if let Some(i) = far {
                    counts[assignments[i]] -= 1;
                    for (s, v) in sums[assignments[i]].iter_mut().zip(&points[i]) {
                        *s -= v;
                    }
                    assignments[i] = j;
                    counts[j] = 1;
                    sums[j] = points[i].clone();
                }
            }
        }
        let mut shift: f64 = 0.0;
        for j in 0..k {
            if counts[j] == 0 {
                continue;
            }
            let new: Vec<f64> = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            shift = shift.max(sq_dist(&new, &centroids[j]).sqrt());
            centroids[j] = new;
        }
        if shift < KMEANS_TOL || iterations >= KMEANS_MAX_ITER {
            break;
        }
    }
    for (a, p) in assignments.iter_mut().zip(points) {
        *a = nearest(p, &centroids).0;
    }
    hartigan(points, assignments, k, iterations)
}

/// Single-point moves that lower the inertia, counting the centroid shift a
/// move causes. Lloyd fixed points can still admit such moves; the result is
/// also a Lloyd fixed point.
fn hartigan(points: &[Vec<f64>], mut assignments: Vec<usize>, k: usize, mut iterations: usize) -> KmeansFit {
    let dim = points[0].len();
    let mut counts = vec![0usize; k];
    let mut sums = vec![vec![0.0; dim]; k];
    for (p, &a) in points.iter().zip(&assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    let centroid = |sums: &[Vec<f64>], counts: &[usize], j: usize| -> Vec<f64> {
        sums[j].iter().map(|s| s / counts[j].max(1) as f64).collect()
    };
    let mut centroids: Vec<Vec<f64>> = (0..k).map(|j| centroid(&sums, &counts, j)).collect();
    for _ in 0..KMEANS_MAX_ITER {
        let mut moved = false;
        for (i, p) in points.iter().enumerate() {
            let a = assignments[i];
            if counts[a] <= 1 {
                continue;
            }
            let na = counts[a] as f64;
            let removal = na / (na - 1.0) * sq_dist(p, &centroids[a]);
            let mut best = (a, removal);
            for b in (0..k).filter(|&b| b != a) {
                let nb = counts[b] as f64;
                let cost = nb / (nb + 1.0) * sq_dist(p, &centroids[b]);
                if cost < best.1 {
                    best = (b, cost);
                }
            }
            let (b, cost) = best;
            if b != a && cost < removal - 1e-12 * (1.0 + removal) {
                counts[a] -= 1;
                counts[b] += 1;
                for (d, v) in p.iter().enumerate() {
                    sums[a][d] -= v;
                    sums[b][d] += v;
                }
                centroids[a] = centroid(&sums, &counts, a);
                centroids[b] = centroid(&sums, &counts, b);
                assignments[i] = b;
                moved = true;
            }
        }
        iterations += 1;
        if !moved {
            break;
        }
    }
    // exact means rather than running sums
    let mut exact = vec![vec![0.0; dim]; k];
    for (p, &a) in points.iter().zip(&assignments) {
        for (s, v) in exact[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    for (j, c) in exact.iter_mut().enumerate() {
        if counts[j] > 0 {
            c.iter_mut().for_each(|v| *v /= counts[j] as f64);
            centroids[j] = c.clone();
        }
    }
    let inertia = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum();
    KmeansFit {
        centroids,
        assignments,
        inertia,
        iterations,
    }
}

/// k-means with deterministic farthest-point seeding.
///
/// Points are processed in lexicographic order, so the result does not depend
/// on input row order. `starts` farthest-point traversals are run: the first
/// begins at the point closest to the pooled mean, the rest at distinct seeded picks.
/// Each start runs Lloyd iterations followed by single-point refinement; the
/// lowest-inertia solution is kept.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, starts: usize) -> Result<KmeansFit> {
    if k == 0 || points.is_empty() {
        return Err(NeedError::invalid("k-means needs k > 0 and at least one point"));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
        return Err(NeedError::invalid("k-means points must be finite and of equal dimension"));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]));
    let sorted: Vec<Vec<f64>> = order.iter().map(|&i| points[i].clone()).collect();
    let distinct = 1 + sorted.windows(2).filter(|w| lex_cmp(&w[0], &w[1]).is_ne()).count();
    if distinct < k {
        return Err(NeedError::insufficient(format!(
            "degenerate clustering input: {distinct} distinct points for k = {k}"
        )));
    }

    let mean: Vec<f64> = (0..dim)
        .map(|c| sorted.iter().map(|p| p[c]).sum::<f64>() / sorted.len() as f64)
        .collect();
    let closest_to_mean = nearest(&mean, &sorted).0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extra = (starts.max(1) - 1).min(sorted.len() - 1);
    let firsts = std::iter::once(closest_to_mean).chain(
        index::sample(&mut rng, sorted.len() - 1, extra)
            .into_iter()
            .map(|i| if i >= closest_to_mean { i + 1 } else { i }),
    );
    let mut best: Option<KmeansFit> = None;
    for first in firsts {
        let fit = lloyd(&sorted, farthest_point_init(&sorted, k, first));
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    let mut fit = best.expect("at least one start");
    let mut assignments = vec![0; points.len()];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = fit.assignments[pos];
    }
    fit.assignments = assignments;
    Ok(fit)
}

/// Maps three clusters onto regime labels: the cluster with the highest mean
/// jerk energy is transitional; of the other two the higher mean Lagrangian
/// is flow-dominant and the lower store-dominant. Ties go to the lower index.
pub fn label_centroids(mean_lagrangian: &[f64; 3], mean_jerk_energy: &[f64; 3]) -> [RegimeLabel; 3] {
    let mut transitional = 0;
    for j in 1..3 {
        if mean_jerk_energy[j] > mean_jerk_energy[transitional] {
            transitional = j;
        }
    }
    let mut rest: Vec<usize> = (0..3).filter(|&j| j != transitional).collect();
    rest.sort_by(|&a, &b| mean_lagrangian[b].total_cmp(&mean_lagrangian[a]).then(a.cmp(&b)));
    let mut map = [RegimeLabel::Transitional; 3];
    map[rest[0]] = RegimeLabel::FlowDominant;
    map[rest[1]] = RegimeLabel::StoreDominant;
    map
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterModel {
    pub centroids: Vec<Vec<f64>>,
    pub seed: u64,
    pub inertia: f64,
    pub iterations: usize,
    pub sizes: Vec<usize>,
    pub label_map: [RegimeLabel; 3],
}

pub fn kmeans_regimes(
    states: &[EnergeticsState],
    features: &FeaturePanel,
    seed: u64,
) -> Result<(ClusterModel, Vec<RegimeAssignment>)> {
    let fit = kmeans(&features.clustering, 3, seed, KMEANS_STARTS)?;
    let mut sizes = vec![0usize; 3];
    let mut lag = [0.0; 3];
    let mut jerk = [0.0; 3];
    for (s, &a) in states.iter().zip(&fit.assignments) {
        sizes[a] += 1;
        lag[a] += s.lagrangian;
        jerk[a] += s.jerk_energy;
    }
    for j in 0..3 {
        if sizes[j] > 0 {
            lag[j] /= sizes[j] as f64;
            jerk[j] /= sizes[j] as f64;
        }
    }
    let label_map = label_centroids(&lag, &jerk);
    let assignments = states
        .iter()
        .zip(&fit.assignments)
        .zip(&features.diagnostic)
        .map(|((s, &a), f)| RegimeAssignment {
            country_code: s.country_code.clone(),
            year: s.year,
            label: label_map[a],
            method: RegimeMethod::EndogenousKmeans,
            features: *f,
        })
        .collect();
    Ok((
        ClusterModel {
            centroids: fit.centroids,
            seed,
            inertia: fit.inertia,
            iterations: fit.iterations,
            sizes,
            label_map,
        },
        assignments,
    ))
}

/// Adjusted Rand index between two partitions.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut table: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let c2 = |m: u64| (m * m.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.values().map(|&m| c2(m)).sum();
    let sum_a: f64 = rows.values().map(|&m| c2(m)).sum();
    let sum_b: f64 = cols.values().map(|&m| c2(m)).sum();
    let total = c2(n as u64);
    let expected = sum_a * sum_b / total;
    let max = 0.5 * (sum_a + sum_b);
    if (max - expected).abs() < f64::EPSILON {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

/// Label counts per subregion plus a total row.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeDistribution {
    pub method: RegimeMethod,
    pub rows: Vec<(Subregion, [usize; 3])>,
    pub total: [usize; 3],
}

pub fn regime_distribution(
    assignments: &[RegimeAssignment],
    method: RegimeMethod,
    subregions: &BTreeMap<String, Subregion>,
) -> RegimeDistribution {
    let mut counts: BTreeMap<Subregion, [usize; 3]> = Subregion::ALL.iter().map(|s| (*s, [0; 3])).collect();
    let mut total = [0; 3];
    for a in assignments.iter().filter(|a| a.method == method) {
        let col = RegimeLabel::ALL.iter().position(|l| *l == a.label).unwrap();
        total[col] += 1;
        if let Some(sr) = subregions.get(&a.country_code) {
            counts.get_mut(sr).unwrap()[col] += 1;
        }
    }
    RegimeDistribution {
        method,
        rows: counts.into_iter().collect(),
        total,
    }
}

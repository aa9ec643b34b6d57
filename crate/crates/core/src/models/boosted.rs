use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::forest::{check_rows, constant_of, MIN_TREE_ROWS};
use super::tree::{grow_tree, Tree, TreeParams};
use crate::error::{NeedError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoostLoss {
    SquaredError,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostedParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub min_child_weight: f64,
    /// Row fraction drawn without replacement per round.
    pub subsample: f64,
}

impl Default for BoostedParams {
    fn default() -> Self {
        BoostedParams {
            n_rounds: 200,
            max_depth: 3,
            learning_rate: 0.1,
            lambda: 1.0,
            min_child_weight: 1e-6,
            subsample: 1.0,
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Per-row loss as a function of the raw score `f`.
pub fn loss(kind: BoostLoss, y: f64, f: f64) -> f64 {
    match kind {
        BoostLoss::SquaredError => 0.5 * (f - y) * (f - y),
        // log(1 + e^f) - y f, written to avoid overflow
        BoostLoss::Logistic => f.max(0.0) + (-f.abs()).exp().ln_1p() - y * f,
    }
}

/// First and second derivatives of [`loss`] with respect to `f`.
pub fn gradient_hessian(kind: BoostLoss, y: f64, f: f64) -> (f64, f64) {
    match kind {
        BoostLoss::SquaredError => (f - y, 1.0),
        BoostLoss::Logistic => {
            let p = sigmoid(f);
            (p - y, (p * (1.0 - p)).max(1e-16))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub params: BoostedParams,
    pub loss: BoostLoss,
    pub seed: u64,
    pub base_score: f64,
    pub constant: Option<f64>,
    pub trees: Vec<Tree>,
}

impl BoostedModel {
    pub fn raw_score(&self, x: &[f64]) -> f64 {
        self.base_score + self.params.learning_rate * self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>()
    }

    /// Regression value, or class-1 probability under the logistic loss.
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        if let Some(c) = self.constant {
            return c;
        }
        match self.loss {
            BoostLoss::SquaredError => self.raw_score(x),
            BoostLoss::Logistic => sigmoid(self.raw_score(x)),
        }
    }
}

pub fn fit_boosted(
    x: &[Vec<f64>],
    y: &[f64],
    loss_kind: BoostLoss,
    params: BoostedParams,
    seed: u64,
) -> Result<BoostedModel> {
    check_rows(x, y)?;
    if x.len() < MIN_TREE_ROWS {
        return Err(NeedError::insufficient(format!(
            "boosting needs at least {MIN_TREE_ROWS} rows, got {}",
            x.len()
        )));
    }
    if !(params.learning_rate > 0.0) || params.lambda < 0.0 || !(params.subsample > 0.0 && params.subsample <= 1.0) {
        return Err(NeedError::invalid("invalid boosting parameters"));
    }
    if loss_kind == BoostLoss::Logistic && y.iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(NeedError::invalid("logistic boosting needs 0/1 labels"));
    }
    let n = x.len();
    if let Some(c) = constant_of(y) {
        return Ok(BoostedModel {
            params,
            loss: loss_kind,
            seed,
            base_score: 0.0,
            constant: Some(c),
            trees: vec![],
        });
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let base_score = match loss_kind {
        BoostLoss::SquaredError => mean,
        BoostLoss::Logistic => (mean / (1.0 - mean)).ln(),
    };
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: 1,
        lambda: params.lambda,
        min_hessian: params.min_child_weight,
        mtry: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = vec![base_score; n];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let m = ((params.subsample * n as f64).round() as usize).clamp(1, n);
    for _ in 0..params.n_rounds {
        let rows: Vec<usize> = if m < n {
            let mut r = index::sample(&mut rng, n, m).into_vec();
            r.sort_unstable();
            r
        } else {
            (0..n).collect()
        };
        let (grad, hess): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .map(|&r| gradient_hessian(loss_kind, y[r], f[r]))
            .unzip();
        let tree = grow_tree(x, &rows, &grad, &hess, tree_params, &mut rng);
        for (fi, xi) in f.iter_mut().zip(x) {
            *fi += params.learning_rate * tree.predict_row(xi);
        }
        trees.push(tree);
    }
    Ok(BoostedModel {
        params,
        loss: loss_kind,
        seed,
        base_score,
        constant: None,
        trees,
    })
}

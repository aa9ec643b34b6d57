use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow_tree, Tree, TreeParams};
use crate::error::{NeedError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Features tried per split; `None` means ceil(sqrt(p)).
    pub mtry: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_depth: 8,
            mtry: None,
            min_samples_leaf: 1,
            bootstrap: true,
        }
    }
}

pub const MIN_TREE_ROWS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub seed: u64,
    /// Set when the training target was constant.
    pub constant: Option<f64>,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        if let Some(c) = self.constant {
            return c;
        }
        self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>() / self.trees.len() as f64
    }
}

pub(crate) fn check_rows(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.is_empty() {
        return Err(NeedError::insufficient("cannot fit a model on zero rows"));
    }
    if x.len() != y.len() {
        return Err(NeedError::invalid("feature and target lengths differ"));
    }
    let p = x[0].len();
    if x.iter().any(|r| r.len() != p) {
        return Err(NeedError::invalid("ragged feature matrix"));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(NeedError::invalid("non-finite value in training data"));
    }
    Ok(p)
}

pub(crate) fn constant_of(y: &[f64]) -> Option<f64> {
    let first = y[0];
    y.iter().all(|v| *v == first).then_some(first)
}

/// Bagged CART regression forest. Targets in {0, 1} give class-1
/// probabilities.
pub fn fit_forest(x: &[Vec<f64>], y: &[f64], params: ForestParams, seed: u64) -> Result<ForestModel> {
    let p = check_rows(x, y)?;
    if x.len() < MIN_TREE_ROWS {
        return Err(NeedError::insufficient(format!(
            "forest needs at least {MIN_TREE_ROWS} rows, got {}",
            x.len()
        )));
    }
    if params.n_trees == 0 {
        return Err(NeedError::invalid("n_trees must be positive"));
    }
    if let Some(c) = constant_of(y) {
        return Ok(ForestModel {
            params,
            seed,
            constant: Some(c),
            trees: vec![],
        });
    }
    let n = x.len();
    let mtry = params.mtry.unwrap_or_else(|| (p as f64).sqrt().ceil() as usize).clamp(1, p.max(1));
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        lambda: 0.0,
        min_hessian: 0.0,
        mtry: Some(mtry),
    };
    let trees = (0..params.n_trees)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let rows: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let grad: Vec<f64> = rows.iter().map(|&r| -y[r]).collect();
            let hess = vec![1.0; rows.len()];
            grow_tree(x, &rows, &grad, &hess, tree_params, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        params,
        seed,
        constant: None,
        trees,
    })
}

//! L2-penalised logistic regression fit by damped Newton steps.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::boosted::sigmoid;
use crate::error::{NeedError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Fit on standardised columns and map the weights back.
    pub standardize: bool,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            lambda: 1.0,
            max_iter: 100,
            tol: 1e-6,
            standardize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub params: LogisticParams,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub gradient_norm: f64,
}

impl LogisticModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        sigmoid(self.intercept + self.coefficients.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
    }
}

/// Penalised negative log-likelihood over rows `x` with labels `y`.
/// `theta[0]` is the unpenalised intercept.
pub struct LogisticObjective<'a> {
    pub x: &'a [Vec<f64>],
    pub y: &'a [f64],
    pub lambda: f64,
}

impl LogisticObjective<'_> {
    fn margin(&self, theta: &[f64], row: &[f64]) -> f64 {
        theta[0] + theta[1..].iter().zip(row).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        let nll: f64 = self
            .x
            .iter()
            .zip(self.y)
            .map(|(r, &y)| {
                let z = self.margin(theta, r);
                z.max(0.0) + (-z.abs()).exp().ln_1p() - y * z
            })
            .sum();
        nll + 0.5 * self.lambda * theta[1..].iter().map(|w| w * w).sum::<f64>()
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; theta.len()];
        for (r, &y) in self.x.iter().zip(self.y) {
            let e = sigmoid(self.margin(theta, r)) - y;
            g[0] += e;
            for (gj, v) in g[1..].iter_mut().zip(r) {
                *gj += e * v;
            }
        }
        for (gj, w) in g[1..].iter_mut().zip(&theta[1..]) {
            *gj += self.lambda * w;
        }
        g
    }

    fn hessian(&self, theta: &[f64]) -> DMatrix<f64> {
        let d = theta.len();
        let mut h = DMatrix::zeros(d, d);
        let mut row = vec![1.0; d];
        for r in self.x {
            row[1..].copy_from_slice(r);
            let p = sigmoid(self.margin(theta, r));
            let w = p * (1.0 - p);
            for i in 0..d {
                for j in 0..=i {
                    h[(i, j)] += w * row[i] * row[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                h[(j, i)] = h[(i, j)];
            }
            if i > 0 {
                h[(i, i)] += self.lambda;
            }
        }
        h[(0, 0)] += 1e-12;
        h
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn fit_logistic(x: &[Vec<f64>], y: &[f64], params: LogisticParams) -> Result<LogisticModel> {
    super::forest::check_rows(x, y)?;
    if y.iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(NeedError::invalid("logistic regression needs 0/1 labels"));
    }
    let positives = y.iter().filter(|v| **v == 1.0).count();
    if positives == 0 || positives == y.len() {
        return Err(NeedError::insufficient("degenerate labels"));
    }
    if !(params.lambda >= 0.0) || !(params.tol > 0.0) {
        return Err(NeedError::invalid("invalid logistic parameters"));
    }
    let p = x[0].len();
    let n = x.len() as f64;
    let (center, scale): (Vec<f64>, Vec<f64>) = if params.standardize {
        (0..p)
            .map(|j| {
                let m = x.iter().map(|r| r[j]).sum::<f64>() / n;
                let sd = (x.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n).sqrt();
                (m, if sd > 0.0 { sd } else { 1.0 })
            })
            .unzip()
    } else {
        (vec![0.0; p], vec![1.0; p])
    };
    let xs: Vec<Vec<f64>> = x
        .iter()
        .map(|r| r.iter().zip(center.iter().zip(&scale)).map(|(v, (m, s))| (v - m) / s).collect())
        .collect();
    let obj = LogisticObjective {
        x: &xs,
        y,
        lambda: params.lambda,
    };

    let rate = positives as f64 / n;
    let mut theta = vec![0.0; p + 1];
    theta[0] = (rate / (1.0 - rate)).ln();
    let mut f = obj.value(&theta);
    let mut grad = obj.gradient(&theta);
    let mut iterations = 0;
    while norm(&grad) >= params.tol && iterations < params.max_iter {
        iterations += 1;
        let h = obj.hessian(&theta);
        let g = DVector::from_column_slice(&grad);
        let step = h
            .clone()
            .cholesky()
            .map(|c| c.solve(&g))
            .or_else(|| h.lu().solve(&g))
            .ok_or_else(|| NeedError::insufficient("singular logistic Hessian"))?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, s)| a - t * s).collect();
            let fc = obj.value(&cand);
            if fc <= f - 1e-4 * t * g.dot(&step) || (fc <= f && t < 1e-6) {
                theta = cand;
                f = fc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        grad = obj.gradient(&theta);
        if !accepted {
            break;
        }
    }
    let gradient_norm = norm(&grad);
    if gradient_norm >= params.tol {
        log::warn!("logistic fit stopped at gradient norm {gradient_norm:.3e} after {iterations} iterations");
    }
    let coefficients: Vec<f64> = theta[1..].iter().zip(&scale).map(|(w, s)| w / s).collect();
    let intercept = theta[0] - coefficients.iter().zip(&center).map(|(w, m)| w * m).sum::<f64>();
    Ok(LogisticModel {
        params,
        intercept,
        coefficients,
        iterations,
        gradient_norm,
    })
}

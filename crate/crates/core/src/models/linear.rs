//! Least squares with intercept, and a pooled VAR(1) for (ln_co2, ln_gdp).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{NeedError, Result};

pub const RIDGE_FALLBACK: f64 = 1e-8;
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// True when the design was rank deficient and the ridge path was used.
    pub ridge: bool,
}

impl LinearModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

fn check_design(x: &[Vec<f64>], y: &[f64]) -> Result<usize> {
    if x.len() != y.len() {
        return Err(NeedError::invalid("design and target lengths differ"));
    }
    let p = x.first().map(Vec::len).unwrap_or(0);
    if x.iter().any(|r| r.len() != p) {
        return Err(NeedError::invalid("ragged design matrix"));
    }
    if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(NeedError::invalid("non-finite value in regression data"));
    }
    Ok(p)
}

/// OLS with intercept. Solved by QR on the centred design; a rank-deficient
/// design falls back to ridge with λ = 1e-8 on the centred data.
pub fn fit_ols(x: &[Vec<f64>], y: &[f64]) -> Result<LinearModel> {
    let p = check_design(x, y)?;
    let n = y.len();
    if n < p + 1 || n == 0 {
        return Err(NeedError::insufficient(format!("OLS needs at least {} rows, got {n}", p + 1)));
    }
    let nf = n as f64;
    let x_mean: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
    let y_mean = y.iter().sum::<f64>() / nf;
    let xc = DMatrix::from_fn(n, p, |i, j| x[i][j] - x_mean[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let (beta, ridge) = if p == 0 {
        (DVector::zeros(0), false)
    } else {
        let scale = (0..p).map(|j| xc.column(j).norm()).fold(0.0, f64::max);
        let qr = xc.clone().qr();
        let r = qr.r();
        let full_rank = scale > 0.0 && (0..p).all(|j| r[(j, j)].abs() > RANK_TOL * scale);
        let solved = if full_rank {
            let qty = qr.q().transpose() * &yc;
            r.solve_upper_triangular(&qty)
        } else {
            None
        };
        match solved {
            Some(b) => (b, false),
            None => {
                log::warn!("rank-deficient design; using ridge fallback (lambda = {RIDGE_FALLBACK})");
                let mut gram = xc.transpose() * &xc;
                for j in 0..p {
                    gram[(j, j)] += RIDGE_FALLBACK;
                }
                let rhs = xc.transpose() * &yc;
                let b = gram
                    .cholesky()
                    .map(|c| c.solve(&rhs))
                    .ok_or_else(|| NeedError::insufficient("ridge system is not positive definite"))?;
                (b, true)
            }
        }
    };
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean - coefficients.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearModel {
        intercept,
        coefficients,
        ridge,
    })
}

/// x_{t+1} = c + A x_t with x = (ln_co2, ln_gdp).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Var1Model {
    pub intercept: [f64; 2],
    pub transition: [[f64; 2]; 2],
    pub ridge: bool,
}

impl Var1Model {
    pub fn forecast(&self, x: [f64; 2]) -> [f64; 2] {
        let a = &self.transition;
        [
            self.intercept[0] + a[0][0] * x[0] + a[0][1] * x[1],
            self.intercept[1] + a[1][0] * x[0] + a[1][1] * x[1],
        ]
    }
}

pub const VAR1_MIN_PAIRS: usize = 10;

/// Equation-wise OLS on pooled consecutive (x_t, x_{t+1}) pairs.
pub fn fit_var1(pairs: &[([f64; 2], [f64; 2])]) -> Result<Var1Model> {
    if pairs.len() < VAR1_MIN_PAIRS {
        return Err(NeedError::insufficient(format!(
            "VAR(1) needs at least {VAR1_MIN_PAIRS} transition pairs, got {}",
            pairs.len()
        )));
    }
    let x: Vec<Vec<f64>> = pairs.iter().map(|(a, _)| a.to_vec()).collect();
    let mut intercept = [0.0; 2];
    let mut transition = [[0.0; 2]; 2];
    let mut ridge = false;
    for k in 0..2 {
        let y: Vec<f64> = pairs.iter().map(|(_, b)| b[k]).collect();
        let m = fit_ols(&x, &y)?;
        intercept[k] = m.intercept;
        transition[k] = [m.coefficients[0], m.coefficients[1]];
        ridge |= m.ridge;
    }
    Ok(Var1Model {
        intercept,
        transition,
        ridge,
    })
}

//! Regression and ranking metrics.

use std::cmp::Ordering;

/// (rmse, mae, r2_oos) with R² measured against the test-set mean.
pub fn regression_metrics(y: &[f64], yhat: &[f64]) -> (f64, f64, f64) {
    assert_eq!(y.len(), yhat.len());
    let n = y.len() as f64;
    let sse: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum();
    let sae: f64 = y.iter().zip(yhat).map(|(a, b)| (a - b).abs()).sum();
    let mean = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();
    let r2 = if sst > 0.0 {
        1.0 - sse / sst
    } else if sse == 0.0 {
        1.0
    } else {
        f64::NEG_INFINITY
    };
    ((sse / n).sqrt(), sae / n, r2)
}

/// Indices sorted by descending score; ties keep index order.
fn by_score_desc(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// Cumulative (tp, fp) after each group of tied scores, in descending score
/// order. The first entry is (0, 0).
fn tied_steps(scores: &[f64], labels: &[bool]) -> Vec<(usize, usize)> {
    let order = by_score_desc(scores);
    let mut steps = vec![(0, 0)];
    let (mut tp, mut fp) = (0, 0);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]].total_cmp(&s) == Ordering::Equal {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        steps.push((tp, fp));
    }
    steps
}

/// Area under the ROC curve, trapezoidal over tied-score groups. NaN when
/// only one class is present.
pub fn auroc(scores: &[f64], labels: &[bool]) -> f64 {
    assert_eq!(scores.len(), labels.len());
    let p = labels.iter().filter(|l| **l).count();
    let n = labels.len() - p;
    if p == 0 || n == 0 {
        return f64::NAN;
    }
    let steps = tied_steps(scores, labels);
    let mut area = 0.0;
    for w in steps.windows(2) {
        let (tp0, fp0) = w[0];
        let (tp1, fp1) = w[1];
        area += (fp1 - fp0) as f64 * (tp0 + tp1) as f64 / 2.0;
    }
    area / (p as f64 * n as f64)
}

/// Average precision: Σ ΔRecall · Precision over tied-score groups. NaN when
/// there are no positives.
pub fn auprc(scores: &[f64], labels: &[bool]) -> f64 {
    assert_eq!(scores.len(), labels.len());
    let p = labels.iter().filter(|l| **l).count();
    if p == 0 {
        return f64::NAN;
    }
    let steps = tied_steps(scores, labels);
    let mut ap = 0.0;
    for w in steps.windows(2) {
        let (tp0, _) = w[0];
        let (tp1, fp1) = w[1];
        if tp1 > tp0 {
            ap += (tp1 - tp0) as f64 / p as f64 * tp1 as f64 / (tp1 + fp1) as f64;
        }
    }
    ap
}

/// Points of the precision-recall curve, one per tied-score group.
pub fn pr_curve(scores: &[f64], labels: &[bool]) -> Vec<(f64, f64)> {
    let p = labels.iter().filter(|l| **l).count();
    if p == 0 {
        return vec![];
    }
    tied_steps(scores, labels)
        .into_iter()
        .skip(1)
        .map(|(tp, fp)| (tp as f64 / p as f64, tp as f64 / (tp + fp) as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn at(scores: &[f64], labels: &[bool], threshold: f64) -> Self {
        let mut c = Confusion {
            tp: 0,
            fp: 0,
            fn_: 0,
            tn: 0,
        };
        for (&s, &l) in scores.iter().zip(labels) {
            match (s >= threshold, l) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn precision(&self) -> f64 {
        if self.tp + self.fp == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fp) as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.tp + self.fn_ == 0 {
            0.0
        } else {
            self.tp as f64 / (self.tp + self.fn_) as f64
        }
    }

    pub fn f_beta(&self, beta: f64) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p == 0.0 || r == 0.0 {
            return 0.0;
        }
        let b2 = beta * beta;
        (1.0 + b2) * p * r / (b2 * p + r)
    }

    pub fn f1(&self) -> f64 {
        self.f_beta(1.0)
    }
}

/// Threshold (alarm iff score >= threshold) maximising F-beta over the
/// distinct scores; ties go to the highest threshold. Without positives no
/// threshold alarms, so +inf is returned.
pub fn best_threshold(scores: &[f64], labels: &[bool], beta: f64) -> f64 {
    if !labels.iter().any(|l| *l) {
        return f64::INFINITY;
    }
    let order = by_score_desc(scores);
    let p = labels.iter().filter(|l| **l).count();
    let b2 = beta * beta;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]].total_cmp(&s) == Ordering::Equal {
            if labels[order[k]] {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        let prec = tp as f64 / (tp + fp) as f64;
        let rec = tp as f64 / p as f64;
        let f = if tp == 0 {
            0.0
        } else {
            (1.0 + b2) * prec * rec / (b2 * prec + rec)
        };
        if f > best.0 {
            best = (f, s);
        }
    }
    best.1
}

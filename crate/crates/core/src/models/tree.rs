//! Exact greedy CART on gradient/hessian statistics.
//!
//! With g = -y, h = 1 and λ = 0 the split gain is the usual reduction in
//! squared error and leaves hold the node mean, which is what the forest
//! uses. Boosting feeds the loss gradients directly.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes stored in pre-order; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub lambda: f64,
    pub min_hessian: f64,
    /// Features considered per split; `None` means all.
    pub mtry: Option<usize>,
}

struct Builder<'a, R: Rng> {
    x: &'a [Vec<f64>],
    rows: &'a [usize],
    grad: &'a [f64],
    hess: &'a [f64],
    params: TreeParams,
    n_features: usize,
    // sorted[f] holds sample ids ordered by feature f; each node owns the same
    // [lo, hi) range in every list.
    sorted: Vec<Vec<usize>>,
    go_left: Vec<bool>,
    scratch: Vec<usize>,
    nodes: Vec<Node>,
    rng: &'a mut R,
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
    n_left: usize,
}

impl<R: Rng> Builder<'_, R> {
    fn value(&self, i: usize, f: usize) -> f64 {
        self.x[self.rows[i]][f]
    }

    fn leaf_value(&self, g: f64, h: f64) -> f64 {
        let v = -g / (h + self.params.lambda);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        match self.params.mtry {
            Some(m) if m < self.n_features => {
                let mut f = index::sample(self.rng, self.n_features, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..self.n_features).collect(),
        }
    }

    fn build(&mut self, lo: usize, hi: usize, depth: usize) -> usize {
        let ids = &self.sorted[0][lo..hi];
        let g: f64 = ids.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = ids.iter().map(|&i| self.hess[i]).sum();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: self.leaf_value(g, h),
        });
        let n = hi - lo;
        if depth >= self.params.max_depth || n < 2 * self.params.min_samples_leaf.max(1) {
            return id;
        }
        let Some(best) = self.best_split(lo, hi, g, h) else {
            return id;
        };

        let feature = best.feature;
        for k in lo..hi {
            let s = self.sorted[feature][k];
            self.go_left[s] = k < lo + best.n_left;
        }
        for f in 0..self.n_features {
            self.scratch.clear();
            let list = &mut self.sorted[f];
            let mut w = lo;
            for k in lo..hi {
                let s = list[k];
                if self.go_left[s] {
                    list[w] = s;
                    w += 1;
                } else {
                    self.scratch.push(s);
                }
            }
            list[w..hi].copy_from_slice(&self.scratch);
        }
        let mid = lo + best.n_left;
        let left = self.build(lo, mid, depth + 1);
        let right = self.build(mid, hi, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&mut self, lo: usize, hi: usize, g: f64, h: f64) -> Option<Best> {
        let lambda = self.params.lambda;
        let min_leaf = self.params.min_samples_leaf.max(1);
        let parent = g * g / (h + lambda);
        let mut best: Option<Best> = None;
        for f in self.candidate_features() {
            let list = &self.sorted[f][lo..hi];
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..list.len() - 1 {
                let s = list[k];
                gl += self.grad[s];
                hl += self.hess[s];
                let n_left = k + 1;
                if n_left < min_leaf || list.len() - n_left < min_leaf {
                    continue;
                }
                let (a, b) = (self.value(s, f), self.value(list[k + 1], f));
                if a >= b {
                    continue;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl < self.params.min_hessian || hr < self.params.min_hessian {
                    continue;
                }
                let gain = gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent;
                if gain > 1e-12 * (1.0 + parent.abs()) && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = a + (b - a) / 2.0;
                    if threshold >= b {
                        threshold = a;
                    }
                    best = Some(Best {
                        gain,
                        feature: f,
                        threshold,
                        n_left,
                    });
                }
            }
        }
        best
    }
}

/// Grows one tree on the sample `rows` (repeats allowed) of `x`.
/// `grad` and `hess` are indexed by sample position, not by row.
pub fn grow_tree<R: Rng>(
    x: &[Vec<f64>],
    rows: &[usize],
    grad: &[f64],
    hess: &[f64],
    params: TreeParams,
    rng: &mut R,
) -> Tree {
    assert_eq!(rows.len(), grad.len());
    assert_eq!(rows.len(), hess.len());
    if rows.is_empty() {
        return Tree {
            nodes: vec![Node::Leaf { value: 0.0 }],
        };
    }
    let n_features = x[rows[0]].len();
    let sorted = (0..n_features.max(1))
        .map(|f| {
            let mut ids: Vec<usize> = (0..rows.len()).collect();
            if f < n_features {
                ids.sort_by(|&a, &b| x[rows[a]][f].total_cmp(&x[rows[b]][f]).then(a.cmp(&b)));
            }
            ids
        })
        .collect();
    let mut b = Builder {
        x,
        rows,
        grad,
        hess,
        params,
        n_features,
        sorted,
        go_left: vec![false; rows.len()],
        scratch: Vec::with_capacity(rows.len()),
        nodes: Vec::new(),
        rng,
    };
    if n_features == 0 {
        b.params.max_depth = 0;
    }
    b.build(0, rows.len(), 0);
    Tree { nodes: b.nodes }
}

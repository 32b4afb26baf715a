//! L2-regularized logistic regression on sparse tf–idf rows.
//!
//! Minimizes `mean loss + ‖W‖² / (2·C·N)` (bias unregularized): one-vs-rest
//! binary losses for multi-label data, multinomial cross-entropy for
//! single-label data. Solved with Nesterov-accelerated gradient descent,
//! backtracking line search and gradient-based adaptive restart.

use serde::{Deserialize, Serialize};

use crate::corpus::{LabelTarget, SparseMatrix, SparseRow};
use crate::error::{Error, Result};
use crate::tensor::functional::{log_sigmoid, log_sum_exp, sigmoid, softmax};
use crate::TaskKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    /// Inverse regularization strength.
    pub c: f64,
    pub max_iter: usize,
    /// Stop when the gradient's infinity norm falls below this.
    pub tol: f64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            c: 1.0,
            max_iter: 1000,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticRegression {
    kind: TaskKind,
    k: usize,
    dim: usize,
    /// Row-major K×dim.
    weights: Vec<f64>,
    bias: Vec<f64>,
    iterations: usize,
}

struct Problem<'a> {
    x: &'a [SparseRow],
    y: Vec<Vec<f64>>,
    kind: TaskKind,
    k: usize,
    dim: usize,
    reg: f64,
}

impl Problem<'_> {
    fn scores(&self, theta: &[f64], row: &SparseRow) -> Vec<f64> {
        let bias = &theta[self.k * self.dim..];
        (0..self.k)
            .map(|c| row.dot(&theta[c * self.dim..(c + 1) * self.dim]) + bias[c])
            .collect()
    }

    /// Objective value and, if requested, its gradient.
    fn eval(&self, theta: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let n = self.x.len() as f64;
        let mut g = grad;
        if let Some(g) = g.as_deref_mut() {
            g.fill(0.0);
        }
        let mut loss = 0.0;
        for (row, y) in self.x.iter().zip(&self.y) {
            let z = self.scores(theta, row);
            let resid: Vec<f64> = match self.kind {
                TaskKind::MultiLabel => {
                    for (zk, yk) in z.iter().zip(y) {
                        loss -= yk * log_sigmoid(*zk) + (1.0 - yk) * log_sigmoid(-zk);
                    }
                    z.iter().zip(y).map(|(zk, yk)| sigmoid(*zk) - yk).collect()
                }
                TaskKind::SingleLabel => {
                    let lse = log_sum_exp(&z).unwrap_or(0.0);
                    loss += z.iter().zip(y).map(|(zk, yk)| yk * (lse - zk)).sum::<f64>();
                    let p = softmax(&z).unwrap_or_default();
                    p.iter().zip(y).map(|(pk, yk)| pk - yk).collect()
                }
            };
            if let Some(g) = g.as_deref_mut() {
                for (c, r) in resid.iter().enumerate() {
                    let gw = &mut g[c * self.dim..(c + 1) * self.dim];
                    for (&j, v) in row.indices.iter().zip(&row.values) {
                        gw[j] += r * v / n;
                    }
                    g[self.k * self.dim + c] += r / n;
                }
            }
        }
        let w = &theta[..self.k * self.dim];
        let sq: f64 = w.iter().map(|v| v * v).sum();
        if let Some(g) = g {
            for (gi, wi) in g.iter_mut().zip(w) {
                *gi += self.reg * wi;
            }
        }
        loss / n + 0.5 * self.reg * sq
    }
}

impl LogisticRegression {
    pub fn fit(x: &SparseMatrix, y: &[LabelTarget], k: usize, kind: TaskKind, config: &LogRegConfig) -> Result<Self> {
        if x.rows.len() != y.len() {
            return Err(Error::dim(format!("{} feature rows but {} targets", x.rows.len(), y.len())));
        }
        if x.rows.is_empty() {
            return Err(Error::EmptySequence("logistic regression needs at least one example".into()));
        }
        if !(config.c > 0.0 && config.c.is_finite()) || config.tol <= 0.0 {
            return Err(Error::config("logistic regression needs C > 0 and tol > 0"));
        }
        check_rows(&x.rows, x.cols)?;
        let targets = y
            .iter()
            .map(|t| dense_target(t, k, kind))
            .collect::<Result<Vec<_>>>()?;
        let n = x.rows.len() as f64;
        let prob = Problem {
            x: &x.rows,
            y: targets,
            kind,
            k,
            dim: x.cols,
            reg: 1.0 / (config.c * n),
        };

        let size = k * x.cols + k;
        let mut theta = vec![0.0; size];
        let mut prev = theta.clone();
        let mut momentum = 1.0f64;
        let mut step = 1.0;
        let mut grad = vec![0.0; size];
        let mut iterations = 0;
        for it in 0..config.max_iter {
            iterations = it + 1;
            let t_next = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
            let beta = (momentum - 1.0) / t_next;
            let look: Vec<f64> = theta.iter().zip(&prev).map(|(a, b)| a + beta * (a - b)).collect();
            let f_look = prob.eval(&look, Some(&mut grad));
            if grad.iter().fold(0.0f64, |m, g| m.max(g.abs())) < config.tol {
                theta = look;
                break;
            }
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            // Backtrack until the sufficient-decrease condition holds.
            let next = loop {
                let cand: Vec<f64> = look.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
                let f_cand = prob.eval(&cand, None);
                if f_cand <= f_look - 0.5 * step * g2 || step < 1e-12 {
                    break cand;
                }
                step *= 0.5;
            };
            // Restart momentum when the step opposes the lookahead direction.
            let restart: f64 = grad
                .iter()
                .zip(next.iter().zip(&theta))
                .map(|(g, (a, b))| g * (a - b))
                .sum();
            prev = std::mem::replace(&mut theta, next);
            momentum = if restart > 0.0 { 1.0 } else { t_next };
            step *= 1.5;
        }

        Ok(LogisticRegression {
            kind,
            k,
            dim: x.cols,
            bias: theta[k * x.cols..].to_vec(),
            weights: theta[..k * x.cols].to_vec(),
            iterations,
        })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn decision_function(&self, row: &SparseRow) -> Vec<f64> {
        (0..self.k)
            .map(|c| row.dot(&self.weights[c * self.dim..(c + 1) * self.dim]) + self.bias[c])
            .collect()
    }

    pub fn predict_proba(&self, x: &SparseMatrix) -> Result<Vec<Vec<f64>>> {
        if x.cols != self.dim {
            return Err(Error::dim(format!("model has {} features, input has {}", self.dim, x.cols)));
        }
        check_rows(&x.rows, x.cols)?;
        Ok(x.rows
            .iter()
            .map(|r| super::probabilities(&self.decision_function(r), self.kind))
            .collect())
    }
}

fn check_rows(rows: &[SparseRow], cols: usize) -> Result<()> {
    for (i, r) in rows.iter().enumerate() {
        if r.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data {
                path: "<features>".into(),
                line: i + 1,
                message: "non-finite feature value".into(),
            });
        }
        if r.indices.iter().any(|&j| j >= cols) {
            return Err(Error::dim(format!("feature index outside {cols} columns in row {i}")));
        }
    }
    Ok(())
}

fn dense_target(t: &LabelTarget, k: usize, kind: TaskKind) -> Result<Vec<f64>> {
    match (t, kind) {
        (LabelTarget::MultiHot(v), TaskKind::MultiLabel) if v.len() == k => Ok(v.clone()),
        (LabelTarget::Class(c), TaskKind::SingleLabel) if *c < k => {
            let mut v = vec![0.0; k];
            v[*c] = 1.0;
            Ok(v)
        }
        _ => Err(Error::Label(format!("target {t:?} does not fit a {kind} problem with K={k}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::gradcheck::check;

    fn row(pairs: &[(usize, f64)]) -> SparseRow {
        SparseRow {
            indices: pairs.iter().map(|p| p.0).collect(),
            values: pairs.iter().map(|p| p.1).collect(),
        }
    }

    #[test]
    fn separable_toy_is_fit_perfectly() {
        let x = SparseMatrix {
            rows: vec![row(&[(0, 1.0)]), row(&[(0, 0.9), (2, 0.1)]), row(&[(1, 1.0)]), row(&[(1, 0.8), (2, 0.2)])],
            cols: 3,
        };
        let y = [0, 0, 1, 1].map(LabelTarget::Class);
        let cfg = LogRegConfig { c: 100.0, ..Default::default() };
        let m = LogisticRegression::fit(&x, &y, 2, TaskKind::SingleLabel, &cfg).unwrap();
        for (p, t) in m.predict_proba(&x).unwrap().iter().zip([0, 0, 1, 1]) {
            assert_eq!(crate::tensor::functional::argmax(p), t);
        }
    }

    #[test]
    fn identical_features_give_priors() {
        let x = SparseMatrix {
            rows: vec![row(&[(0, 1.0)]); 8],
            cols: 1,
        };
        let mut y = vec![LabelTarget::MultiHot(vec![1.0, 0.0]); 6];
        y.extend(vec![LabelTarget::MultiHot(vec![1.0, 1.0]); 2]);
        // Large C makes the penalty negligible so the fit reproduces label frequencies.
        let cfg = LogRegConfig { c: 1e6, max_iter: 5000, tol: 1e-9 };
        let m = LogisticRegression::fit(&x, &y, 2, TaskKind::MultiLabel, &cfg).unwrap();
        let p = &m.predict_proba(&x).unwrap()[0];
        assert!((p[0] - 1.0).abs() < 1e-3 || p[0] > 0.99);
        assert!((p[1] - 0.25).abs() < 1e-3, "{p:?}");
    }

    #[test]
    fn non_finite_features_are_a_data_error() {
        let x = SparseMatrix {
            rows: vec![row(&[(0, f64::NAN)]), row(&[(0, 1.0)])],
            cols: 1,
        };
        let y = [0, 1].map(LabelTarget::Class);
        let r = LogisticRegression::fit(&x, &y, 2, TaskKind::SingleLabel, &LogRegConfig::default());
        assert!(matches!(r, Err(Error::Data { line: 1, .. })));
    }

    #[test]
    fn objective_gradient_matches_finite_differences() {
        let rows = vec![row(&[(0, 0.6), (1, 0.8)]), row(&[(1, 1.0)]), row(&[(0, 0.3), (2, 0.9)])];
        for kind in [TaskKind::SingleLabel, TaskKind::MultiLabel] {
            let y = match kind {
                TaskKind::SingleLabel => vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]],
                TaskKind::MultiLabel => vec![vec![1.0, 1.0], vec![0.0, 1.0], vec![0.0, 0.0]],
            };
            let prob = Problem { x: &rows, y, kind, k: 2, dim: 3, reg: 0.3 };
            let theta: Vec<f64> = (0..8).map(|i| 0.1 * i as f64 - 0.35).collect();
            let r = check(
                |t: &[f64]| {
                    let mut g = vec![0.0; t.len()];
                    let f = prob.eval(t, Some(&mut g));
                    (f, g)
                },
                &theta,
            );
            assert!(r.passed(), "{kind}: {r:?}");
        }
    }
}

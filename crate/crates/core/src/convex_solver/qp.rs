//! Convex QP with a diagonal quadratic term via conditional gradient.
//!
//! The outer loop calls [`solve_lp`] as the linear minimization oracle and
//! keeps the vertices it returns. Between oracle calls the iterate is
//! re-optimized over the convex hull of those vertices with away-step
//! Frank-Wolfe, which is cheap because the hull is small and explicit.

use super::lp::{solve_lp, LinearProgram, LpOutcome};
use crate::error::{Error, Result};

/// Target bound on `f(x) − f*`.
pub const QP_TOL: f64 = 1e-7;
/// Cap on outer (LP-calling) iterations.
pub const QP_MAX_ITERS: usize = 100_000;
const INNER_MAX_ITERS: usize = 20_000;
const DROP_TOL: f64 = 1e-14;

/// `min Σ_j quad_j x_j² + linear·x + constant` over the constraints of `lp`
/// (whose objective is ignored).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticProgram {
    pub quad: Vec<f64>,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub constraints: LinearProgram,
}

impl QuadraticProgram {
    /// `min Σ_{j ∈ coords} (x_j − target_j)²`.
    pub fn projection(constraints: LinearProgram, coords: &[usize], target: &[f64]) -> Self {
        let n = constraints.num_vars();
        let mut quad = vec![0.0; n];
        let mut linear = vec![0.0; n];
        let mut constant = 0.0;
        for (&j, &y) in coords.iter().zip(target) {
            quad[j] = 1.0;
            linear[j] = -2.0 * y;
            constant += y * y;
        }
        QuadraticProgram { quad, linear, constant, constraints }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.constant;
        for j in 0..x.len() {
            v += self.quad[j] * x[j] * x[j] + self.linear[j] * x[j];
        }
        v
    }

    fn check(&self) -> Result<()> {
        self.constraints.check()?;
        let n = self.constraints.num_vars();
        if self.quad.len() != n || self.linear.len() != n {
            return Err(Error::InvalidInput("QP objective dimension mismatch".into()));
        }
        if self.quad.iter().any(|&q| !(q >= 0.0) || !q.is_finite()) {
            return Err(Error::InvalidInput("QP quadratic term must be finite and ≥ 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// Certified bound on `value − optimum`.
    pub gap: f64,
    /// False when the iteration cap was hit before the gap closed.
    pub converged: bool,
    pub iterations: usize,
    /// Certified gap after each outer iteration.
    pub gap_history: Vec<f64>,
}

/// Solves a QP to within [`QP_TOL`] of optimal.
pub fn solve_qp(qp: &QuadraticProgram) -> Result<QpSolution> {
    solve_qp_with(qp, QP_TOL, QP_MAX_ITERS)
}

pub fn solve_qp_with(qp: &QuadraticProgram, tol: f64, max_iters: usize) -> Result<QpSolution> {
    qp.check()?;
    let n = qp.constraints.num_vars();
    // coordinates the objective depends on
    let active: Vec<usize> = (0..n).filter(|&j| qp.quad[j] != 0.0 || qp.linear[j] != 0.0).collect();

    let gradient = |x: &[f64]| -> Vec<f64> { (0..n).map(|j| 2.0 * qp.quad[j] * x[j] + qp.linear[j]).collect() };
    let lmo = |grad: &[f64]| -> Result<Vec<f64>> {
        let mut lp = qp.constraints.clone();
        lp.objective = grad.iter().map(|g| -g).collect();
        match solve_lp(&lp)? {
            LpOutcome::Optimal(s) => Ok(s.x),
            LpOutcome::Infeasible => Err(Error::InvalidInput("QP feasible region is empty".into())),
            LpOutcome::Unbounded => Err(Error::InvalidInput("QP feasible region is unbounded".into())),
        }
    };

    let first = lmo(&qp.linear)?;
    let mut hull = Hull { vertices: vec![first], weights: vec![1.0] };
    let mut x = hull.point(n);
    let mut best_upper = qp.value(&x);
    let mut best_lower = f64::NEG_INFINITY;
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let g = gradient(&x);
        let s = lmo(&g)?;
        let fw_gap: f64 = active.iter().map(|&j| g[j] * (x[j] - s[j])).sum();
        best_upper = best_upper.min(qp.value(&x));
        best_lower = best_lower.max(qp.value(&x) - fw_gap.max(0.0));
        let gap = (best_upper - best_lower).max(0.0);
        history.push(gap);
        iterations += 1;
        if gap <= tol || iterations >= max_iters {
            return Ok(QpSolution {
                value: qp.value(&x),
                x,
                gap,
                converged: gap <= tol,
                iterations,
                gap_history: history,
            });
        }
        if !hull.vertices.iter().any(|v| same_on(v, &s, &active)) {
            hull.vertices.push(s);
            hull.weights.push(0.0);
        }
        hull.optimize(qp, &active, tol * 1e-3);
        x = hull.point(n);
    }
}

fn same_on(a: &[f64], b: &[f64], coords: &[usize]) -> bool {
    coords.iter().all(|&j| (a[j] - b[j]).abs() <= 1e-12)
}

struct Hull {
    vertices: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl Hull {
    fn point(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (v, &w) in self.vertices.iter().zip(&self.weights) {
            if w != 0.0 {
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += w * vi;
                }
            }
        }
        x
    }

    /// Away-step Frank-Wolfe over the simplex of vertex weights, with exact
    /// line search, working only on the objective's coordinates.
    fn optimize(&mut self, qp: &QuadraticProgram, active: &[usize], tol: f64) {
        let proj = |v: &Vec<f64>| active.iter().map(|&j| v[j]).collect::<Vec<f64>>();
        let verts: Vec<Vec<f64>> = self.vertices.iter().map(proj).collect();
        let q: Vec<f64> = active.iter().map(|&j| qp.quad[j]).collect();
        let lin: Vec<f64> = active.iter().map(|&j| qp.linear[j]).collect();
        let a = active.len();
        let mut x = vec![0.0; a];
        for (v, &w) in verts.iter().zip(&self.weights) {
            for i in 0..a {
                x[i] += w * v[i];
            }
        }
        for _ in 0..INNER_MAX_ITERS {
            let g: Vec<f64> = (0..a).map(|i| 2.0 * q[i] * x[i] + lin[i]).collect();
            let score: Vec<f64> = verts.iter().map(|v| v.iter().zip(&g).map(|(v, g)| v * g).sum()).collect();
            let gx: f64 = x.iter().zip(&g).map(|(x, g)| x * g).sum();
            let fw = (0..verts.len()).min_by(|&i, &j| score[i].total_cmp(&score[j])).unwrap();
            let away = (0..verts.len())
                .filter(|&i| self.weights[i] > 0.0)
                .max_by(|&i, &j| score[i].total_cmp(&score[j]))
                .unwrap();
            let fw_gap = gx - score[fw];
            if fw_gap <= tol {
                break;
            }
            let away_gap = score[away] - gx;
            let (dir, max_step, toward) = if fw_gap >= away_gap {
                let d: Vec<f64> = (0..a).map(|i| verts[fw][i] - x[i]).collect();
                (d, 1.0, true)
            } else {
                let wa = self.weights[away];
                let d: Vec<f64> = (0..a).map(|i| x[i] - verts[away][i]).collect();
                (d, wa / (1.0 - wa), false)
            };
            let slope: f64 = dir.iter().zip(&g).map(|(d, g)| d * g).sum();
            let curv: f64 = dir.iter().zip(&q).map(|(d, q)| q * d * d).sum();
            let step = if curv > 0.0 { (-slope / (2.0 * curv)).clamp(0.0, max_step) } else { max_step };
            if step <= 0.0 {
                break;
            }
            if toward {
                for w in self.weights.iter_mut() {
                    *w *= 1.0 - step;
                }
                self.weights[fw] += step;
            } else {
                for w in self.weights.iter_mut() {
                    *w *= 1.0 + step;
                }
                self.weights[away] -= step;
                if step >= max_step {
                    self.weights[away] = 0.0;
                }
            }
            for i in 0..a {
                x[i] += step * dir[i];
            }
            for w in self.weights.iter_mut() {
                if *w < DROP_TOL {
                    *w = 0.0;
                }
            }
        }
        let total: f64 = self.weights.iter().sum();
        self.weights.iter_mut().for_each(|w| *w /= total);
        // forget vertices that carry no weight
        let keep: Vec<bool> = self.weights.iter().map(|&w| w > 0.0).collect();
        let mut i = 0;
        self.vertices.retain(|_| {
            i += 1;
            keep[i - 1]
        });
        self.weights.retain(|&w| w > 0.0);
    }
}

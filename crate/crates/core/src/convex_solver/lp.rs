//! Dense two-phase tableau simplex.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-10;
/// Consecutive degenerate pivots before switching to Bland's rule.
const DEGENERATE_STREAK: usize = 50;
/// Post-solve feasibility check.
const FEASIBILITY_CHECK: f64 = 1e-6;

/// `max c·x` subject to `le` rows (`a·x ≤ b`), `eq` rows (`a·x = b`) and
/// per-variable bounds (either side may be infinite).
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub le: Vec<(Vec<f64>, f64)>,
    pub eq: Vec<(Vec<f64>, f64)>,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
    /// One multiplier per `le` row, all ≥ 0.
    pub le_duals: Vec<f64>,
    /// One multiplier per `eq` row.
    pub eq_duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(self) -> Option<LpSolution> {
        match self {
            LpOutcome::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

impl LinearProgram {
    /// `n` variables in `[0, ∞)` with a zero objective.
    pub fn new(n: usize) -> Self {
        LinearProgram { objective: vec![0.0; n], le: Vec::new(), eq: Vec::new(), bounds: vec![(0.0, f64::INFINITY); n] }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_le(&mut self, a: Vec<f64>, b: f64) {
        self.le.push((a, b));
    }

    pub fn add_ge(&mut self, a: Vec<f64>, b: f64) {
        self.le.push((a.into_iter().map(|v| -v).collect(), -b));
    }

    pub fn add_eq(&mut self, a: Vec<f64>, b: f64) {
        self.eq.push((a, b));
    }

    pub fn check(&self) -> Result<()> {
        let n = self.num_vars();
        if self.bounds.len() != n {
            return Err(Error::InvalidInput(format!("{} bounds for {n} variables", self.bounds.len())));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite objective coefficient".into()));
        }
        for (a, b) in self.le.iter().chain(&self.eq) {
            if a.len() != n {
                return Err(Error::InvalidInput(format!("row of length {} for {n} variables", a.len())));
            }
            if !b.is_finite() || a.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite constraint coefficient".into()));
            }
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::InvalidInput(format!("bad bounds on variable {j}: [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |a: &[f64]| a.iter().zip(x).map(|(a, x)| a * x).sum::<f64>();
        let mut worst = 0.0f64;
        for (a, b) in &self.le {
            worst = worst.max(dot(a) - b);
        }
        for (a, b) in &self.eq {
            worst = worst.max((dot(a) - b).abs());
        }
        for (&xj, &(lo, hi)) in x.iter().zip(&self.bounds) {
            worst = worst.max(lo - xj).max(xj - hi);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }
}

#[derive(Clone, Copy)]
enum VarMap {
    /// `x = lo + x'`.
    Shift { col: usize, lo: f64 },
    /// `x = hi − x'`.
    Negate { col: usize, hi: f64 },
    /// `x = x⁺ − x⁻`.
    Split { pos: usize, neg: usize },
}

#[derive(Clone, Copy, PartialEq)]
enum Origin {
    Le(usize),
    Eq(usize),
    Bound,
}

struct Tableau {
    /// `rows × (cols + 1)`, last column is the right-hand side.
    t: Vec<f64>,
    /// Reduced costs `z_j − c_j`, last entry is the objective value.
    obj: Vec<f64>,
    rows: usize,
    cols: usize,
    basis: Vec<usize>,
    iterations: usize,
    limit: usize,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * (self.cols + 1) + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.cols)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let eliminate = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for (x, &pr) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * pr;
                }
                row[c] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(eliminate);
        after.chunks_mut(w).for_each(eliminate);
        eliminate(&mut self.obj);
        self.basis[r] = c;
    }

    /// Primal simplex on the current objective row. `allowed` filters
    /// entering columns. Returns false if unbounded.
    fn optimize(&mut self, allowed: impl Fn(usize) -> bool) -> Result<bool> {
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            let entering = if bland {
                (0..self.cols).find(|&j| allowed(j) && self.obj[j] < -OPT_TOL)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in (0..self.cols).filter(|&j| allowed(j)) {
                    let v = self.obj[j];
                    if v < -OPT_TOL && best.is_none_or(|(_, b)| v < b) {
                        best = Some((j, v));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(c) = entering else { return Ok(true) };

            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-12 || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else { return Ok(false) };
            self.pivot(r, c);
            self.iterations += 1;
            if self.iterations > self.limit {
                return Err(Error::NumericalFailure(format!("simplex exceeded {} pivots", self.limit)));
            }
            if ratio <= 1e-12 {
                degenerate += 1;
                if degenerate > DEGENERATE_STREAK {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
        }
    }
}

/// Solves `lp` to optimality, or reports infeasibility or unboundedness.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome> {
    lp.check()?;
    let n = lp.num_vars();

    // variable transforms
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for &(lo, hi) in &lp.bounds {
        let m = if lo.is_finite() {
            if hi.is_finite() {
                bound_rows.push((ncols, hi - lo));
            }
            VarMap::Shift { col: ncols, lo }
        } else if hi.is_finite() {
            VarMap::Negate { col: ncols, hi }
        } else {
            ncols += 1;
            VarMap::Split { pos: ncols - 1, neg: ncols }
        };
        ncols += 1;
        maps.push(m);
    }
    let n_struct = ncols;

    let transform_row = |a: &[f64], b: f64| -> (Vec<f64>, f64) {
        let mut row = vec![0.0; n_struct];
        let mut rhs = b;
        for (j, &aj) in a.iter().enumerate() {
            if aj == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shift { col, lo } => {
                    row[col] += aj;
                    rhs -= aj * lo;
                }
                VarMap::Negate { col, hi } => {
                    row[col] -= aj;
                    rhs -= aj * hi;
                }
                VarMap::Split { pos, neg } => {
                    row[pos] += aj;
                    row[neg] -= aj;
                }
            }
        }
        (row, rhs)
    };

    let mut rows: Vec<(Vec<f64>, f64, bool, Origin)> = Vec::new();
    for (i, (a, b)) in lp.le.iter().enumerate() {
        let (r, rhs) = transform_row(a, *b);
        rows.push((r, rhs, true, Origin::Le(i)));
    }
    for (i, (a, b)) in lp.eq.iter().enumerate() {
        let (r, rhs) = transform_row(a, *b);
        rows.push((r, rhs, false, Origin::Eq(i)));
    }
    for &(col, width) in &bound_rows {
        let mut r = vec![0.0; n_struct];
        r[col] = 1.0;
        rows.push((r, width, true, Origin::Bound));
    }

    let mut cost = vec![0.0; n_struct];
    let mut offset = 0.0;
    for (j, &c) in lp.objective.iter().enumerate() {
        match maps[j] {
            VarMap::Shift { col, lo } => {
                cost[col] += c;
                offset += c * lo;
            }
            VarMap::Negate { col, hi } => {
                cost[col] -= c;
                offset += c * hi;
            }
            VarMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.2).count();
    let sign: Vec<f64> = rows.iter().map(|r| if r.1 < 0.0 { -1.0 } else { 1.0 }).collect();
    let needs_art: Vec<bool> = rows.iter().zip(&sign).map(|(r, &s)| !r.2 || s < 0.0).collect();
    let n_art = needs_art.iter().filter(|&&a| a).count();
    let cols = n_struct + n_slack + n_art;
    let art_start = n_struct + n_slack;
    let w = cols + 1;

    let mut t = vec![0.0; m * w];
    let mut basis = vec![0; m];
    let mut id_col = vec![0; m];
    let (mut next_slack, mut next_art) = (n_struct, art_start);
    for (i, (row, rhs, is_le, _)) in rows.iter().enumerate() {
        let s = sign[i];
        for (j, &v) in row.iter().enumerate() {
            t[i * w + j] = s * v;
        }
        t[i * w + cols] = s * rhs;
        if *is_le {
            t[i * w + next_slack] = s;
            if !needs_art[i] {
                id_col[i] = next_slack;
            }
            next_slack += 1;
        }
        if needs_art[i] {
            t[i * w + next_art] = 1.0;
            id_col[i] = next_art;
            next_art += 1;
        }
        basis[i] = id_col[i];
    }

    let limit = 50_000 + 20 * (m + cols);
    let mut tab = Tableau { t, obj: vec![0.0; w], rows: m, cols, basis, iterations: 0, limit };

    // phase 1: maximize −Σ artificials
    if n_art > 0 {
        for i in 0..m {
            if needs_art[i] {
                for j in 0..w {
                    tab.obj[j] -= tab.at(i, j);
                }
            }
        }
        for j in art_start..cols {
            tab.obj[j] = 0.0;
        }
        tab.optimize(|_| true)?;
        let scale = 1.0 + rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max);
        if -tab.obj[cols] > 1e-8 * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // drive zero-level artificials out of the basis where possible
        for i in 0..m {
            if tab.basis[i] >= art_start {
                if let Some(j) = (0..art_start).find(|&j| tab.at(i, j).abs() > PIVOT_TOL) {
                    tab.pivot(i, j);
                }
            }
        }
    }

    // phase 2
    let full_cost = |j: usize| if j < n_struct { cost[j] } else { 0.0 };
    tab.obj = vec![0.0; w];
    for j in 0..w {
        let mut z = 0.0;
        for i in 0..m {
            let cb = full_cost(tab.basis[i]);
            if cb != 0.0 {
                z += cb * tab.at(i, j);
            }
        }
        tab.obj[j] = if j < cols { z - full_cost(j) } else { z };
    }
    for i in 0..m {
        tab.obj[tab.basis[i]] = 0.0;
    }
    if !tab.optimize(|j| j < art_start)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut xs = vec![0.0; cols];
    for i in 0..m {
        xs[tab.basis[i]] = tab.rhs(i).max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shift { col, lo } => lo + xs[col],
            VarMap::Negate { col, hi } => hi - xs[col],
            VarMap::Split { pos, neg } => xs[pos] - xs[neg],
        })
        .collect();

    let mut le_duals = vec![0.0; lp.le.len()];
    let mut eq_duals = vec![0.0; lp.eq.len()];
    for (i, row) in rows.iter().enumerate() {
        let y = sign[i] * tab.obj[id_col[i]];
        match row.3 {
            Origin::Le(k) => le_duals[k] = y.max(0.0),
            Origin::Eq(k) => eq_duals[k] = y,
            Origin::Bound => {}
        }
    }

    let violation = lp.max_violation(&x);
    let scale = 1.0 + lp.le.iter().chain(&lp.eq).map(|r| r.1.abs()).fold(0.0, f64::max);
    if violation > FEASIBILITY_CHECK * scale {
        return Err(Error::NumericalFailure(format!("simplex solution violates constraints by {violation}")));
    }
    let value = lp.objective_value(&x);
    debug_assert!((value - (offset + (0..n_struct).map(|j| cost[j] * xs[j]).sum::<f64>())).abs() < 1e-6 * (1.0 + value.abs()));
    Ok(LpOutcome::Optimal(LpSolution { x, value, le_duals, eq_duals, iterations: tab.iterations }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tiny_instance;

    #[test]
    fn clamp_to_upper_row() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.add_le(vec![1.0], 0.75);
        let s = solve_lp(&lp).unwrap().optimal().unwrap();
        assert!((s.x[0] - 0.75).abs() < 1e-12);
        assert!((s.le_duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows_infeasible() {
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.add_le(vec![1.0], 0.0);
        lp.add_ge(vec![1.0], 1.0);
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add_le(vec![1.0, -1.0], 1.0);
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn free_and_bounded_variables() {
        // max −|x−3| style: min x₁ with x₁ free, x₁ ≥ x₂ − 2, x₂ ∈ [1, 4] fixed by objective
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, 0.0];
        lp.bounds = vec![(f64::NEG_INFINITY, f64::INFINITY), (1.0, 4.0)];
        lp.add_ge(vec![1.0, -1.0], -2.0);
        let s = solve_lp(&lp).unwrap().optimal().unwrap();
        assert!((s.x[0] + 1.0).abs() < 1e-12, "{:?}", s.x);
        assert!((s.value - 1.0).abs() < 1e-12);

        let mut lp = LinearProgram::new(1);
        lp.objective = vec![1.0];
        lp.bounds = vec![(f64::NEG_INFINITY, -0.5)];
        let s = solve_lp(&lp).unwrap().optimal().unwrap();
        assert_eq!(s.x, vec![-0.5]);
    }

    #[test]
    fn tiny_full_enumeration() {
        // variables φ_{θ0}(∅), φ_{θ0}({k}), φ_{θ1}(∅), φ_{θ1}({k})
        let inst = tiny_instance();
        let mut lp = LinearProgram::new(4);
        lp.objective = vec![0.0, 0.5, 0.0, 0.5];
        lp.add_eq(vec![1.0, 1.0, 0.0, 0.0], 1.0);
        lp.add_eq(vec![0.0, 0.0, 1.0, 1.0], 1.0);
        lp.add_ge(vec![0.0, 0.5 * inst.utility_diff(0, 0, 0), 0.0, 0.5 * inst.utility_diff(0, 0, 1)], 0.0);
        let s = solve_lp(&lp).unwrap().optimal().unwrap();
        assert!((s.value - 0.75).abs() < 1e-12);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // classic cycling example for Dantzig's rule without anti-cycling
        let mut lp = LinearProgram::new(4);
        lp.objective = vec![0.75, -150.0, 0.02, -6.0];
        lp.add_le(vec![0.25, -60.0, -0.04, 9.0], 0.0);
        lp.add_le(vec![0.5, -90.0, -0.02, 3.0], 0.0);
        lp.add_le(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        let s = solve_lp(&lp).unwrap().optimal().unwrap();
        assert!((s.value - 0.05).abs() < 1e-9, "{}", s.value);
    }

    #[test]
    fn strong_duality_on_standard_form() {
        let mut lp = LinearProgram::new(3);
        lp.objective = vec![3.0, 2.0, 4.0];
        lp.add_le(vec![1.0, 1.0, 2.0], 4.0);
        lp.add_le(vec![2.0, 0.0, 3.0], 5.0);
        lp.add_le(vec![2.0, 1.0, 3.0], 7.0);
        let s = solve_lp(&lp).unwrap().optimal().unwrap();
        let dual: f64 = lp.le.iter().zip(&s.le_duals).map(|((_, b), y)| b * y).sum();
        assert!((dual - s.value).abs() < 1e-9);
        for j in 0..3 {
            let aty: f64 = lp.le.iter().zip(&s.le_duals).map(|((a, _), y)| a[j] * y).sum();
            assert!(aty >= lp.objective[j] - 1e-9);
        }
    }
}

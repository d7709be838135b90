//! Central-cut ellipsoid feasibility search.
//!
//! The shape `A = B Bᵀ` is kept in factored form, which keeps it positive
//! definite by construction and makes the volume proxy `ln|det B|` an exact
//! running sum.

use crate::error::{Error, Result};

/// Default target precision.
pub const FEAS_TOL: f64 = 1e-7;
/// How far the center may sit inside a halfspace before the cut is rejected.
pub const CUT_SLACK: f64 = 1e-12;

/// `normal · x ≤ offset` holds on the feasible set but fails at the center.
#[derive(Clone, Debug, PartialEq)]
pub struct Cut<L> {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub label: L,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SeparationResponse<L> {
    Feasible,
    Cut(Cut<L>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SearchOutcome<L> {
    Feasible { point: Vec<f64>, cuts: Vec<Cut<L>>, iterations: usize },
    Infeasible { cuts: Vec<Cut<L>>, iterations: usize },
}

impl<L> SearchOutcome<L> {
    pub fn cuts(&self) -> &[Cut<L>] {
        match self {
            SearchOutcome::Feasible { cuts, .. } | SearchOutcome::Infeasible { cuts, .. } => cuts,
        }
    }

    pub fn iterations(&self) -> usize {
        match self {
            SearchOutcome::Feasible { iterations, .. } | SearchOutcome::Infeasible { iterations, .. } => *iterations,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, SearchOutcome::Feasible { .. })
    }
}

#[derive(Clone, Debug, Default)]
pub struct EllipsoidConfig {
    /// Defaults to `⌈4p(p+1) ln(width / feas_tol)⌉`.
    pub max_iters: Option<usize>,
    /// Stop once `ln|det B|` drops below this. Defaults to `p · ln(feas_tol)`.
    pub vol_threshold: Option<f64>,
    /// Defaults to [`FEAS_TOL`].
    pub feas_tol: Option<f64>,
}

impl EllipsoidConfig {
    fn feas_tol(&self) -> f64 {
        self.feas_tol.unwrap_or(FEAS_TOL)
    }

    pub fn resolved_max_iters(&self, bounds: &[(f64, f64)]) -> usize {
        self.max_iters.unwrap_or_else(|| {
            let p = bounds.len() as f64;
            let width = bounds.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
            (4.0 * p * (p + 1.0) * (width / self.feas_tol()).ln().max(1.0)).ceil() as usize
        })
    }

    pub fn resolved_vol_threshold(&self, dim: usize) -> f64 {
        self.vol_threshold.unwrap_or(dim as f64 * self.feas_tol().ln())
    }
}

#[derive(Clone, Debug)]
pub struct EllipsoidState {
    center: Vec<f64>,
    /// Row-major `p × p` factor with `A = B Bᵀ`.
    factor: Vec<f64>,
    iterations: usize,
    log_det: f64,
}

impl EllipsoidState {
    /// Axis-aligned ellipsoid circumscribing the box, radii scaled by `scale`.
    pub fn circumscribing(bounds: &[(f64, f64)], scale: f64) -> Result<Self> {
        let p = bounds.len();
        if p == 0 {
            return Err(Error::InvalidInput("ellipsoid needs dimension ≥ 1".into()));
        }
        let mut factor = vec![0.0; p * p];
        let mut log_det = 0.0;
        let mut center = Vec::with_capacity(p);
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidInput(format!("box coordinate {i} is [{lo}, {hi}]")));
            }
            let radius = scale * (p as f64).sqrt() * (hi - lo) / 2.0;
            factor[i * p + i] = radius;
            log_det += radius.ln();
            center.push((lo + hi) / 2.0);
        }
        Ok(EllipsoidState { center, factor, iterations: 0, log_det })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `ln|det B| = ½ ln det A`; the log-volume up to a dimension constant.
    pub fn log_volume(&self) -> f64 {
        self.log_det
    }

    /// `A = B Bᵀ`.
    pub fn shape_matrix(&self) -> Vec<f64> {
        let p = self.dim();
        let mut a = vec![0.0; p * p];
        for i in 0..p {
            for j in 0..=i {
                let v: f64 = (0..p).map(|k| self.factor[i * p + k] * self.factor[j * p + k]).sum();
                a[i * p + j] = v;
                a[j * p + i] = v;
            }
        }
        a
    }

    /// Half-width of the ellipsoid along `normal`: `‖Bᵀa‖ / ‖a‖`.
    pub fn width(&self, normal: &[f64]) -> f64 {
        let p = self.dim();
        let mut total = 0.0;
        for k in 0..p {
            let v: f64 = (0..p).map(|i| self.factor[i * p + k] * normal[i]).sum();
            total += v * v;
        }
        let norm = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
        total.sqrt() / norm
    }

    /// Central-cut update for `normal · x ≤ ·` through the center.
    pub fn cut(&mut self, normal: &[f64]) -> Result<()> {
        let p = self.dim();
        let b = &self.factor;
        let mut g = vec![0.0; p];
        for i in 0..p {
            let a_i = normal[i];
            if a_i != 0.0 {
                for (k, gk) in g.iter_mut().enumerate() {
                    *gk += b[i * p + k] * a_i;
                }
            }
        }
        let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NumericalFailure(format!("degenerate cut direction (‖Bᵀa‖ = {norm})")));
        }
        g.iter_mut().for_each(|x| *x /= norm);
        let dir: Vec<f64> = (0..p).map(|i| (0..p).map(|k| b[i * p + k] * g[k]).sum()).collect();

        let pf = p as f64;
        for (c, d) in self.center.iter_mut().zip(&dir) {
            *c -= d / (pf + 1.0);
        }
        if p == 1 {
            self.factor[0] /= 2.0;
            self.log_det -= std::f64::consts::LN_2;
        } else {
            let scale = pf / (pf * pf - 1.0).sqrt();
            let kappa = ((pf - 1.0) / (pf + 1.0)).sqrt() - 1.0;
            for i in 0..p {
                let di = kappa * dir[i];
                for k in 0..p {
                    let v = &mut self.factor[i * p + k];
                    *v = scale * (*v + di * g[k]);
                }
            }
            self.log_det += pf * scale.ln() + (1.0 + kappa).ln();
        }
        self.iterations += 1;
        if self.center.iter().any(|x| !x.is_finite()) || !self.log_det.is_finite() {
            return Err(Error::NumericalFailure("ellipsoid state became non-finite".into()));
        }
        Ok(())
    }
}

/// Per-cut decrease of `ln|det B|` guaranteed by the central-cut update.
pub fn guaranteed_log_decrease(p: usize) -> f64 {
    1.0 / (2.0 * (p as f64 + 1.0))
}

/// Searches the box for a point the oracle accepts.
///
/// Returns `Feasible` with the first accepted center, or `Infeasible` with
/// every cut issued once the volume proxy falls below the threshold, the
/// ellipsoid is thinner than the tolerance along a cut, or the iteration
/// budget runs out. A numerical breakdown triggers one restart from
/// an ellipsoid of twice the radius.
pub fn feasibility_search<L, F>(bounds: &[(f64, f64)], mut oracle: F, cfg: &EllipsoidConfig) -> Result<SearchOutcome<L>>
where
    F: FnMut(&[f64]) -> Result<SeparationResponse<L>>,
{
    match run(bounds, &mut oracle, cfg, 1.0) {
        Err(Error::NumericalFailure(_)) => run(bounds, &mut oracle, cfg, 2.0),
        other => other,
    }
}

fn run<L, F>(bounds: &[(f64, f64)], oracle: &mut F, cfg: &EllipsoidConfig, scale: f64) -> Result<SearchOutcome<L>>
where
    F: FnMut(&[f64]) -> Result<SeparationResponse<L>>,
{
    let mut state = EllipsoidState::circumscribing(bounds, scale)?;
    let max_iters = cfg.resolved_max_iters(bounds);
    let threshold = cfg.resolved_vol_threshold(bounds.len());
    let cut_cap = max_iters.saturating_mul(10).max(1);
    let mut cuts: Vec<Cut<L>> = Vec::new();
    loop {
        match oracle(state.center())? {
            SeparationResponse::Feasible => {
                return Ok(SearchOutcome::Feasible {
                    point: state.center().to_vec(),
                    iterations: state.iterations(),
                    cuts,
                })
            }
            SeparationResponse::Cut(cut) => {
                if cut.normal.len() != state.dim() {
                    return Err(Error::InvalidInput(format!(
                        "cut has dimension {} in a {}-dimensional search",
                        cut.normal.len(),
                        state.dim()
                    )));
                }
                let lhs: f64 = cut.normal.iter().zip(state.center()).map(|(a, c)| a * c).sum();
                if lhs < cut.offset - CUT_SLACK {
                    return Err(Error::InvariantViolation(format!(
                        "oracle cut not violated by the center: {lhs} < {}",
                        cut.offset
                    )));
                }
                // flatter than the tolerance along the cut: no tolerance ball fits
                let thin = state.width(&cut.normal) < cfg.feas_tol();
                if !thin {
                    state.cut(&cut.normal)?;
                }
                if cuts.len() >= cut_cap {
                    return Err(Error::InvariantViolation(format!("cut log exceeded {cut_cap} entries")));
                }
                cuts.push(cut);
                if thin || state.log_volume() < threshold || state.iterations() >= max_iters {
                    return Ok(SearchOutcome::Infeasible { iterations: state.iterations(), cuts });
                }
            }
        }
    }
}

/// Oracle for an explicit list of halfspaces `a·x ≤ b`, cutting on the first
/// violated one. Labels are row indices.
pub fn polytope_oracle<'a>(
    rows: &'a [(Vec<f64>, f64)],
    tol: f64,
) -> impl FnMut(&[f64]) -> Result<SeparationResponse<usize>> + 'a {
    move |x: &[f64]| {
        for (i, (a, b)) in rows.iter().enumerate() {
            let lhs: f64 = a.iter().zip(x).map(|(a, x)| a * x).sum();
            if lhs > b + tol {
                return Ok(SeparationResponse::Cut(Cut { normal: a.clone(), offset: *b, label: i }));
            }
        }
        Ok(SeparationResponse::Feasible)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halfspace(a: &[f64], b: f64) -> (Vec<f64>, f64) {
        (a.to_vec(), b)
    }

    #[test]
    fn unit_interval_center_accepted() {
        let rows = [halfspace(&[1.0], 1.0), halfspace(&[-1.0], 0.0)];
        let out = feasibility_search(&[(0.0, 1.0)], polytope_oracle(&rows, 0.0), &EllipsoidConfig::default()).unwrap();
        match out {
            SearchOutcome::Feasible { point, iterations, .. } => {
                assert_eq!(point, vec![0.5]);
                assert_eq!(iterations, 0);
            }
            _ => panic!("expected feasible"),
        }
    }

    #[test]
    fn empty_interval_is_infeasible() {
        let rows = [halfspace(&[-1.0], -1.0), halfspace(&[1.0], 0.0)];
        let out = feasibility_search(&[(0.0, 1.0)], polytope_oracle(&rows, 0.0), &EllipsoidConfig::default()).unwrap();
        assert!(!out.is_feasible());
        assert!(out.cuts().len() >= 2);
    }

    #[test]
    fn thin_simplex_corner_found() {
        let rows = [halfspace(&[1.0, 1.0], 0.1), halfspace(&[-1.0, 0.0], 0.0), halfspace(&[0.0, -1.0], 0.0)];
        let out = feasibility_search(&[(0.0, 1.0), (0.0, 1.0)], polytope_oracle(&rows, 0.0), &EllipsoidConfig::default())
            .unwrap();
        let SearchOutcome::Feasible { point, .. } = out else { panic!("expected feasible") };
        assert!(point[0] + point[1] <= 0.1 + 1e-7);
        assert!(point.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn volume_shrinks_by_guaranteed_factor() {
        let bounds = vec![(-1.0, 1.0); 4];
        let mut st = EllipsoidState::circumscribing(&bounds, 1.0).unwrap();
        let dirs = [[1.0, 0.0, 0.0, 0.0], [0.3, -1.0, 0.2, 0.0], [0.0, 0.0, 1.0, 1.0], [-0.5, 0.5, -0.5, 2.0]];
        for d in dirs.iter().cycle().take(40) {
            let before = st.log_volume();
            st.cut(d).unwrap();
            assert!(before - st.log_volume() >= guaranteed_log_decrease(4) - 1e-6);
        }
    }

    #[test]
    fn shape_matrix_tracks_log_det() {
        let bounds = vec![(0.0, 2.0), (0.0, 1.0), (-3.0, 3.0)];
        let mut st = EllipsoidState::circumscribing(&bounds, 1.0).unwrap();
        st.cut(&[1.0, 2.0, -1.0]).unwrap();
        st.cut(&[0.0, 1.0, 1.0]).unwrap();
        let a = st.shape_matrix();
        // 3×3 determinant
        let det = a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
            + a[2] * (a[3] * a[7] - a[4] * a[6]);
        assert!((0.5 * det.ln() - st.log_volume()).abs() < 1e-9);
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[i * 3 + j] - a[j * 3 + i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn cut_not_violated_is_rejected() {
        let bounds = [(0.0, 1.0)];
        let oracle = |_: &[f64]| -> Result<SeparationResponse<()>> {
            Ok(SeparationResponse::Cut(Cut { normal: vec![1.0], offset: 5.0, label: () }))
        };
        assert!(matches!(
            feasibility_search(&bounds, oracle, &EllipsoidConfig::default()),
            Err(Error::InvariantViolation(_))
        ));
    }

    #[test]
    fn cuts_replay_against_recorded_centers() {
        let rows = [halfspace(&[-1.0, 0.0], -0.5), halfspace(&[1.0, 0.0], 0.2)];
        let bounds = [(-1.0, 1.0), (-1.0, 1.0)];
        let mut centers = Vec::new();
        let mut inner = polytope_oracle(&rows, 0.0);
        let out = feasibility_search(
            &bounds,
            |c: &[f64]| {
                centers.push(c.to_vec());
                inner(c)
            },
            &EllipsoidConfig::default(),
        )
        .unwrap();
        assert!(!out.is_feasible());
        for (cut, c) in out.cuts().iter().zip(&centers) {
            let lhs: f64 = cut.normal.iter().zip(c).map(|(a, x)| a * x).sum();
            assert!(lhs > cut.offset - CUT_SLACK);
        }
    }
}

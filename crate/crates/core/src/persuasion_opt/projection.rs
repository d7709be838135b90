//! Approximate projection onto the reward polytope: a γ search over the dual
//! QP, each level decided by the ellipsoid method, then the primal QP
//! restricted to the profiles the searches cut on.

use serde::{Deserialize, Serialize};

use super::exact::restricted_projection;
use super::offline::{bound_cut, offline_probe, profile_cut};
use super::restricted::ProfileSet;
use super::{
    check_profiles, clamp_weights, extension, first_weight_above, CutLabel, DualLayout, RewardVector,
};
use crate::ellipsoid::{feasibility_search, Cut, EllipsoidConfig, SearchOutcome, SeparationResponse};
use crate::error::{Error, Result};
use crate::matroid_sep::{OracleKind, SepQuery};
use crate::model::{activated_set, Instance, SignalProfile, SignalingScheme, TypeProfile};

/// Dual point `(d, z, ν)` of the projection QP.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionDualPoint {
    pub d: Vec<f64>,
    pub z: Vec<f64>,
    pub nu: Vec<f64>,
}

impl ProjectionDualPoint {
    pub fn zeros(inst: &Instance, layout: &DualLayout, k: usize) -> Self {
        ProjectionDualPoint { d: vec![0.0; inst.num_states()], z: vec![0.0; layout.len()], nu: vec![0.0; k] }
    }

    pub fn from_slice(inst: &Instance, layout: &DualLayout, v: &[f64]) -> Self {
        let (d, rest) = v.split_at(inst.num_states());
        let (z, nu) = rest.split_at(layout.len());
        ProjectionDualPoint { d: d.to_vec(), z: z.to_vec(), nu: nu.to_vec() }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.d.iter().chain(&self.z).chain(&self.nu).copied().collect()
    }

    /// `Σ_k (ν_k y_k − ν_k²/4) − Σ_θ d_θ`.
    pub fn objective(&self, y: &[f64]) -> f64 {
        let q: f64 = self.nu.iter().zip(y).map(|(n, y)| n * y - n * n / 4.0).sum();
        q - self.d.iter().sum::<f64>()
    }
}

/// How the γ levels are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSchedule {
    /// Scan down from the top in steps of `β`, carrying every cut forward,
    /// until a level is feasible.
    LinearScan,
    /// Probe just below the current restricted QP value; each infeasible
    /// probe adds profiles and lowers the value.
    #[default]
    PrimalGuided,
}

#[derive(Clone, Debug)]
pub struct ProjectionConfig {
    pub schedule: GammaSchedule,
    /// Check the projection inequality for every point of `αX_K` with an
    /// offline feasibility run, enlarging the profile set until it holds.
    pub certify: bool,
    pub max_certify_rounds: usize,
    pub qp_tol: f64,
    pub ellipsoid: EllipsoidConfig,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        ProjectionConfig {
            schedule: GammaSchedule::PrimalGuided,
            certify: true,
            max_certify_rounds: 200,
            qp_tol: 1e-9,
            ellipsoid: EllipsoidConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOutput {
    pub x: RewardVector,
    pub scheme: SignalingScheme,
    /// `(γ, feasible)` for every dual probe, in order.
    pub gamma_probes: Vec<(f64, bool)>,
    /// Size of the carried profile set before each probe.
    pub h_unf_sizes: Vec<usize>,
    /// `‖x − y‖²` on the returned point.
    pub restricted_value: f64,
    /// False only when certification stalled or ran out of rounds.
    pub certified: bool,
    pub certify_rounds: usize,
    pub ellipsoid_iterations: usize,
}

/// Separation for the projection dual at level `γ`. Checks, in order: every
/// profile in `h`; the concave objective constraint (cut by its tangent);
/// `d ∈ [0, 4|K|]`; `ν ∈ [0, |K|+10]`; the `z` box; `w > 4|K|`; then clamps
/// `w < −4|K||R|−10` and asks `oracle` with `λ^θ = μ_θ ν` for each state.
#[allow(clippy::too_many_arguments)]
pub fn projection_sep_case_analysis(
    inst: &Instance,
    layout: &DualLayout,
    k: &[TypeProfile],
    y: &[f64],
    point: &ProjectionDualPoint,
    gamma: f64,
    h: &ProfileSet,
    z_max: f64,
    oracle: OracleKind,
    delta: f64,
) -> Result<SeparationResponse<CutLabel>> {
    let n = inst.num_receivers();
    let nt = inst.num_states();
    let nk = k.len() as f64;
    let nu_start = nt + layout.len();
    let dim = nu_start + k.len();
    let mu = inst.prior();
    let weights: Vec<Vec<Vec<f64>>> = (0..nt).map(|t| layout.weights(inst, &point.z, t)).collect();
    let lhs = |t: usize, s: &SignalProfile| -> f64 {
        let f: f64 = k.iter().zip(&point.nu).map(|(kp, v)| v * inst.sender_value(t, activated_set(s, kp))).sum();
        let lin: f64 = s.0.iter().enumerate().map(|(r, &sig)| weights[t][r][sig as usize]).sum();
        mu[t] * f + lin
    };
    let cut = |t: usize, s: SignalProfile| profile_cut(inst, layout, dim, t, s, Some((nu_start, k)), 0.0);

    for (t, s) in h.iter() {
        if lhs(t, s) > point.d[t] {
            return Ok(SeparationResponse::Cut(cut(t, s.clone())));
        }
    }
    let g = point.objective(y);
    if g < gamma {
        let c = point.to_vec();
        let mut normal = vec![0.0; dim];
        normal[..nt].iter_mut().for_each(|v| *v = 1.0);
        for (i, (&v, &yk)) in point.nu.iter().zip(y).enumerate() {
            normal[nu_start + i] = -(yk - v / 2.0);
        }
        let at: f64 = normal.iter().zip(&c).map(|(a, x)| a * x).sum();
        return Ok(SeparationResponse::Cut(Cut { normal, offset: at + g - gamma, label: CutLabel::Objective }));
    }
    let d_max = 4.0 * nk;
    for (t, &d) in point.d.iter().enumerate() {
        if d < 0.0 {
            return Ok(SeparationResponse::Cut(cut(t, SignalProfile::empty(n))));
        }
        if d > d_max {
            return Ok(SeparationResponse::Cut(bound_cut(dim, t, true, d_max)));
        }
    }
    let nu_max = nk + 10.0;
    for (i, &v) in point.nu.iter().enumerate() {
        if v < 0.0 {
            return Ok(SeparationResponse::Cut(bound_cut(dim, nu_start + i, false, 0.0)));
        }
        if v > nu_max {
            return Ok(SeparationResponse::Cut(bound_cut(dim, nu_start + i, true, nu_max)));
        }
    }
    for (i, &z) in point.z.iter().enumerate() {
        if z < 0.0 {
            return Ok(SeparationResponse::Cut(bound_cut(dim, nt + i, false, 0.0)));
        }
        if z > z_max {
            return Ok(SeparationResponse::Cut(bound_cut(dim, nt + i, true, z_max)));
        }
    }
    for (t, w) in weights.iter().enumerate() {
        if let Some((r, s)) = first_weight_above(w, d_max) {
            return Ok(SeparationResponse::Cut(cut(t, extension(n, r, s))));
        }
    }
    let floor = -4.0 * nk * n as f64 - 10.0;
    for (t, w) in weights.iter().enumerate() {
        let mut clamped = w.clone();
        clamp_weights(&mut clamped, floor);
        let lambda: Vec<f64> = point.nu.iter().map(|v| v * mu[t]).collect();
        let q = SepQuery { state: t, profiles: k, lambda: &lambda, weights: &clamped, eps: delta };
        let res = oracle.separate(inst, &q)?;
        if lhs(t, &res.profile) > point.d[t] {
            return Ok(SeparationResponse::Cut(cut(t, res.profile)));
        }
    }
    Ok(SeparationResponse::Feasible)
}

struct Problem<'a> {
    inst: &'a Instance,
    layout: DualLayout,
    k: &'a [TypeProfile],
    y: Vec<f64>,
    eps: f64,
    oracle: OracleKind,
    cfg: &'a ProjectionConfig,
}

impl Problem<'_> {
    fn delta(&self) -> f64 {
        self.eps / (2.0 * self.inst.num_states() as f64)
    }

    fn probe(&self, gamma: f64, h: &ProfileSet) -> Result<SearchOutcome<CutLabel>> {
        let (inst, layout, k) = (self.inst, &self.layout, self.k);
        let nk = k.len() as f64;
        let z_max = DualLayout::z_max(inst, 4.0 * nk * inst.num_receivers() as f64 + 10.0);
        let delta = self.delta();
        let sep = |v: &[f64]| {
            let p = ProjectionDualPoint::from_slice(inst, layout, v);
            projection_sep_case_analysis(inst, layout, k, &self.y, &p, gamma, h, z_max, self.oracle, delta)
        };
        let zero = vec![0.0; inst.num_states() + layout.len() + k.len()];
        if let SeparationResponse::Feasible = sep(&zero)? {
            return Ok(SearchOutcome::Feasible { point: zero, cuts: Vec::new(), iterations: 0 });
        }
        let mut bounds = vec![(-1.0, 4.0 * nk + 1.0); inst.num_states()];
        bounds.extend(std::iter::repeat_n((-1.0, z_max), layout.len()));
        bounds.extend(std::iter::repeat_n((-1.0, nk + 11.0), k.len()));
        feasibility_search(&bounds, sep, &self.cfg.ellipsoid)
    }

    fn restricted(&self, h: &ProfileSet) -> Result<(RewardVector, SignalingScheme, f64)> {
        let y = RewardVector::new(self.k.to_vec(), self.y.clone())?;
        let p = restricted_projection(self.inst, self.k, &y, h, self.cfg.qp_tol)?;
        Ok((p.x, p.scheme, p.value))
    }

    /// Offline feasibility run for `max_{x′ ∈ αX} ⟨x′, g⟩ ≤ ⟨x, g⟩ + (‖g‖² + ε)/2`
    /// with `g = y − x`. `None` when it holds, else the run's cuts.
    fn certify(&self, x: &[f64], iterations: &mut usize) -> Result<Option<Vec<Cut<CutLabel>>>> {
        let g: Vec<f64> = self.y.iter().zip(x).map(|(y, x)| y - x).collect();
        let plus: Vec<f64> = g.iter().map(|v| v.max(0.0)).collect();
        let mass: f64 = plus.iter().sum();
        let level = x.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
            + g.iter().map(|v| v * v).sum::<f64>() / 2.0
            + self.eps / 4.0;
        // every reward vector is in [0, 1]^K
        if level >= mass {
            return Ok(None);
        }
        let scale = mass.max(1.0);
        let lambda: Vec<f64> = plus.iter().map(|v| v / scale).collect();
        let delta = self.eps / (4.0 * self.inst.num_states() as f64 * scale);
        let out = offline_probe(
            self.inst,
            &self.layout,
            self.k,
            &lambda,
            level / scale,
            self.oracle,
            delta,
            &self.cfg.ellipsoid,
        )?;
        *iterations += out.iterations();
        Ok(match out {
            SearchOutcome::Feasible { .. } => None,
            SearchOutcome::Infeasible { cuts, .. } => Some(cuts),
        })
    }
}

/// Approximate projection of `y` onto `αX_K` with the default configuration.
pub fn approx_projection(
    inst: &Instance,
    k: &[TypeProfile],
    y: &RewardVector,
    eps: f64,
    oracle: OracleKind,
) -> Result<ProjectionOutput> {
    approx_projection_with(inst, k, y, eps, oracle, &ProjectionConfig::default())
}

pub fn approx_projection_with(
    inst: &Instance,
    k: &[TypeProfile],
    y: &RewardVector,
    eps: f64,
    oracle: OracleKind,
    cfg: &ProjectionConfig,
) -> Result<ProjectionOutput> {
    check_profiles(inst, k)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidInput(format!("ε = {eps} not in (0, 1]")));
    }
    let yk: Vec<f64> = k.iter().map(|kp| y.get(kp)).collect();
    if let Some(v) = yk.iter().find(|v| !(**v >= 0.0 && **v <= 2.0)) {
        return Err(Error::InvalidInput(format!("y coordinate {v} outside [0, 2]")));
    }
    if yk.iter().all(|&v| v == 0.0) {
        return Ok(ProjectionOutput {
            x: RewardVector::zeros(k.to_vec()),
            scheme: SignalingScheme::always_empty(inst),
            gamma_probes: Vec::new(),
            h_unf_sizes: Vec::new(),
            restricted_value: 0.0,
            certified: true,
            certify_rounds: 0,
            ellipsoid_iterations: 0,
        });
    }

    let p = Problem { inst, layout: DualLayout::new(inst), k, y: yk, eps, oracle, cfg };
    let beta = eps / 2.0;
    let mut h = ProfileSet::with_empty(inst);
    let mut probes = Vec::new();
    let mut sizes = Vec::new();
    let mut iterations = 0;

    let (mut x, mut scheme, mut value) = match cfg.schedule {
        GammaSchedule::LinearScan => {
            let top = (k.len() as f64).max(p.y.iter().map(|v| v * v).sum());
            let mut gamma = top;
            loop {
                if gamma < -beta {
                    return Err(Error::InvariantViolation(format!("no feasible level down to γ = {gamma}")));
                }
                sizes.push(h.len());
                let out = p.probe(gamma, &h)?;
                iterations += out.iterations();
                probes.push((gamma, out.is_feasible()));
                if out.is_feasible() {
                    break;
                }
                h.absorb(out.cuts());
                gamma -= beta;
            }
            p.restricted(&h)?
        }
        GammaSchedule::PrimalGuided => {
            let (mut x, mut scheme, mut value) = p.restricted(&h)?;
            let mut last = f64::INFINITY;
            loop {
                let gamma = value.min(last) - beta;
                if gamma < 0.0 {
                    break;
                }
                sizes.push(h.len());
                let out = p.probe(gamma, &h)?;
                iterations += out.iterations();
                probes.push((gamma, out.is_feasible()));
                if out.is_feasible() {
                    break;
                }
                last = gamma;
                if h.absorb(out.cuts()) > 0 {
                    (x, scheme, value) = p.restricted(&h)?;
                }
            }
            (x, scheme, value)
        }
    };

    let mut certified = !cfg.certify;
    let mut rounds = 0;
    while cfg.certify && rounds < cfg.max_certify_rounds {
        rounds += 1;
        match p.certify(x.values(), &mut iterations)? {
            None => {
                certified = true;
                break;
            }
            Some(cuts) => {
                if h.absorb(&cuts) == 0 {
                    break;
                }
                (x, scheme, value) = p.restricted(&h)?;
            }
        }
    }

    Ok(ProjectionOutput {
        x,
        scheme,
        gamma_probes: probes,
        h_unf_sizes: sizes,
        restricted_value: value,
        certified,
        certify_rounds: rounds,
        ellipsoid_iterations: iterations,
    })
}

//! Offline approximate solver: bisection on the dual objective level, each
//! level decided by an ellipsoid search with a case-analysis separation
//! oracle, then a restricted LP over the profiles the search cut on.

use serde::{Deserialize, Serialize};

use super::exact::restricted_offline;
use super::restricted::ProfileSet;
use super::{check_profiles, clamp_weights, extension, f_lambda, first_weight_above, CutLabel, DualLayout};
use crate::ellipsoid::{feasibility_search, Cut, EllipsoidConfig, SearchOutcome, SeparationResponse};
use crate::error::{Error, Result};
use crate::matroid_sep::{OracleKind, SepQuery};
use crate::model::{Instance, SignalProfile, SignalingScheme, TypeProfile};

/// Dual point `(d, z)` of the persuasion LP.
#[derive(Clone, Debug, PartialEq)]
pub struct OfflineDualPoint {
    pub d: Vec<f64>,
    pub z: Vec<f64>,
}

impl OfflineDualPoint {
    pub fn zeros(inst: &Instance, layout: &DualLayout) -> Self {
        OfflineDualPoint { d: vec![0.0; inst.num_states()], z: vec![0.0; layout.len()] }
    }

    pub fn from_slice(inst: &Instance, v: &[f64]) -> Self {
        let (d, z) = v.split_at(inst.num_states());
        OfflineDualPoint { d: d.to_vec(), z: z.to_vec() }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.d.iter().chain(&self.z).copied().collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct OfflineConfig {
    pub ellipsoid: EllipsoidConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfflineOutput {
    pub scheme: SignalingScheme,
    /// `Σ_k λ_k f(φ, k)` of the returned scheme.
    pub value: f64,
    /// Smallest level found feasible, in the caller's scale.
    pub gamma_star: f64,
    /// `(level, feasible)` for every probe, in the caller's scale.
    pub probes: Vec<(f64, bool)>,
    pub restricted_profiles: usize,
    pub ellipsoid_iterations: usize,
}

/// The constraint for `φ_θ(s)`, as a cut: `−d_θ + Σ_r w^θ_{r,s_r}(z) ≤ −μ_θ f^λ_θ(s)`
/// (with the `ν` block filled for the projection dual).
pub(super) fn profile_cut(
    inst: &Instance,
    layout: &DualLayout,
    dim: usize,
    state: usize,
    s: SignalProfile,
    nu: Option<(usize, &[TypeProfile])>,
    offset: f64,
) -> Cut<CutLabel> {
    let mut normal = vec![0.0; dim];
    normal[state] = -1.0;
    layout.add_weight_gradient(inst, state, &s, &mut normal, inst.num_states());
    if let Some((start, k)) = nu {
        let mu = inst.prior()[state];
        for (i, kp) in k.iter().enumerate() {
            normal[start + i] = mu * inst.sender_value(state, crate::model::activated_set(&s, kp));
        }
    }
    Cut { normal, offset, label: CutLabel::Profile { state, profile: s } }
}

pub(super) fn bound_cut(dim: usize, coord: usize, upper: bool, value: f64) -> Cut<CutLabel> {
    let mut normal = vec![0.0; dim];
    normal[coord] = if upper { 1.0 } else { -1.0 };
    Cut { normal, offset: if upper { value } else { -value }, label: CutLabel::Bound { coord } }
}

/// Separation for the offline feasibility problem at level `γ̄`. Checks, in
/// order: `d_θ < 0`; `d_θ > 1`; `Σd > γ̄`; the `z` box; `w > 1`; then clamps
/// `w ≤ −|R|` and asks `oracle` for each state.
#[allow(clippy::too_many_arguments)]
pub fn offline_sep_case_analysis(
    inst: &Instance,
    layout: &DualLayout,
    k: &[TypeProfile],
    lambda: &[f64],
    point: &OfflineDualPoint,
    gamma_bar: f64,
    z_max: f64,
    oracle: OracleKind,
    delta: f64,
) -> Result<SeparationResponse<CutLabel>> {
    let n = inst.num_receivers();
    let nt = inst.num_states();
    let dim = nt + layout.len();
    let mu = inst.prior();

    if let Some(t) = point.d.iter().position(|&d| d < 0.0) {
        return Ok(SeparationResponse::Cut(profile_cut(inst, layout, dim, t, SignalProfile::empty(n), None, 0.0)));
    }
    let objective_cut = || {
        let mut normal = vec![0.0; dim];
        normal[..nt].iter_mut().for_each(|v| *v = 1.0);
        Cut { normal, offset: gamma_bar, label: CutLabel::Objective }
    };
    if point.d.iter().any(|&d| d > 1.0) || point.d.iter().sum::<f64>() > gamma_bar {
        return Ok(SeparationResponse::Cut(objective_cut()));
    }
    for (i, &z) in point.z.iter().enumerate() {
        if z < 0.0 {
            return Ok(SeparationResponse::Cut(bound_cut(dim, nt + i, false, 0.0)));
        }
        if z > z_max {
            return Ok(SeparationResponse::Cut(bound_cut(dim, nt + i, true, z_max)));
        }
    }
    let weights: Vec<Vec<Vec<f64>>> = (0..nt).map(|t| layout.weights(inst, &point.z, t)).collect();
    for (t, w) in weights.iter().enumerate() {
        if let Some((r, s)) = first_weight_above(w, 1.0) {
            let p = extension(n, r, s);
            let off = -mu[t] * f_lambda(inst, t, k, lambda, &p);
            return Ok(SeparationResponse::Cut(profile_cut(inst, layout, dim, t, p, None, off)));
        }
    }
    let clamp = -(n as f64);
    for (t, w) in weights.iter().enumerate() {
        let mut clamped = w.clone();
        clamp_weights(&mut clamped, clamp);
        let scaled: Vec<f64> = lambda.iter().map(|l| mu[t] * l).collect();
        let q = SepQuery { state: t, profiles: k, lambda: &scaled, weights: &clamped, eps: delta };
        let res = oracle.separate(inst, &q)?;
        let f = mu[t] * f_lambda(inst, t, k, lambda, &res.profile);
        let lin: f64 = res.profile.0.iter().enumerate().map(|(r, &s)| w[r][s as usize]).sum();
        if f + lin > point.d[t] {
            return Ok(SeparationResponse::Cut(profile_cut(inst, layout, dim, t, res.profile, None, -f)));
        }
    }
    Ok(SeparationResponse::Feasible)
}

/// Searches the offline dual at level `γ̄` (λ already normalized).
#[allow(clippy::too_many_arguments)]
pub(super) fn offline_probe(
    inst: &Instance,
    layout: &DualLayout,
    k: &[TypeProfile],
    lambda: &[f64],
    gamma_bar: f64,
    oracle: OracleKind,
    delta: f64,
    cfg: &EllipsoidConfig,
) -> Result<SearchOutcome<CutLabel>> {
    let nt = inst.num_states();
    let z_max = DualLayout::z_max(inst, inst.num_receivers() as f64 + 1.0);
    let sep = |v: &[f64]| {
        let p = OfflineDualPoint::from_slice(inst, v);
        offline_sep_case_analysis(inst, layout, k, lambda, &p, gamma_bar, z_max, oracle, delta)
    };
    let zero = vec![0.0; nt + layout.len()];
    if let SeparationResponse::Feasible = sep(&zero)? {
        return Ok(SearchOutcome::Feasible { point: zero, cuts: Vec::new(), iterations: 0 });
    }
    let mut bounds = vec![(-1.0, 2.0); nt];
    bounds.extend(std::iter::repeat_n((0.0, z_max), layout.len()));
    feasibility_search(&bounds, sep, cfg)
}

/// Bisection over the dual level with `β = ε/2`, `δ = ε/(2|Θ|)`; returns a
/// persuasive scheme with value at least `α·OPT − ε`.
pub fn offline_solve(
    inst: &Instance,
    k: &[TypeProfile],
    lambda: &[f64],
    eps: f64,
    oracle: OracleKind,
) -> Result<OfflineOutput> {
    offline_solve_with(inst, k, lambda, eps, oracle, &OfflineConfig::default())
}

pub fn offline_solve_with(
    inst: &Instance,
    k: &[TypeProfile],
    lambda: &[f64],
    eps: f64,
    oracle: OracleKind,
    cfg: &OfflineConfig,
) -> Result<OfflineOutput> {
    check_profiles(inst, k)?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidInput(format!("ε = {eps} not in (0, 1]")));
    }
    if lambda.len() != k.len() || lambda.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidInput("λ must be strictly positive, one per profile".into()));
    }
    let scale = lambda.iter().sum::<f64>().max(1.0);
    let lam: Vec<f64> = lambda.iter().map(|l| l / scale).collect();
    let eps_n = eps / scale;
    let beta = eps_n / 2.0;
    let delta = eps_n / (2.0 * inst.num_states() as f64);
    let layout = DualLayout::new(inst);

    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut lo_cuts: Vec<Cut<CutLabel>> = Vec::new();
    let mut probes = Vec::new();
    let mut iterations = 0;
    while hi - lo > beta {
        let mid = 0.5 * (lo + hi);
        let out = offline_probe(inst, &layout, k, &lam, mid, oracle, delta, &cfg.ellipsoid)?;
        iterations += out.iterations();
        probes.push((mid * scale, out.is_feasible()));
        match out {
            SearchOutcome::Feasible { .. } => hi = mid,
            SearchOutcome::Infeasible { cuts, .. } => {
                lo = mid;
                lo_cuts = cuts;
            }
        }
    }

    let mut profiles = ProfileSet::with_empty(inst);
    profiles.absorb(&lo_cuts);
    let sol = restricted_offline(inst, k, lambda, &profiles)?;
    sol.scheme.check(inst)?;
    Ok(OfflineOutput {
        scheme: sol.scheme,
        value: sol.value,
        gamma_star: hi * scale,
        probes,
        restricted_profiles: profiles.len(),
        ellipsoid_iterations: iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{is_persuasive, tiny_instance, ConcaveCardinalityFn, InstanceData, Receiver, SetFunction, TableFn};
    use crate::persuasion_opt::exact_offline_solve;

    fn k0() -> Vec<TypeProfile> {
        vec![TypeProfile(vec![0])]
    }

    fn run_case(inst: &Instance, k: &[TypeProfile], lambda: &[f64], point: &OfflineDualPoint, gamma: f64) -> SeparationResponse<CutLabel> {
        let layout = DualLayout::new(inst);
        offline_sep_case_analysis(inst, &layout, k, lambda, point, gamma, 100.0, OracleKind::Exact, 0.01).unwrap()
    }

    #[test]
    fn negative_d_cuts_empty_profile() {
        let inst = tiny_instance();
        let p = OfflineDualPoint { d: vec![0.5, -0.1], z: vec![0.0] };
        let SeparationResponse::Cut(c) = run_case(&inst, &k0(), &[1.0], &p, 1.0) else { panic!() };
        assert_eq!(c.label, CutLabel::Profile { state: 1, profile: SignalProfile(vec![0]) });
        assert_eq!(c.normal, vec![0.0, -1.0, 0.0]);
    }

    #[test]
    fn large_d_cuts_objective() {
        let inst = tiny_instance();
        let p = OfflineDualPoint { d: vec![1.5, 0.0], z: vec![0.0] };
        let SeparationResponse::Cut(c) = run_case(&inst, &k0(), &[1.0], &p, 1.0) else { panic!() };
        assert_eq!(c.label, CutLabel::Objective);
    }

    #[test]
    fn very_negative_weight_is_clamped() {
        // z large enough that w^{θ0} = 0.5·(−2)·z = −(|R|+5)
        let inst = tiny_instance();
        let z = (1.0 + 5.0) / 1.0;
        let p = OfflineDualPoint { d: vec![0.0, 0.5], z: vec![z] };
        let layout = DualLayout::new(&inst);
        let w = layout.weights(&inst, &p.z, 0);
        assert!((w[0][1] + 6.0).abs() < 1e-12);
        let mut clamped = w.clone();
        clamp_weights(&mut clamped, -1.0);
        assert_eq!(clamped[0][1], -1.0);
        // in θ0 the weight makes {k} unattractive; in θ1 w = 3 > 1 cuts first
        let SeparationResponse::Cut(c) = run_case(&inst, &k0(), &[1.0], &p, 1.0) else { panic!() };
        assert_eq!(c.label, CutLabel::Profile { state: 1, profile: SignalProfile(vec![1]) });
    }

    #[test]
    fn zero_point_with_zero_sender_is_feasible() {
        let inst = Instance::new(InstanceData {
            receivers: vec![Receiver { types: vec!["k".into()] }],
            states: vec!["a".into(), "b".into()],
            prior: vec![0.5, 0.5],
            utility_diff: vec![vec![vec![-1.0, 0.5]]],
            sender_functions: vec![SetFunction::Table(TableFn::new(vec![0.0, 0.0])); 2],
        })
        .unwrap();
        let layout = DualLayout::new(&inst);
        let p = OfflineDualPoint::zeros(&inst, &layout);
        assert_eq!(run_case(&inst, &k0(), &[1.0], &p, 0.0), SeparationResponse::Feasible);
    }

    #[test]
    fn tiny_offline_within_eps() {
        let inst = tiny_instance();
        let out = offline_solve(&inst, &k0(), &[1.0], 0.01, OracleKind::Exact).unwrap();
        assert!(out.value >= 0.74, "{out:?}");
        assert!(out.gamma_star >= 0.75 - 1e-6);
        assert!(is_persuasive(&inst, &out.scheme, 1e-6));
    }

    #[test]
    fn always_prefers_action_one() {
        let inst = Instance::new(InstanceData {
            receivers: vec![Receiver { types: vec!["a".into(), "b".into()] }, Receiver { types: vec!["c".into()] }],
            states: vec!["x".into(), "y".into()],
            prior: vec![0.3, 0.7],
            utility_diff: vec![vec![vec![0.2, 0.9], vec![0.0, 0.1]], vec![vec![0.5, 0.5]]],
            sender_functions: vec![
                SetFunction::ConcaveCardinality(ConcaveCardinalityFn::new(vec![0.0, 0.7, 0.9])),
                SetFunction::ConcaveCardinality(ConcaveCardinalityFn::new(vec![0.0, 0.4, 0.5])),
            ],
        })
        .unwrap();
        let k = vec![TypeProfile(vec![0, 0]), TypeProfile(vec![1, 0])];
        let lambda = [0.5, 0.5];
        let closed = 0.3 * 0.9 + 0.7 * 0.5;
        let exact = exact_offline_solve(&inst, &k, &lambda).unwrap();
        assert!((exact.value - closed).abs() < 1e-9);
        let out = offline_solve(&inst, &k, &lambda, 0.01, OracleKind::Exact).unwrap();
        assert!(out.value >= closed - 0.01);
    }

    #[test]
    fn zero_sender_gives_zero() {
        let inst = Instance::new(InstanceData {
            receivers: vec![Receiver { types: vec!["k".into()] }],
            states: vec!["a".into()],
            prior: vec![1.0],
            utility_diff: vec![vec![vec![-0.3]]],
            sender_functions: vec![SetFunction::Table(TableFn::new(vec![0.0, 0.0]))],
        })
        .unwrap();
        let out = offline_solve(&inst, &k0(), &[1.0], 0.01, OracleKind::Exact).unwrap();
        assert_eq!(out.value, 0.0);
    }
}

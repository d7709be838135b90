//! Full-enumeration baselines and the restricted recoveries they share.

use serde::{Deserialize, Serialize};

use super::restricted::{build, ProfileSet};
use super::{check_profiles, RewardVector};
use crate::convex_solver::{solve_lp, solve_qp_with, LpOutcome, QuadraticProgram, QP_MAX_ITERS};
use crate::error::{Error, Result};
use crate::model::{sender_utility, Instance, SignalingScheme, TypeProfile};

/// The full persuasion LP is only built below this many signal profiles.
pub const EXACT_PROFILE_LIMIT: u128 = 10_000;
/// QP tolerance for the exact projection.
const EXACT_QP_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OfflineSolution {
    pub scheme: SignalingScheme,
    /// `Σ_k λ_k f(φ, k)` evaluated on the returned scheme.
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactProjection {
    pub x: RewardVector,
    pub scheme: SignalingScheme,
    /// `‖x − y‖²`.
    pub value: f64,
}

fn guard(inst: &Instance) -> Result<()> {
    let total = inst.num_signal_profiles();
    if total > EXACT_PROFILE_LIMIT {
        return Err(Error::OracleScale { profiles: total, limit: EXACT_PROFILE_LIMIT });
    }
    Ok(())
}

/// Optimal persuasive scheme for `Σ_k λ_k f(φ, k)` over every profile.
pub fn exact_offline_solve(inst: &Instance, k: &[TypeProfile], lambda: &[f64]) -> Result<OfflineSolution> {
    guard(inst)?;
    restricted_offline(inst, k, lambda, &ProfileSet::all(inst))
}

/// Euclidean projection of `y` onto `X_K`, computed over every profile.
pub fn exact_projection(inst: &Instance, k: &[TypeProfile], y: &RewardVector) -> Result<ExactProjection> {
    guard(inst)?;
    restricted_projection(inst, k, y, &ProfileSet::all(inst), EXACT_QP_TOL)
}

pub(crate) fn restricted_offline(
    inst: &Instance,
    k: &[TypeProfile],
    lambda: &[f64],
    profiles: &ProfileSet,
) -> Result<OfflineSolution> {
    check_profiles(inst, k)?;
    if lambda.len() != k.len() || lambda.iter().any(|l| !(*l >= 0.0)) {
        return Err(Error::InvalidInput("λ must be non-negative, one per profile".into()));
    }
    let mut model = build(inst, k, profiles, false);
    model.set_offline_objective(inst, k, lambda);
    let sol = match solve_lp(&model.lp)? {
        LpOutcome::Optimal(s) => s,
        other => {
            return Err(Error::InvariantViolation(format!(
                "restricted LP over {} variables was {other:?}",
                model.vars.len()
            )))
        }
    };
    let scheme = model.scheme(inst, &sol.x);
    let value = k.iter().zip(lambda).map(|(kp, l)| l * sender_utility(inst, &scheme, kp)).sum();
    Ok(OfflineSolution { scheme, value })
}

pub(crate) fn restricted_projection(
    inst: &Instance,
    k: &[TypeProfile],
    y: &RewardVector,
    profiles: &ProfileSet,
    qp_tol: f64,
) -> Result<ExactProjection> {
    check_profiles(inst, k)?;
    let target: Vec<f64> = k.iter().map(|kp| y.get(kp)).collect();
    let model = build(inst, k, profiles, true);
    let coords: Vec<usize> = (0..k.len()).collect();
    let qp = QuadraticProgram::projection(model.lp.clone(), &coords, &target);
    let sol = solve_qp_with(&qp, qp_tol, QP_MAX_ITERS)?;
    let scheme = model.scheme(inst, &sol.x);
    // keep x realizable by the recovered scheme exactly
    let values: Vec<f64> = k
        .iter()
        .enumerate()
        .map(|(i, kp)| sol.x[i].clamp(0.0, sender_utility(inst, &scheme, kp)))
        .collect();
    let value = values.iter().zip(&target).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(ExactProjection { x: RewardVector::new(k.to_vec(), values)?, scheme, value })
}

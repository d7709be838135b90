//! Offline approximate solver, approximate projection oracle, and the exact
//! small-instance baselines they are checked against.

mod exact;
mod offline;
mod projection;
mod restricted;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{activated_set, Instance, SignalProfile, TypeProfile};

pub use exact::{exact_offline_solve, exact_projection, ExactProjection, OfflineSolution, EXACT_PROFILE_LIMIT};
pub use offline::{offline_sep_case_analysis, offline_solve, offline_solve_with, OfflineConfig, OfflineDualPoint, OfflineOutput};
pub use projection::{
    approx_projection, approx_projection_with, projection_sep_case_analysis, GammaSchedule, ProjectionConfig,
    ProjectionDualPoint, ProjectionOutput,
};
pub use restricted::ProfileSet;

/// A point of `[0, 2]^E`, read as zero outside its support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardVector {
    support: Vec<TypeProfile>,
    values: Vec<f64>,
}

impl RewardVector {
    pub fn new(support: Vec<TypeProfile>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::InvalidInput("support and values differ in length".into()));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(k) = support.iter().find(|k| !seen.insert(*k)) {
            return Err(Error::InvalidInput(format!("duplicate profile {:?} in support", k.0)));
        }
        Ok(RewardVector { support, values })
    }

    pub fn zeros(support: Vec<TypeProfile>) -> Self {
        let values = vec![0.0; support.len()];
        RewardVector { support, values }
    }

    pub fn support(&self) -> &[TypeProfile] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn get(&self, k: &TypeProfile) -> f64 {
        self.support.iter().position(|s| s == k).map_or(0.0, |i| self.values[i])
    }

    /// The same point viewed on `support`: coordinates outside `self`'s
    /// support read as 0, coordinates outside `support` are dropped.
    pub fn restrict_to(&self, support: &[TypeProfile]) -> Self {
        let index: HashMap<&TypeProfile, f64> = self.support.iter().zip(&self.values).map(|(k, &v)| (k, v)).collect();
        RewardVector {
            support: support.to_vec(),
            values: support.iter().map(|k| index.get(k).copied().unwrap_or(0.0)).collect(),
        }
    }

    /// `‖self − other‖²` over the union of supports.
    pub fn dist_sq(&self, other: &RewardVector) -> f64 {
        let mut total = 0.0;
        for (k, &v) in self.support.iter().zip(&self.values) {
            let d = v - other.get(k);
            total += d * d;
        }
        for (k, &v) in other.support.iter().zip(&other.values) {
            if !self.support.contains(k) {
                total += v * v;
            }
        }
        total
    }
}

/// Which dual constraint a cut came from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CutLabel {
    /// Dual constraint of primal variable `φ_θ(s)`.
    Profile { state: usize, profile: SignalProfile },
    /// The objective-level constraint.
    Objective,
    /// A box or sign constraint on one coordinate.
    Bound { coord: usize },
}

/// Indexing of the dual variables `z_{r,s,k}`, one per persuasiveness
/// constraint `(r, s, k)` with `k ∈ s`.
#[derive(Clone, Debug)]
pub struct DualLayout {
    pub constraints: Vec<(usize, u32, usize)>,
    /// `by_signal[r][s]` lists `(k, index into constraints)`.
    by_signal: Vec<Vec<Vec<(usize, usize)>>>,
}

impl DualLayout {
    pub fn new(inst: &Instance) -> Self {
        let mut constraints = Vec::new();
        let mut by_signal = Vec::new();
        for r in 0..inst.num_receivers() {
            let m = inst.num_types(r);
            let mut per_signal = vec![Vec::new(); 1 << m];
            for (s, slot) in per_signal.iter_mut().enumerate() {
                for k in (0..m).filter(|&k| s >> k & 1 == 1) {
                    slot.push((k, constraints.len()));
                    constraints.push((r, s as u32, k));
                }
            }
            by_signal.push(per_signal);
        }
        DualLayout { constraints, by_signal }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// `w^θ_{r,s} = μ_θ Σ_{k ∈ s} u^{r,k}_θ z_{r,s,k}`, indexed `[r][s]`.
    pub fn weights(&self, inst: &Instance, z: &[f64], state: usize) -> Vec<Vec<f64>> {
        let mu = inst.prior()[state];
        self.by_signal
            .iter()
            .enumerate()
            .map(|(r, per_signal)| {
                per_signal
                    .iter()
                    .map(|ks| ks.iter().map(|&(k, i)| mu * inst.utility_diff(r, k, state) * z[i]).sum())
                    .collect()
            })
            .collect()
    }

    /// Adds `∂w^θ_{r,s_r}/∂z` for every receiver into `normal[offset..]`.
    fn add_weight_gradient(&self, inst: &Instance, state: usize, s: &SignalProfile, normal: &mut [f64], offset: usize) {
        let mu = inst.prior()[state];
        for (r, &sig) in s.0.iter().enumerate() {
            for &(k, i) in &self.by_signal[r][sig as usize] {
                normal[offset + i] += mu * inst.utility_diff(r, k, state);
            }
        }
    }

    /// Box for `z`: large enough that any `w` the clamp could matter for is
    /// reachable, capped to keep the ellipsoid well conditioned.
    fn z_max(inst: &Instance, clamp: f64) -> f64 {
        let mut smallest = f64::INFINITY;
        for (t, &mu) in inst.prior().iter().enumerate() {
            for r in 0..inst.num_receivers() {
                for k in 0..inst.num_types(r) {
                    let u = inst.utility_diff(r, k, t).abs();
                    if u > 0.0 {
                        smallest = smallest.min(mu * u);
                    }
                }
            }
        }
        let floor = 4.0 * inst.num_receivers() as f64;
        if smallest.is_finite() {
            (clamp / smallest).clamp(floor, Z_MAX_CAP)
        } else {
            floor
        }
    }
}

/// Upper limit on the `z` box.
pub const Z_MAX_CAP: f64 = 1e4;

/// `Σ_k λ_k f_θ(R^k_s)`.
fn f_lambda(inst: &Instance, state: usize, profiles: &[TypeProfile], lambda: &[f64], s: &SignalProfile) -> f64 {
    profiles.iter().zip(lambda).map(|(k, &l)| l * inst.sender_value(state, activated_set(s, k))).sum()
}

/// `s` at receiver `r`, ∅ elsewhere.
fn extension(n: usize, r: usize, s: u32) -> SignalProfile {
    let mut p = SignalProfile::empty(n);
    p.0[r] = s;
    p
}

/// First `(r, s)` with `w[r][s] > limit`, in receiver then signal order.
fn first_weight_above(w: &[Vec<f64>], limit: f64) -> Option<(usize, u32)> {
    w.iter()
        .enumerate()
        .find_map(|(r, row)| row.iter().position(|&v| v > limit).map(|s| (r, s as u32)))
}

fn clamp_weights(w: &mut [Vec<f64>], floor: f64) {
    for row in w.iter_mut() {
        for v in row.iter_mut() {
            if *v < floor {
                *v = floor;
            }
        }
    }
}

fn check_profiles(inst: &Instance, k: &[TypeProfile]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for p in k {
        p.check(inst)?;
        if !seen.insert(p) {
            return Err(Error::InvalidInput(format!("duplicate type profile {:?}", p.0)));
        }
    }
    Ok(())
}

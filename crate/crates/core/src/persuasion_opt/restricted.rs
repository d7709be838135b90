//! The persuasion LP and the projection QP restricted to a set of `(θ, s)` variables.

use std::collections::BTreeSet;

use super::{f_lambda, CutLabel, DualLayout};
use crate::convex_solver::LinearProgram;
use crate::ellipsoid::Cut;
use crate::model::{activated_set, all_signal_profiles, Instance, SignalProfile, SignalingScheme, TypeProfile};

/// Probabilities below this are dropped from recovered schemes.
const PRUNE_TOL: f64 = 1e-12;

/// Per-state sets of signal profiles naming primal variables `φ_θ(s)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileSet {
    per_state: Vec<BTreeSet<SignalProfile>>,
}

impl ProfileSet {
    /// Only the always-∅ profile in every state, which keeps each per-state
    /// simplex satisfiable.
    pub fn with_empty(inst: &Instance) -> Self {
        let empty = SignalProfile::empty(inst.num_receivers());
        ProfileSet { per_state: vec![BTreeSet::from([empty]); inst.num_states()] }
    }

    pub fn all(inst: &Instance) -> Self {
        let all: BTreeSet<_> = all_signal_profiles(inst).into_iter().collect();
        ProfileSet { per_state: vec![all; inst.num_states()] }
    }

    pub fn insert(&mut self, state: usize, s: SignalProfile) -> bool {
        self.per_state[state].insert(s)
    }

    /// Adds the variables named by profile cuts. Returns how many were new.
    pub fn absorb<'a>(&mut self, cuts: impl IntoIterator<Item = &'a Cut<CutLabel>>) -> usize {
        let mut added = 0;
        for c in cuts {
            if let CutLabel::Profile { state, profile } = &c.label {
                added += usize::from(self.insert(*state, profile.clone()));
            }
        }
        added
    }

    pub fn len(&self) -> usize {
        self.per_state.iter().map(BTreeSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, state: usize, s: &SignalProfile) -> bool {
        self.per_state[state].contains(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &SignalProfile)> {
        self.per_state.iter().enumerate().flat_map(|(t, set)| set.iter().map(move |s| (t, s)))
    }
}

/// Variables `[x_k for k ∈ K]` (projection only) followed by `φ_θ(s)`.
pub(crate) struct RestrictedModel {
    pub lp: LinearProgram,
    pub vars: Vec<(usize, SignalProfile)>,
    pub num_x: usize,
}

/// Persuasiveness and per-state simplex constraints over `profiles`, plus
/// `x_k ≤ Σ_θ μ_θ Σ_s φ_θ(s) f_θ(R^k_s)` when `with_x`.
pub(crate) fn build(inst: &Instance, k: &[TypeProfile], profiles: &ProfileSet, with_x: bool) -> RestrictedModel {
    let vars: Vec<(usize, SignalProfile)> = profiles.iter().map(|(t, s)| (t, s.clone())).collect();
    let num_x = if with_x { k.len() } else { 0 };
    let n = num_x + vars.len();
    let mut lp = LinearProgram::new(n);
    let mu = inst.prior();

    for t in 0..inst.num_states() {
        let mut row = vec![0.0; n];
        for (j, (vt, _)) in vars.iter().enumerate() {
            if *vt == t {
                row[num_x + j] = 1.0;
            }
        }
        lp.add_eq(row, 1.0);
    }

    let layout = DualLayout::new(inst);
    for &(r, sig, kr) in &layout.constraints {
        let mut row = vec![0.0; n];
        let mut any = false;
        for (j, (t, s)) in vars.iter().enumerate() {
            if s.0[r] == sig {
                let c = mu[*t] * inst.utility_diff(r, kr, *t);
                if c != 0.0 {
                    row[num_x + j] = c;
                    any = true;
                }
            }
        }
        if any {
            lp.add_ge(row, 0.0);
        }
    }

    if with_x {
        for (i, kp) in k.iter().enumerate() {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            for (j, (t, s)) in vars.iter().enumerate() {
                row[num_x + j] = -mu[*t] * inst.sender_value(*t, activated_set(s, kp));
            }
            lp.add_le(row, 0.0);
        }
    }
    RestrictedModel { lp, vars, num_x }
}

impl RestrictedModel {
    /// Sets the LP objective to sender utility weighted by `λ`.
    pub fn set_offline_objective(&mut self, inst: &Instance, k: &[TypeProfile], lambda: &[f64]) {
        for (j, (t, s)) in self.vars.iter().enumerate() {
            self.lp.objective[self.num_x + j] = inst.prior()[*t] * f_lambda(inst, *t, k, lambda, s);
        }
    }

    /// Reads the `φ` part of a solution vector as a scheme.
    pub fn scheme(&self, inst: &Instance, sol: &[f64]) -> SignalingScheme {
        let mut phi = SignalingScheme::new(inst.num_states());
        for (j, (t, s)) in self.vars.iter().enumerate() {
            let p = sol[self.num_x + j];
            if p > PRUNE_TOL {
                phi.insert(*t, s.clone(), p);
            }
        }
        phi.pruned(PRUNE_TOL)
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::instance::Instance;
use super::set_function::ReceiverSet;
use crate::error::{Error, Result};

/// Persuasiveness tolerance on residuals.
pub const PERSUASION_TOL: f64 = 1e-7;
/// Per-state probability mass must be 1 within this.
pub const MASS_TOL: f64 = 1e-9;

/// One signal per receiver, each a bitmask over that receiver's types.
/// Ordered lexicographically, which fixes tie-breaking everywhere.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalProfile(pub Vec<u32>);

impl SignalProfile {
    pub fn empty(n: usize) -> Self {
        SignalProfile(vec![0; n])
    }

    pub fn full(inst: &Instance) -> Self {
        SignalProfile((0..inst.num_receivers()).map(|r| full_mask(inst.num_types(r))).collect())
    }

    pub fn signal(&self, r: usize) -> u32 {
        self.0[r]
    }

    pub fn check(&self, inst: &Instance) -> Result<()> {
        if self.0.len() != inst.num_receivers() {
            return Err(Error::InvalidInput(format!(
                "signal profile has {} entries for {} receivers",
                self.0.len(),
                inst.num_receivers()
            )));
        }
        for (r, &s) in self.0.iter().enumerate() {
            if s & !full_mask(inst.num_types(r)) != 0 {
                return Err(Error::InvalidInput(format!("signal {s:#b} too wide for receiver {r}")));
            }
        }
        Ok(())
    }
}

/// One realized type index per receiver.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TypeProfile(pub Vec<usize>);

impl TypeProfile {
    pub fn check(&self, inst: &Instance) -> Result<()> {
        if self.0.len() != inst.num_receivers() {
            return Err(Error::InvalidInput(format!(
                "type profile has {} entries for {} receivers",
                self.0.len(),
                inst.num_receivers()
            )));
        }
        for (r, &k) in self.0.iter().enumerate() {
            if k >= inst.num_types(r) {
                return Err(Error::InvalidInput(format!("type {k} out of range for receiver {r}")));
            }
        }
        Ok(())
    }
}

#[inline]
pub fn full_mask(m: usize) -> u32 {
    if m >= 32 {
        u32::MAX
    } else {
        (1u32 << m) - 1
    }
}

/// `R^k_s = {r : k_r ∈ s_r}`.
#[inline]
pub fn activated_set(s: &SignalProfile, k: &TypeProfile) -> ReceiverSet {
    let mut bits = 0u64;
    for (r, (&sig, &kr)) in s.0.iter().zip(&k.0).enumerate() {
        if sig >> kr & 1 == 1 {
            bits |= 1 << r;
        }
    }
    ReceiverSet(bits)
}

/// All signal profiles in ascending lexicographic order. Caller is responsible
/// for guarding the size.
pub fn all_signal_profiles(inst: &Instance) -> Vec<SignalProfile> {
    let radices: Vec<u64> = (0..inst.num_receivers()).map(|r| 1u64 << inst.num_types(r)).collect();
    odometer(&radices).map(|v| SignalProfile(v.into_iter().map(|x| x as u32).collect())).collect()
}

/// All type profiles in ascending lexicographic order.
pub fn all_type_profiles(inst: &Instance) -> Vec<TypeProfile> {
    let radices: Vec<u64> = (0..inst.num_receivers()).map(|r| inst.num_types(r) as u64).collect();
    odometer(&radices).map(|v| TypeProfile(v.into_iter().map(|x| x as usize).collect())).collect()
}

fn odometer(radices: &[u64]) -> impl Iterator<Item = Vec<u64>> + '_ {
    let mut cur = Some(vec![0u64; radices.len()]);
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let next = cur.as_mut().unwrap();
        let mut i = radices.len();
        loop {
            if i == 0 {
                cur = None;
                break;
            }
            i -= 1;
            next[i] += 1;
            if next[i] < radices[i] {
                break;
            }
            next[i] = 0;
        }
        Some(out)
    })
}

/// Per-state sparse distribution over signal profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "SchemeRepr", into = "SchemeRepr")]
pub struct SignalingScheme {
    states: Vec<BTreeMap<SignalProfile, f64>>,
}

#[derive(Serialize, Deserialize)]
struct SchemeEntry {
    signal: SignalProfile,
    prob: f64,
}

#[derive(Serialize, Deserialize)]
struct SchemeRepr {
    states: Vec<Vec<SchemeEntry>>,
}

impl From<SchemeRepr> for SignalingScheme {
    fn from(r: SchemeRepr) -> Self {
        let mut s = SignalingScheme::new(r.states.len());
        for (t, entries) in r.states.into_iter().enumerate() {
            for e in entries {
                s.insert(t, e.signal, e.prob);
            }
        }
        s
    }
}

impl From<SignalingScheme> for SchemeRepr {
    fn from(s: SignalingScheme) -> Self {
        SchemeRepr {
            states: s
                .states
                .into_iter()
                .map(|m| m.into_iter().map(|(signal, prob)| SchemeEntry { signal, prob }).collect())
                .collect(),
        }
    }
}

impl SignalingScheme {
    /// No support in any state; fill with [`SignalingScheme::insert`].
    pub fn new(num_states: usize) -> Self {
        SignalingScheme { states: vec![BTreeMap::new(); num_states] }
    }

    /// Sends the all-empty profile in every state. Vacuously persuasive.
    pub fn always_empty(inst: &Instance) -> Self {
        Self::constant(inst, SignalProfile::empty(inst.num_receivers()))
    }

    pub fn constant(inst: &Instance, s: SignalProfile) -> Self {
        let mut out = Self::new(inst.num_states());
        for t in 0..inst.num_states() {
            out.insert(t, s.clone(), 1.0);
        }
        out
    }

    /// Adds mass to `(state, profile)`, merging with any existing entry.
    pub fn insert(&mut self, state: usize, profile: SignalProfile, prob: f64) {
        *self.states[state].entry(profile).or_insert(0.0) += prob;
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn support(&self, state: usize) -> impl Iterator<Item = (&SignalProfile, f64)> {
        self.states[state].iter().map(|(s, &p)| (s, p))
    }

    pub fn support_size(&self, state: usize) -> usize {
        self.states[state].len()
    }

    pub fn mass(&self, state: usize) -> f64 {
        self.states[state].values().sum()
    }

    /// Drops entries with probability ≤ `tol` and renormalizes each state.
    pub fn pruned(&self, tol: f64) -> Self {
        let states = self
            .states
            .iter()
            .map(|m| {
                let kept: BTreeMap<_, _> = m.iter().filter(|(_, &p)| p > tol).map(|(s, &p)| (s.clone(), p)).collect();
                let total: f64 = kept.values().sum();
                if total > 0.0 {
                    kept.into_iter().map(|(s, p)| (s, p / total)).collect()
                } else {
                    kept
                }
            })
            .collect();
        SignalingScheme { states }
    }

    /// `β·self + (1−β)·other`.
    pub fn mix(&self, other: &SignalingScheme, beta: f64) -> Self {
        let mut out = SignalingScheme::new(self.num_states());
        for t in 0..self.num_states() {
            for (s, p) in self.support(t) {
                out.insert(t, s.clone(), beta * p);
            }
            for (s, p) in other.support(t) {
                out.insert(t, s.clone(), (1.0 - beta) * p);
            }
        }
        out
    }

    pub fn check(&self, inst: &Instance) -> Result<()> {
        if self.states.len() != inst.num_states() {
            return Err(Error::InvalidInput(format!(
                "scheme covers {} states, instance has {}",
                self.states.len(),
                inst.num_states()
            )));
        }
        for t in 0..self.states.len() {
            for (s, p) in self.support(t) {
                s.check(inst)?;
                if !(p >= 0.0) {
                    return Err(Error::InvalidInput(format!("negative probability {p} in state {t}")));
                }
            }
            let mass = self.mass(t);
            if (mass - 1.0).abs() > MASS_TOL {
                return Err(Error::InvalidInput(format!("state {t} has mass {mass}")));
            }
        }
        Ok(())
    }
}

/// `f(φ,k) = Σ_θ μ_θ Σ_s φ_θ(s) f_θ(R^k_s)`.
pub fn sender_utility(inst: &Instance, phi: &SignalingScheme, k: &TypeProfile) -> f64 {
    let mut total = 0.0;
    for (t, &mu) in inst.prior().iter().enumerate() {
        let mut inner = 0.0;
        for (s, p) in phi.support(t) {
            inner += p * inst.sender_value(t, activated_set(s, k));
        }
        total += mu * inner;
    }
    total
}

/// For each receiver `r`, signal `s` used by `φ`, and type `k ∈ s`:
/// `Σ_θ μ_θ Σ_{profiles with s_r = s} φ_θ(profile) u^{r,k}_θ`.
pub fn persuasiveness_residuals(inst: &Instance, phi: &SignalingScheme) -> BTreeMap<(usize, u32, usize), f64> {
    let mut out = BTreeMap::new();
    for (t, &mu) in inst.prior().iter().enumerate() {
        for (profile, p) in phi.support(t) {
            for (r, &sig) in profile.0.iter().enumerate() {
                let mut bits = sig;
                while bits != 0 {
                    let k = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    *out.entry((r, sig, k)).or_insert(0.0) += mu * p * inst.utility_diff(r, k, t);
                }
            }
        }
    }
    out
}

/// Smallest residual, or `0` when there are none.
pub fn min_residual(inst: &Instance, phi: &SignalingScheme) -> f64 {
    persuasiveness_residuals(inst, phi).into_values().fold(0.0, f64::min)
}

pub fn is_persuasive(inst: &Instance, phi: &SignalingScheme, tol: f64) -> bool {
    min_residual(inst, phi) >= -tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::instance::tiny_instance;

    fn tiny_scheme() -> SignalingScheme {
        let mut phi = SignalingScheme::new(2);
        phi.insert(1, SignalProfile(vec![1]), 1.0);
        phi.insert(0, SignalProfile(vec![1]), 0.5);
        phi.insert(0, SignalProfile(vec![0]), 0.5);
        phi
    }

    #[test]
    fn activated_set_examples() {
        let k = TypeProfile(vec![0, 0]);
        assert_eq!(activated_set(&SignalProfile(vec![1, 0]), &k), ReceiverSet(0b01));
        assert_eq!(activated_set(&SignalProfile(vec![0, 0]), &k), ReceiverSet::EMPTY);
        assert_eq!(activated_set(&SignalProfile(vec![3, 1]), &TypeProfile(vec![1, 0])), ReceiverSet(0b11));
    }

    #[test]
    fn tiny_sender_utility() {
        let inst = tiny_instance();
        let k = TypeProfile(vec![0]);
        assert!((sender_utility(&inst, &tiny_scheme(), &k) - 0.75).abs() < 1e-15);
        assert_eq!(sender_utility(&inst, &SignalingScheme::always_empty(&inst), &k), 0.0);
        let full = SignalingScheme::constant(&inst, SignalProfile::full(&inst));
        assert_eq!(sender_utility(&inst, &full, &k), 1.0);
    }

    #[test]
    fn tiny_residuals() {
        let inst = tiny_instance();
        let res = persuasiveness_residuals(&inst, &tiny_scheme());
        assert_eq!(res.len(), 1);
        assert!(res[&(0, 1, 0)].abs() < 1e-15);
        assert!(persuasiveness_residuals(&inst, &SignalingScheme::always_empty(&inst)).is_empty());

        let full = SignalingScheme::constant(&inst, SignalProfile(vec![1]));
        let res = persuasiveness_residuals(&inst, &full);
        assert!((res[&(0, 1, 0)] + 0.5).abs() < 1e-15);
        assert!(!is_persuasive(&inst, &full, PERSUASION_TOL));
    }

    #[test]
    fn insert_merges_duplicates() {
        let mut phi = SignalingScheme::new(1);
        phi.insert(0, SignalProfile(vec![1]), 0.25);
        phi.insert(0, SignalProfile(vec![1]), 0.75);
        assert_eq!(phi.support_size(0), 1);
        assert_eq!(phi.mass(0), 1.0);
    }

    #[test]
    fn profile_enumeration_is_lexicographic() {
        let inst = tiny_instance();
        let all = all_signal_profiles(&inst);
        assert_eq!(all, vec![SignalProfile(vec![0]), SignalProfile(vec![1])]);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
    }

    #[test]
    fn scheme_json_roundtrip() {
        let phi = tiny_scheme();
        let text = serde_json::to_string(&phi).unwrap();
        let back: SignalingScheme = serde_json::from_str(&text).unwrap();
        assert_eq!(back, phi);
        back.check(&tiny_instance()).unwrap();
    }
}

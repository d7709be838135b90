//! Separation oracles over the partition matroid of (receiver, signal) pairs.
//!
//! A basis picks exactly one signal per receiver, so bases are signal
//! profiles. The oracles maximize `Σ_k λ_k f_θ(R^k_s) + Σ_r w_{r,s_r}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{activated_set, Instance, ReceiverSet, SignalProfile, TypeProfile};

/// Brute force refuses instances with more signal profiles than this.
pub const EXACT_PROFILE_LIMIT: u128 = 1_000_000;
/// Slack in the submodularity check.
pub const SUBMODULAR_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundElement {
    pub receiver: usize,
    pub signal: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Exact,
    Greedy,
}

impl OracleKind {
    /// Approximation factor the oracle is run under.
    pub fn alpha(self) -> f64 {
        match self {
            OracleKind::Exact => 1.0,
            OracleKind::Greedy => 1.0 - (-1.0f64).exp(),
        }
    }

    pub fn separate(self, inst: &Instance, q: &SepQuery<'_>) -> Result<SepResult> {
        match self {
            OracleKind::Exact => exact_sep_oracle(inst, q),
            OracleKind::Greedy => greedy_sep_oracle(inst, q),
        }
    }
}

impl std::str::FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(OracleKind::Exact),
            "greedy" => Ok(OracleKind::Greedy),
            _ => Err(Error::InvalidInput(format!("unknown oracle {s:?}"))),
        }
    }
}

/// Oracle input for one state.
///
/// `weights[r][s]` is indexed by the signal bitmask and must have
/// `weights[r][0] == 0`.
#[derive(Clone, Debug)]
pub struct SepQuery<'a> {
    pub state: usize,
    pub profiles: &'a [TypeProfile],
    pub lambda: &'a [f64],
    pub weights: &'a [Vec<f64>],
    pub eps: f64,
}

impl SepQuery<'_> {
    pub fn check(&self, inst: &Instance) -> Result<()> {
        if self.profiles.len() != self.lambda.len() {
            return Err(Error::InvalidInput("λ and K differ in length".into()));
        }
        if let Some(l) = self.lambda.iter().find(|&&l| !(l >= 0.0)) {
            return Err(Error::InvalidInput(format!("negative λ {l}")));
        }
        if self.weights.len() != inst.num_receivers() {
            return Err(Error::InvalidInput("one weight row per receiver required".into()));
        }
        for (r, w) in self.weights.iter().enumerate() {
            if w.len() != 1 << inst.num_types(r) {
                return Err(Error::InvalidInput(format!("receiver {r} weight row has wrong length")));
            }
            if w[0] != 0.0 {
                return Err(Error::InvalidInput(format!("w[{r}][∅] = {} ≠ 0", w[0])));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SepResult {
    pub profile: SignalProfile,
    pub value: f64,
    pub kind: OracleKind,
}

/// `f^λ_θ(s) = Σ_k λ_k f_θ(R^k_s)`.
pub fn f_part(inst: &Instance, q: &SepQuery<'_>, s: &SignalProfile) -> f64 {
    q.profiles
        .iter()
        .zip(q.lambda)
        .map(|(k, &l)| if l == 0.0 { 0.0 } else { l * inst.sender_value(q.state, activated_set(s, k)) })
        .sum()
}

/// `ℓ^w(s) = Σ_r w_{r,s_r}`.
pub fn linear_part(q: &SepQuery<'_>, s: &SignalProfile) -> f64 {
    s.0.iter().enumerate().map(|(r, &sig)| q.weights[r][sig as usize]).sum()
}

fn profile_value(inst: &Instance, q: &SepQuery<'_>, s: &SignalProfile) -> f64 {
    f_part(inst, q, s) + linear_part(q, s)
}

/// Value of an independent set; receivers without an element count as ∅.
pub fn composite_value(inst: &Instance, q: &SepQuery<'_>, set: &[GroundElement]) -> Result<f64> {
    let mut s = SignalProfile::empty(inst.num_receivers());
    let mut seen = vec![false; inst.num_receivers()];
    for e in set {
        if std::mem::replace(&mut seen[e.receiver], true) {
            return Err(Error::IndependenceViolation { receiver: e.receiver });
        }
        s.0[e.receiver] = e.signal;
    }
    Ok(profile_value(inst, q, &s))
}

/// Brute force over every basis. Ties go to the lexicographically smallest
/// profile.
pub fn exact_sep_oracle(inst: &Instance, q: &SepQuery<'_>) -> Result<SepResult> {
    let total = inst.num_signal_profiles();
    if total > EXACT_PROFILE_LIMIT {
        return Err(Error::OracleScale { profiles: total, limit: EXACT_PROFILE_LIMIT });
    }
    q.check(inst)?;
    let n = inst.num_receivers();
    let radix: Vec<u32> = (0..n).map(|r| 1u32 << inst.num_types(r)).collect();
    let mut s = SignalProfile::empty(n);
    let mut best = (profile_value(inst, q, &s), s.clone());
    'outer: loop {
        let mut i = n;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            s.0[i] += 1;
            if s.0[i] < radix[i] {
                break;
            }
            s.0[i] = 0;
        }
        let v = profile_value(inst, q, &s);
        if v > best.0 {
            best = (v, s.clone());
        }
    }
    Ok(SepResult { profile: best.1, value: best.0, kind: OracleKind::Exact })
}

/// Distorted greedy: at step `t` the candidate `(r, s)` scores
/// `(1 − 1/n)^{n−1−t} · Δf^λ + w_{r,s}`; the best unassigned receiver takes
/// its best signal. Ties go to the lowest receiver, then the lowest signal.
/// The better of this and the undistorted pass is then improved by
/// single-receiver swaps until none helps.
pub fn greedy_sep_oracle(inst: &Instance, q: &SepQuery<'_>) -> Result<SepResult> {
    q.check(inst)?;
    let distorted = greedy_pass(inst, q, true);
    let plain = greedy_pass(inst, q, false);
    let (a, b) = (profile_value(inst, q, &distorted), profile_value(inst, q, &plain));
    let start = if b > a { plain } else { distorted };
    let s = local_search(inst, q, start);
    let value = profile_value(inst, q, &s);
    Ok(SepResult { profile: s, value, kind: OracleKind::Greedy })
}

fn greedy_pass(inst: &Instance, q: &SepQuery<'_>, distort: bool) -> SignalProfile {
    let n = inst.num_receivers();
    let mut s = SignalProfile::empty(n);
    let mut assigned = vec![false; n];
    let mut current = f_part(inst, q, &s);
    let shrink = 1.0 - 1.0 / n as f64;
    for t in 0..n {
        let discount = if distort { shrink.powi((n - 1 - t) as i32) } else { 1.0 };
        let mut best: Option<(f64, usize, u32, f64)> = None;
        for r in (0..n).filter(|&r| !assigned[r]) {
            for sig in 0..1u32 << inst.num_types(r) {
                s.0[r] = sig;
                let f = f_part(inst, q, &s);
                let score = discount * (f - current) + q.weights[r][sig as usize];
                if best.is_none_or(|b| score > b.0) {
                    best = Some((score, r, sig, f));
                }
            }
            s.0[r] = 0;
        }
        let (_, r, sig, f) = best.expect("an unassigned receiver remains");
        s.0[r] = sig;
        assigned[r] = true;
        current = f;
    }
    s
}

/// Best-improvement swaps of one receiver's signal.
fn local_search(inst: &Instance, q: &SepQuery<'_>, mut s: SignalProfile) -> SignalProfile {
    const GAIN_TOL: f64 = 1e-12;
    let mut value = profile_value(inst, q, &s);
    loop {
        let mut best: Option<(f64, usize, u32)> = None;
        for r in 0..inst.num_receivers() {
            let keep = s.0[r];
            for sig in (0..1u32 << inst.num_types(r)).filter(|&x| x != keep) {
                s.0[r] = sig;
                let v = profile_value(inst, q, &s);
                if v > value + GAIN_TOL && best.is_none_or(|b| v > b.0) {
                    best = Some((v, r, sig));
                }
            }
            s.0[r] = keep;
        }
        match best {
            Some((v, r, sig)) => {
                s.0[r] = sig;
                value = v;
            }
            None => return s,
        }
    }
}

/// Every ground element in ascending order.
pub fn ground_set(inst: &Instance) -> Vec<GroundElement> {
    (0..inst.num_receivers())
        .flat_map(|r| (0..1u32 << inst.num_types(r)).map(move |signal| GroundElement { receiver: r, signal }))
        .collect()
}

/// `f^λ_θ` on an arbitrary subset of the ground set, where receiver `r` is
/// active for `k` if some chosen `(r, s)` has `k_r ∈ s`.
pub fn f_lambda_of_set(inst: &Instance, q: &SepQuery<'_>, set: &[GroundElement]) -> f64 {
    let mut total = 0.0;
    for (k, &l) in q.profiles.iter().zip(q.lambda) {
        let mut active = ReceiverSet::EMPTY;
        for e in set {
            if e.signal >> k.0[e.receiver] & 1 == 1 {
                active = active.with(e.receiver);
            }
        }
        total += l * inst.sender_value(q.state, active);
    }
    total
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubmodularCounterexample {
    pub small: Vec<GroundElement>,
    pub large: Vec<GroundElement>,
    pub element: GroundElement,
    pub marginal_small: f64,
    pub marginal_large: f64,
}

/// Samples `I ⊆ I′ ⊆ G` and `e ∉ I′` and checks `Δ(e | I) ≥ Δ(e | I′)`.
/// Returns the first counterexample.
pub fn check_submodular_composite(
    inst: &Instance,
    q: &SepQuery<'_>,
    trials: usize,
    seed: u64,
) -> std::result::Result<(), SubmodularCounterexample> {
    let ground = ground_set(inst);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..trials {
        let p_large = rng.gen_range(0.0..1.0);
        let p_small = rng.gen_range(0.0..1.0);
        let mut large = Vec::new();
        let mut small = Vec::new();
        let mut outside = Vec::new();
        for &e in &ground {
            if rng.gen_bool(p_large) {
                large.push(e);
                if rng.gen_bool(p_small) {
                    small.push(e);
                }
            } else {
                outside.push(e);
            }
        }
        let Some(&element) = outside.get(rng.gen_range(0..outside.len().max(1))) else {
            continue;
        };
        if let Some(c) = marginal_check(inst, q, &small, &large, element) {
            return Err(c);
        }
    }
    Ok(())
}

fn marginal_check(
    inst: &Instance,
    q: &SepQuery<'_>,
    small: &[GroundElement],
    large: &[GroundElement],
    element: GroundElement,
) -> Option<SubmodularCounterexample> {
    let gain = |base: &[GroundElement]| {
        let mut with = base.to_vec();
        with.push(element);
        f_lambda_of_set(inst, q, &with) - f_lambda_of_set(inst, q, base)
    };
    let (ms, ml) = (gain(small), gain(large));
    (ms < ml - SUBMODULAR_TOL).then(|| SubmodularCounterexample {
        small: small.to_vec(),
        large: large.to_vec(),
        element,
        marginal_small: ms,
        marginal_large: ml,
    })
}

/// Exhaustive version of [`check_submodular_composite`] over all
/// `I ⊆ I′` and `e ∉ I′`; only viable for tiny ground sets.
pub fn check_submodular_composite_exhaustive(
    inst: &Instance,
    q: &SepQuery<'_>,
) -> std::result::Result<(), SubmodularCounterexample> {
    let ground = ground_set(inst);
    assert!(ground.len() <= 12, "exhaustive check needs a tiny ground set");
    let pick = |mask: u32| -> Vec<GroundElement> {
        ground.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e).collect()
    };
    let all = 1u32 << ground.len();
    for large_mask in 0..all {
        let large = pick(large_mask);
        let mut sub = large_mask;
        loop {
            let small = pick(sub);
            for (i, &e) in ground.iter().enumerate() {
                if large_mask >> i & 1 == 0 {
                    if let Some(c) = marginal_check(inst, q, &small, &large, e) {
                        return Err(c);
                    }
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & large_mask;
        }
    }
    Ok(())
}

/// Zero weights shaped for `inst`.
pub fn zero_weights(inst: &Instance) -> Vec<Vec<f64>> {
    (0..inst.num_receivers()).map(|r| vec![0.0; 1 << inst.num_types(r)]).collect()
}

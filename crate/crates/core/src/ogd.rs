//! Online gradient descent over reward vectors with an approximate
//! projection step, and α-regret accounting.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matroid_sep::OracleKind;
use crate::model::{sender_utility, Instance, SignalingScheme, TypeProfile};
use crate::persuasion_opt::{approx_projection_with, exact_offline_solve, ProjectionConfig, RewardVector};

/// Full-information feedback: the realized type profile.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback(pub TypeProfile);

#[derive(Clone, Debug)]
pub struct OgdConfig {
    pub eta: f64,
    pub eps: f64,
    pub oracle: OracleKind,
    pub projection: ProjectionConfig,
}

impl OgdConfig {
    /// `η = 1/√T`, `ε = 1/T`.
    pub fn for_horizon(t: usize, oracle: OracleKind) -> Self {
        let t = t.max(1) as f64;
        OgdConfig { eta: 1.0 / t.sqrt(), eps: 1.0 / t, oracle, projection: ProjectionConfig::default() }
    }

    fn check(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(Error::InvalidInput(format!("η = {} not in (0, 1]", self.eta)));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(Error::InvalidInput(format!("ε = {} not in (0, 1]", self.eps)));
        }
        Ok(())
    }
}

/// One iteration of the learner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub profile: TypeProfile,
    /// Index of `profile` in the observed set, in order of first appearance.
    pub profile_id: usize,
    /// `f(φ^t, k^t)` for the scheme played this round.
    pub utility: f64,
    pub distinct_profiles: usize,
    pub proj_ms: f64,
    /// Gradient point `y^{t+1}` on the observed set.
    pub y: RewardVector,
    /// Projected point `x^{t+1}`.
    pub x: RewardVector,
}

#[derive(Clone, Debug)]
pub struct OgdState {
    t: usize,
    observed: Vec<TypeProfile>,
    x: RewardVector,
    scheme: SignalingScheme,
    cfg: OgdConfig,
}

impl OgdState {
    /// `x¹ = 0` on the empty set, playing always-∅.
    pub fn new(inst: &Instance, cfg: OgdConfig) -> Result<Self> {
        cfg.check()?;
        Ok(OgdState {
            t: 1,
            observed: Vec::new(),
            x: RewardVector::zeros(Vec::new()),
            scheme: SignalingScheme::always_empty(inst),
            cfg,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn observed(&self) -> &[TypeProfile] {
        &self.observed
    }

    pub fn x(&self) -> &RewardVector {
        &self.x
    }

    pub fn scheme(&self) -> &SignalingScheme {
        &self.scheme
    }

    pub fn alpha(&self) -> f64 {
        self.cfg.oracle.alpha()
    }

    /// Plays `φ^t`, observes `k^t`, and moves to `x^{t+1}, φ^{t+1}`.
    pub fn step(&mut self, inst: &Instance, feedback: &Feedback) -> Result<StepRecord> {
        let k = &feedback.0;
        k.check(inst)?;
        let utility = sender_utility(inst, &self.scheme, k);
        let profile_id = match self.observed.iter().position(|p| p == k) {
            Some(i) => i,
            None => {
                self.observed.push(k.clone());
                self.observed.len() - 1
            }
        };
        let base = self.x.restrict_to(&self.observed);
        let mut values = base.values().to_vec();
        values[profile_id] += self.cfg.eta;
        let y = RewardVector::new(self.observed.clone(), values)?;

        let start = Instant::now();
        let out = approx_projection_with(inst, &self.observed, &y, self.cfg.eps, self.cfg.oracle, &self.cfg.projection)?;
        let proj_ms = start.elapsed().as_secs_f64() * 1e3;

        let record = StepRecord {
            t: self.t,
            profile: k.clone(),
            profile_id,
            utility,
            distinct_profiles: self.observed.len(),
            proj_ms,
            y,
            x: out.x.clone(),
        };
        self.x = out.x;
        self.scheme = out.scheme;
        self.t += 1;
        Ok(record)
    }
}

/// Runs the learner over a whole feedback sequence.
pub fn run(inst: &Instance, feedback: &[Feedback], cfg: OgdConfig) -> Result<(OgdState, Vec<StepRecord>)> {
    let mut state = OgdState::new(inst, cfg)?;
    let mut records = Vec::with_capacity(feedback.len());
    for f in feedback {
        records.push(state.step(inst, f)?);
    }
    Ok((state, records))
}

/// `max_φ Σ_t f(φ, k^t)`, unnormalized.
pub fn best_in_hindsight(inst: &Instance, sequence: &[TypeProfile]) -> Result<(SignalingScheme, f64)> {
    let mut counts: BTreeMap<&TypeProfile, f64> = BTreeMap::new();
    for k in sequence {
        *counts.entry(k).or_default() += 1.0;
    }
    if counts.is_empty() {
        return Ok((SignalingScheme::always_empty(inst), 0.0));
    }
    let k: Vec<TypeProfile> = counts.keys().map(|k| (*k).clone()).collect();
    let lambda: Vec<f64> = counts.values().copied().collect();
    let sol = exact_offline_solve(inst, &k, &lambda)?;
    Ok((sol.scheme, sol.value))
}

/// `α · max_φ Σ_t f(φ, k^t) − Σ_t f(φ^t, k^t)`.
pub fn alpha_regret(inst: &Instance, records: &[StepRecord], alpha: f64) -> Result<f64> {
    let seq: Vec<TypeProfile> = records.iter().map(|r| r.profile.clone()).collect();
    let (_, best) = best_in_hindsight(inst, &seq)?;
    Ok(alpha * best - records.iter().map(|r| r.utility).sum::<f64>())
}

/// `|E|/(2η) + ηT/2 + εT/(2η)`.
pub fn regret_bound(distinct: usize, t: usize, eta: f64, eps: f64) -> f64 {
    let t = t as f64;
    distinct as f64 / (2.0 * eta) + eta * t / 2.0 + eps * t / (2.0 * eta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tiny_instance;

    fn k0() -> TypeProfile {
        TypeProfile(vec![0])
    }

    fn cfg(eta: f64, eps: f64) -> OgdConfig {
        OgdConfig { eta, eps, oracle: OracleKind::Exact, projection: ProjectionConfig::default() }
    }

    #[test]
    fn first_gradient_step() {
        let inst = tiny_instance();
        let mut s = OgdState::new(&inst, cfg(0.1, 1e-3)).unwrap();
        let rec = s.step(&inst, &Feedback(k0())).unwrap();
        assert_eq!(rec.y.values(), &[0.1]);
        assert_eq!(rec.utility, 0.0);
        assert_eq!(s.t(), 2);
    }

    #[test]
    fn constant_feedback_climbs_to_opt() {
        let inst = tiny_instance();
        let fb = vec![Feedback(k0()); 30];
        let (state, records) = run(&inst, &fb, cfg(0.1, 1e-3)).unwrap();
        assert_eq!(state.observed().len(), 1);
        let mut prev = 0.0;
        for r in &records {
            let x = r.x.values()[0];
            assert!(x >= prev - 1e-3, "{x} after {prev}");
            assert!(x <= 0.75 + 1e-3);
            prev = x;
        }
        assert!(prev > 0.7);
    }

    #[test]
    fn hindsight_scales_with_length() {
        let inst = tiny_instance();
        let (_, v) = best_in_hindsight(&inst, &vec![k0(); 40]).unwrap();
        assert!((v - 30.0).abs() < 1e-8);
        assert_eq!(best_in_hindsight(&inst, &[]).unwrap().1, 0.0);
    }

    #[test]
    fn always_empty_learner_regret_is_hindsight() {
        let inst = tiny_instance();
        let records: Vec<StepRecord> = (1..=5)
            .map(|t| StepRecord {
                t,
                profile: k0(),
                profile_id: 0,
                utility: 0.0,
                distinct_profiles: 1,
                proj_ms: 0.0,
                y: RewardVector::zeros(vec![k0()]),
                x: RewardVector::zeros(vec![k0()]),
            })
            .collect();
        assert!((alpha_regret(&inst, &records, 1.0).unwrap() - 3.75).abs() < 1e-8);
    }

    #[test]
    fn tiny_regret_within_bound() {
        let inst = tiny_instance();
        let fb = vec![Feedback(k0()); 100];
        let (_, records) = run(&inst, &fb, cfg(0.1, 0.01)).unwrap();
        let regret = alpha_regret(&inst, &records, 1.0).unwrap();
        assert!(regret <= regret_bound(1, 100, 0.1, 0.01));
        assert!((regret_bound(1, 100, 0.1, 0.01) - 15.0).abs() < 1e-12);
    }
}

use rand::Rng;

use crate::error::Result;
use crate::model::{all_type_profiles, sender_utility, Instance, SignalingScheme, TypeProfile};
use crate::persuasion_opt::{exact_offline_solve, RewardVector};

/// Draws points of `αX`: mixtures of reward vectors of LP-optimal persuasive
/// schemes, some shrunk coordinate-wise, then scaled by `α`.
#[derive(Clone, Debug)]
pub struct RewardSampler {
    profiles: Vec<TypeProfile>,
    /// Reward vectors over `profiles`, one per pooled scheme.
    vertices: Vec<Vec<f64>>,
}

impl RewardSampler {
    /// Pools the maximizers of `pool` random (often sparse) directions plus
    /// every coordinate direction.
    pub fn new(inst: &Instance, pool: usize, rng: &mut impl Rng) -> Result<Self> {
        let profiles = all_type_profiles(inst);
        let mut s = RewardSampler { profiles, vertices: Vec::new() };
        let p = s.profiles.len();
        for i in 0..p {
            let mut l = vec![0.0; p];
            l[i] = 1.0;
            s.add_direction(inst, &l)?;
        }
        for _ in 0..pool {
            let keep = rng.gen_range(0.2..1.0);
            let mut l: Vec<f64> = (0..p).map(|_| if rng.gen_bool(keep) { rng.gen_range(0.0..1.0) } else { 0.0 }).collect();
            if l.iter().all(|&v| v == 0.0) {
                l[rng.gen_range(0..p)] = 1.0;
            }
            s.add_direction(inst, &l)?;
        }
        Ok(s)
    }

    pub fn profiles(&self) -> &[TypeProfile] {
        &self.profiles
    }

    fn add_direction(&mut self, inst: &Instance, lambda: &[f64]) -> Result<()> {
        let sol = exact_offline_solve(inst, &self.profiles, lambda)?;
        self.vertices.push(self.rewards(inst, &sol.scheme));
        Ok(())
    }

    fn rewards(&self, inst: &Instance, phi: &SignalingScheme) -> Vec<f64> {
        self.profiles.iter().map(|k| sender_utility(inst, phi, k)).collect()
    }

    /// `argmax_{x ∈ αX} ⟨x, g⟩` on `support`.
    pub fn maximizer(inst: &Instance, support: &[TypeProfile], g: &[f64], alpha: f64) -> Result<RewardVector> {
        let plus: Vec<f64> = g.iter().map(|v| v.max(0.0)).collect();
        let sol = exact_offline_solve(inst, support, &plus)?;
        let values = support
            .iter()
            .zip(&plus)
            .map(|(k, &w)| if w > 0.0 { alpha * sender_utility(inst, &sol.scheme, k) } else { 0.0 })
            .collect();
        RewardVector::new(support.to_vec(), values)
    }

    pub fn sample(&self, support: &[TypeProfile], alpha: f64, rng: &mut impl Rng) -> RewardVector {
        let p = self.profiles.len();
        let mut x = vec![0.0; p];
        let parts = rng.gen_range(1..=3usize);
        let mut weights: Vec<f64> = (0..parts).map(|_| rng.gen_range(0.0..1.0f64).max(1e-3)).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        for w in weights {
            let v = &self.vertices[rng.gen_range(0..self.vertices.len())];
            x.iter_mut().zip(v).for_each(|(a, b)| *a += w * b);
        }
        if rng.gen_bool(0.3) {
            for v in x.iter_mut() {
                if rng.gen_bool(0.5) {
                    *v *= rng.gen_range(0.0..1.0);
                }
            }
        }
        let full = RewardVector::new(self.profiles.clone(), x.iter().map(|v| alpha * v).collect())
            .expect("profiles are distinct");
        full.restrict_to(support)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::tiny_instance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_stay_in_scaled_set() {
        let inst = tiny_instance();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = RewardSampler::new(&inst, 5, &mut rng).unwrap();
        for _ in 0..100 {
            let x = s.sample(s.profiles(), 0.5, &mut rng);
            assert!(x.values()[0] <= 0.375 + 1e-12 && x.values()[0] >= 0.0);
        }
        let m = RewardSampler::maximizer(&inst, s.profiles(), &[1.0], 1.0).unwrap();
        assert!((m.values()[0] - 0.75).abs() < 1e-9);
    }
}

//! Fixtures shared by the benchmarks.

use persuade_core::harness::{generate_instance, Family, InstanceSpec};
use persuade_core::model::{all_type_profiles, tiny_instance, Instance, TypeProfile};
use persuade_core::persuasion_opt::RewardVector;

pub struct Fixture {
    pub name: &'static str,
    pub inst: Instance,
    pub profiles: Vec<TypeProfile>,
    pub y: RewardVector,
    pub weights: Vec<Vec<f64>>,
}

fn fixture(name: &'static str, inst: Instance) -> Fixture {
    let profiles = all_type_profiles(&inst);
    let values = (0..profiles.len()).map(|i| 0.2 + 0.3 * (i % 4) as f64).collect();
    let y = RewardVector::new(profiles.clone(), values).expect("fixture reward vector");
    let weights = (0..inst.num_receivers())
        .map(|r| (0..1usize << inst.num_types(r)).map(|s| if s == 0 { 0.0 } else { -0.1 * s as f64 }).collect())
        .collect();
    Fixture { name, inst, profiles, y, weights }
}

pub fn tiny() -> Fixture {
    fixture("tiny", tiny_instance())
}

/// Three receivers, two types, two states.
pub fn coverage() -> Fixture {
    let spec = InstanceSpec { family: Family::Coverage, n: 3, m: 2, d: 2 };
    fixture("coverage_3x2x2", generate_instance(&spec, 11).expect("fixture instance"))
}

pub fn all() -> Vec<Fixture> {
    vec![tiny(), coverage()]
}

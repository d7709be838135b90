use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Instance, TypeProfile};

/// Where the feedback sequence comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversarySpec {
    Constant { profile: TypeProfile },
    Cycle { profiles: Vec<TypeProfile> },
    /// Uniform draws from `profiles`, seeded by the experiment seed.
    Random { profiles: Vec<TypeProfile> },
}

impl AdversarySpec {
    fn profiles(&self) -> &[TypeProfile] {
        match self {
            AdversarySpec::Constant { profile } => std::slice::from_ref(profile),
            AdversarySpec::Cycle { profiles } | AdversarySpec::Random { profiles } => profiles,
        }
    }

    pub fn check(&self, inst: &Instance) -> Result<()> {
        if self.profiles().is_empty() {
            return Err(Error::InvalidInput("adversary lists no profiles".into()));
        }
        self.profiles().iter().try_for_each(|k| k.check(inst))
    }

    pub fn sequence(&self, inst: &Instance, t: usize, seed: u64) -> Result<Vec<TypeProfile>> {
        self.check(inst)?;
        Ok(match self {
            AdversarySpec::Constant { profile } => vec![profile.clone(); t],
            AdversarySpec::Cycle { profiles } => profiles.iter().cycle().take(t).cloned().collect(),
            AdversarySpec::Random { profiles } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..t).map(|_| profiles[rng.gen_range(0..profiles.len())].clone()).collect()
            }
        })
    }
}

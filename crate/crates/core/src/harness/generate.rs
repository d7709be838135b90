use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ConcaveCardinalityFn, CoverageFn, Instance, InstanceData, Receiver, ReceiverSet, SetFunction, TableFn,
    MAX_RECEIVERS, MAX_TYPES, TABLE_MAX_RECEIVERS,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Coverage,
    ConcaveCardinality,
    Table,
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coverage" => Ok(Family::Coverage),
            "concave_cardinality" => Ok(Family::ConcaveCardinality),
            "table" => Ok(Family::Table),
            _ => Err(Error::InvalidInput(format!("unknown family {s:?}"))),
        }
    }
}

/// `n` receivers with `m` types each and `d` states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub family: Family,
    pub n: usize,
    pub m: usize,
    pub d: usize,
}

impl InstanceSpec {
    fn check(&self) -> Result<()> {
        let bad = |what: String| Err(Error::InvalidInput(what));
        if self.n == 0 || self.m == 0 || self.d == 0 {
            return bad(format!("sizes must be positive, got n={} m={} d={}", self.n, self.m, self.d));
        }
        if self.n > MAX_RECEIVERS {
            return bad(format!("n = {} exceeds {MAX_RECEIVERS}", self.n));
        }
        if self.m > MAX_TYPES {
            return bad(format!("m = {} exceeds {MAX_TYPES}", self.m));
        }
        if self.family == Family::Table && self.n > TABLE_MAX_RECEIVERS {
            return bad(format!("table family needs n ≤ {TABLE_MAX_RECEIVERS}"));
        }
        Ok(())
    }
}

fn random_coverage(rng: &mut ChaCha8Rng, n: usize) -> CoverageFn {
    let universe = (2 * n).max(2);
    let covers = (0..n)
        .map(|_| {
            let mut cover: Vec<usize> = (0..universe).filter(|_| rng.gen_bool(0.4)).collect();
            if cover.is_empty() {
                cover.push(rng.gen_range(0..universe));
            }
            cover
        })
        .collect();
    let raw: Vec<f64> = (0..universe).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    CoverageFn::new(universe, covers, raw.iter().map(|w| w / total).collect())
}

fn random_concave(rng: &mut ChaCha8Rng, n: usize) -> ConcaveCardinalityFn {
    let mut inc: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    inc.sort_by(|a, b| b.total_cmp(a));
    let top = rng.gen_range(0.5..1.0) / inc.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    let mut g = vec![0.0];
    for a in inc {
        let next = (g.last().unwrap() + a * top).min(1.0);
        g.push(next);
    }
    ConcaveCardinalityFn::new(g)
}

fn tabulate(f: &CoverageFn, n: usize) -> Result<TableFn> {
    let values = (0..1u64 << n).map(|m| f.eval(ReceiverSet(m))).collect::<Result<Vec<_>>>()?;
    Ok(TableFn::new(values))
}

/// Deterministic in `(spec, seed)`.
pub fn generate_instance(spec: &InstanceSpec, seed: u64) -> Result<Instance> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let InstanceSpec { family, n, m, d } = *spec;
    let receivers = (0..n).map(|_| Receiver { types: (0..m).map(|k| format!("t{k}")).collect() }).collect();
    let states = (0..d).map(|t| format!("s{t}")).collect();
    let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let prior = raw.iter().map(|p| p / total).collect();
    let utility_diff = (0..n)
        .map(|_| (0..m).map(|_| (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect()).collect())
        .collect();
    let sender_functions = (0..d)
        .map(|_| {
            Ok(match family {
                Family::Coverage => SetFunction::Coverage(random_coverage(&mut rng, n)),
                Family::ConcaveCardinality => SetFunction::ConcaveCardinality(random_concave(&mut rng, n)),
                Family::Table => SetFunction::Table(tabulate(&random_coverage(&mut rng, n), n)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(InstanceData { receivers, states, prior, utility_diff, sender_functions })
}

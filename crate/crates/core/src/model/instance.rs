use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::set_function::{ReceiverSet, SetFunction, TABLE_MAX_RECEIVERS};
use crate::error::{Error, Result};

/// Tolerance on `Σ μ_θ = 1`.
pub const PRIOR_SUM_TOL: f64 = 1e-12;
/// Slack allowed when comparing set-function values.
pub const VALUE_TOL: f64 = 1e-12;
/// Monotonicity is checked exhaustively up to this many receivers.
pub const MONOTONE_EXHAUSTIVE_MAX: usize = 12;
/// Receivers are bitmask-indexed.
pub const MAX_RECEIVERS: usize = 64;
/// Signals are bitmasks over a receiver's types.
pub const MAX_TYPES: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Receiver {
    pub types: Vec<String>,
}

/// Raw, unvalidated instance as it appears on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceData {
    pub receivers: Vec<Receiver>,
    pub states: Vec<String>,
    pub prior: Vec<f64>,
    /// `utility_diff[r][k][θ] = u^{r,k}(a₁,θ) − u^{r,k}(a₀,θ)`.
    pub utility_diff: Vec<Vec<Vec<f64>>>,
    pub sender_functions: Vec<SetFunction>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    Shape,
    PriorSum,
    PriorPositive,
    UtilityRange,
    SetFunctionShape,
    EmptySetValue,
    ValueRange,
    Monotonicity,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

impl Violation {
    fn new(kind: ViolationKind, detail: impl Into<String>) -> Self {
        Violation { kind, detail: detail.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.kind {
            ViolationKind::Shape => "shape",
            ViolationKind::PriorSum => "prior sum ≠ 1",
            ViolationKind::PriorPositive => "prior not strictly positive",
            ViolationKind::UtilityRange => "utility out of [-1, 1]",
            ViolationKind::SetFunctionShape => "set function malformed",
            ViolationKind::EmptySetValue => "f(∅) ≠ 0",
            ViolationKind::ValueRange => "set function value out of [0, 1]",
            ViolationKind::Monotonicity => "monotonicity",
        };
        write!(f, "{label}: {}", self.detail)
    }
}

/// Checks every instance invariant and reports all violations found.
pub fn validate_instance(data: &InstanceData) -> std::result::Result<(), Vec<Violation>> {
    let v = data.violations();
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

impl InstanceData {
    pub fn violations(&self) -> Vec<Violation> {
        self.violations_with_utility_bound(1.0)
    }

    /// Like [`InstanceData::violations`] but accepts utilities in `[-bound, bound]`.
    pub fn violations_with_utility_bound(&self, bound: f64) -> Vec<Violation> {
        use ViolationKind::*;
        let mut out = Vec::new();
        let n = self.receivers.len();
        let d = self.states.len();

        if n == 0 || n > MAX_RECEIVERS {
            out.push(Violation::new(Shape, format!("receiver count {n} not in 1..={MAX_RECEIVERS}")));
        }
        for (r, rec) in self.receivers.iter().enumerate() {
            if rec.types.is_empty() || rec.types.len() > MAX_TYPES {
                out.push(Violation::new(
                    Shape,
                    format!("receiver {r} has {} types, need 1..={MAX_TYPES}", rec.types.len()),
                ));
            }
        }
        if d == 0 {
            out.push(Violation::new(Shape, "no states"));
        }

        if self.prior.len() != d {
            out.push(Violation::new(Shape, format!("prior has {} entries for {d} states", self.prior.len())));
        }
        let sum: f64 = self.prior.iter().sum();
        if !((sum - 1.0).abs() <= PRIOR_SUM_TOL) {
            out.push(Violation::new(PriorSum, format!("sum is {sum}")));
        }
        for (t, &p) in self.prior.iter().enumerate() {
            if !(p > 0.0) {
                out.push(Violation::new(PriorPositive, format!("μ[{t}] = {p}")));
            }
        }

        if self.utility_diff.len() != n {
            out.push(Violation::new(
                Shape,
                format!("utility_diff has {} receivers, expected {n}", self.utility_diff.len()),
            ));
        }
        for (r, per_type) in self.utility_diff.iter().enumerate() {
            let m = self.receivers.get(r).map_or(0, |x| x.types.len());
            if per_type.len() != m {
                out.push(Violation::new(
                    Shape,
                    format!("utility_diff[{r}] has {} types, expected {m}", per_type.len()),
                ));
            }
            for (k, per_state) in per_type.iter().enumerate() {
                if per_state.len() != d {
                    out.push(Violation::new(
                        Shape,
                        format!("utility_diff[{r}][{k}] has {} states, expected {d}", per_state.len()),
                    ));
                }
                for (t, &u) in per_state.iter().enumerate() {
                    if !(-bound..=bound).contains(&u) {
                        out.push(Violation::new(UtilityRange, format!("u[{r}][{k}][{t}] = {u}")));
                    }
                }
            }
        }

        if self.sender_functions.len() != d {
            out.push(Violation::new(
                Shape,
                format!("{} sender functions for {d} states", self.sender_functions.len()),
            ));
        }
        if n == 0 || n > MAX_RECEIVERS {
            return out;
        }
        for (t, f) in self.sender_functions.iter().enumerate() {
            let shape = set_function_shape(f, n);
            let malformed = !shape.is_empty();
            out.extend(shape.into_iter().map(|s| Violation::new(SetFunctionShape, format!("f[{t}]: {s}"))));
            if malformed {
                continue;
            }
            out.extend(set_function_values(f, n, t));
        }
        out
    }
}

fn set_function_shape(f: &SetFunction, n: usize) -> Vec<String> {
    let mut out = Vec::new();
    match f {
        SetFunction::Table(t) => {
            if n > TABLE_MAX_RECEIVERS {
                out.push(format!("table kind needs n ≤ {TABLE_MAX_RECEIVERS}, got {n}"));
            } else if t.values().len() != 1 << n {
                out.push(format!("table has {} entries, expected {}", t.values().len(), 1usize << n));
            }
        }
        SetFunction::Coverage(c) => {
            if c.covers().len() != n {
                out.push(format!("{} cover sets for {n} receivers", c.covers().len()));
            }
            if c.weights().len() != c.universe() {
                out.push(format!("{} weights for universe {}", c.weights().len(), c.universe()));
            }
            for (r, cover) in c.covers().iter().enumerate() {
                if let Some(e) = cover.iter().find(|&&e| e >= c.universe()) {
                    out.push(format!("receiver {r} covers element {e} outside universe"));
                }
            }
            if c.weights().iter().any(|&w| !(w >= 0.0)) {
                out.push("negative coverage weight".into());
            }
            let total: f64 = c.weights().iter().sum();
            if total > 1.0 + VALUE_TOL {
                out.push(format!("coverage weights sum to {total} > 1"));
            }
        }
        SetFunction::ConcaveCardinality(g) => {
            let g = &g.g;
            if g.len() != n + 1 {
                out.push(format!("g has {} entries, expected {}", g.len(), n + 1));
            } else {
                if g[0] != 0.0 {
                    out.push(format!("g(0) = {}", g[0]));
                }
                for i in 1..g.len() {
                    if g[i] < g[i - 1] - VALUE_TOL {
                        out.push(format!("g decreases at {i}"));
                    }
                    if i + 1 < g.len() && g[i + 1] - g[i] > g[i] - g[i - 1] + VALUE_TOL {
                        out.push(format!("g increments not concave at {i}"));
                    }
                }
            }
        }
    }
    out
}

fn set_function_values(f: &SetFunction, n: usize, state: usize) -> Vec<Violation> {
    use ViolationKind::*;
    let mut out = Vec::new();
    let eval = |s: ReceiverSet| f.eval(s).unwrap_or(f64::NAN);
    let empty = eval(ReceiverSet::EMPTY);
    if empty != 0.0 {
        out.push(Violation::new(EmptySetValue, format!("f[{state}](∅) = {empty}")));
    }
    let check = |lo: ReceiverSet, hi: ReceiverSet, out: &mut Vec<Violation>| {
        let (a, b) = (eval(lo), eval(hi));
        if !(0.0..=1.0 + VALUE_TOL).contains(&b) {
            out.push(Violation::new(ValueRange, format!("f[{state}]({hi:?}) = {b}")));
        }
        if a > b + VALUE_TOL {
            out.push(Violation::new(
                Monotonicity,
                format!("f[{state}]({lo:?}) = {a} > f[{state}]({hi:?}) = {b}"),
            ));
        }
    };
    if n <= MONOTONE_EXHAUSTIVE_MAX {
        for mask in 0u64..(1 << n) {
            for r in 0..n {
                if mask >> r & 1 == 0 {
                    check(ReceiverSet(mask), ReceiverSet(mask | 1 << r), &mut out);
                }
            }
        }
    } else {
        // random maximal chains ∅ ⊂ … ⊂ R
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_c4a1);
        for _ in 0..64 {
            let mut order: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                order.swap(i, rng.gen_range(0..=i));
            }
            let mut set = ReceiverSet::EMPTY;
            for r in order {
                let next = set.with(r);
                check(set, next, &mut out);
                set = next;
            }
        }
    }
    out.dedup_by(|a, b| a.kind == b.kind && a.kind == ValueRange);
    out
}

/// A validated instance. Immutable; every operation borrows it read-only.
#[derive(Clone, Debug)]
pub struct Instance {
    data: InstanceData,
    /// `f_θ` tabulated over all receiver subsets when `n ≤ 16`.
    tables: Option<Vec<Vec<f64>>>,
}

impl TryFrom<InstanceData> for Instance {
    type Error = Error;

    fn try_from(data: InstanceData) -> Result<Self> {
        Instance::with_utility_bound(data, 1.0)
    }
}

impl Instance {
    /// Validates with a relaxed utility range. Persuasiveness is invariant to
    /// positive rescaling of a receiver's utilities, so nothing downstream needs
    /// the unit range; it only keeps the clamp constants meaningful.
    pub fn with_utility_bound(data: InstanceData, bound: f64) -> Result<Self> {
        let v = data.violations_with_utility_bound(bound);
        if !v.is_empty() {
            return Err(Error::InvalidInstance(v));
        }
        let n = data.receivers.len();
        let tables = (n <= TABLE_MAX_RECEIVERS).then(|| {
            data.sender_functions
                .iter()
                .map(|f| (0u64..1 << n).map(|m| f.eval(ReceiverSet(m)).expect("validated")).collect())
                .collect()
        });
        Ok(Instance { data, tables })
    }
}

impl Serialize for Instance {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.data.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Instance {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let data = InstanceData::deserialize(d)?;
        Instance::try_from(data).map_err(serde::de::Error::custom)
    }
}

impl Instance {
    pub fn new(data: InstanceData) -> Result<Self> {
        Instance::try_from(data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let data: InstanceData = serde_json::from_str(&text)?;
        Instance::try_from(data)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(&self.data)?)?;
        Ok(())
    }

    pub fn data(&self) -> &InstanceData {
        &self.data
    }

    pub fn num_receivers(&self) -> usize {
        self.data.receivers.len()
    }

    pub fn num_types(&self, r: usize) -> usize {
        self.data.receivers[r].types.len()
    }

    pub fn num_states(&self) -> usize {
        self.data.states.len()
    }

    pub fn prior(&self) -> &[f64] {
        &self.data.prior
    }

    #[inline]
    pub fn utility_diff(&self, r: usize, k: usize, state: usize) -> f64 {
        self.data.utility_diff[r][k][state]
    }

    pub fn sender_function(&self, state: usize) -> &SetFunction {
        &self.data.sender_functions[state]
    }

    /// `f_θ(R)`.
    #[inline]
    pub fn sender_value(&self, state: usize, set: ReceiverSet) -> f64 {
        match &self.tables {
            Some(t) => t[state][set.0 as usize],
            None => self.data.sender_functions[state].eval(set).expect("validated instance"),
        }
    }

    /// `|S| = Π_r 2^{m_r}`, saturating.
    pub fn num_signal_profiles(&self) -> u128 {
        self.data
            .receivers
            .iter()
            .map(|r| 1u128.checked_shl(r.types.len() as u32).unwrap_or(u128::MAX))
            .fold(1u128, |a, b| a.saturating_mul(b))
    }

    /// `|𝒦| = Π_r m_r`, saturating.
    pub fn num_type_profiles(&self) -> u128 {
        self.data
            .receivers
            .iter()
            .fold(1u128, |a, r| a.saturating_mul(r.types.len() as u128))
    }

    pub fn all_submodular(&self) -> bool {
        self.data.sender_functions.iter().all(SetFunction::is_submodular)
    }
}

/// One receiver with one type, two equiprobable states, `u = (−2, +1)`,
/// `f_θ({r}) = 1` in both states. Optimal sender utility is 0.75.
///
/// The −2 sits outside the unit utility range, so this goes through
/// [`Instance::with_utility_bound`].
pub fn tiny_instance() -> Instance {
    use super::set_function::TableFn;
    let data = InstanceData {
        receivers: vec![Receiver { types: vec!["k".into()] }],
        states: vec!["theta0".into(), "theta1".into()],
        prior: vec![0.5, 0.5],
        utility_diff: vec![vec![vec![-2.0, 1.0]]],
        sender_functions: vec![
            SetFunction::Table(TableFn::new(vec![0.0, 1.0])),
            SetFunction::Table(TableFn::new(vec![0.0, 1.0])),
        ],
    };
    Instance::with_utility_bound(data, 2.0).expect("tiny fixture is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::set_function::TableFn;

    fn two_receiver_table(values: Vec<f64>) -> InstanceData {
        InstanceData {
            receivers: vec![Receiver { types: vec!["a".into()] }, Receiver { types: vec!["b".into()] }],
            states: vec!["s".into()],
            prior: vec![1.0],
            utility_diff: vec![vec![vec![0.1]], vec![vec![0.2]]],
            sender_functions: vec![SetFunction::Table(TableFn::new(values))],
        }
    }

    #[test]
    fn tiny_is_valid() {
        let data = tiny_instance().data().clone();
        assert!(data.violations_with_utility_bound(2.0).is_empty());
        // strict validation flags only the −2 entry
        let v = validate_instance(&data).unwrap_err();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::UtilityRange);
    }

    #[test]
    fn bad_prior_reported() {
        let mut data = tiny_instance().data().clone();
        data.prior = vec![0.5, 0.5, 0.1];
        let v = validate_instance(&data).unwrap_err();
        assert!(v.iter().any(|x| x.kind == ViolationKind::PriorSum));
        assert!(v.iter().any(|x| x.to_string().starts_with("prior sum ≠ 1")));
        // also a shape violation: three prior entries for two states
        assert!(v.iter().any(|x| x.kind == ViolationKind::Shape));
    }

    #[test]
    fn non_monotone_table_reported() {
        let data = two_receiver_table(vec![0.0, 0.5, 0.0, 0.3]);
        let v = validate_instance(&data).unwrap_err();
        assert!(v.iter().any(|x| x.kind == ViolationKind::Monotonicity), "{v:?}");
    }

    #[test]
    fn all_violations_collected() {
        let mut data = two_receiver_table(vec![0.1, 0.5, 0.0, 1.5]);
        data.prior = vec![0.0];
        data.utility_diff[0][0][0] = 3.0;
        let kinds: Vec<_> = validate_instance(&data).unwrap_err().into_iter().map(|v| v.kind).collect();
        for k in [
            ViolationKind::PriorSum,
            ViolationKind::PriorPositive,
            ViolationKind::UtilityRange,
            ViolationKind::EmptySetValue,
            ViolationKind::ValueRange,
            ViolationKind::Monotonicity,
        ] {
            assert!(kinds.contains(&k), "missing {k:?} in {kinds:?}");
        }
    }

    #[test]
    fn loader_rejects_invalid_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        let mut data = tiny_instance().data().clone();
        data.prior = vec![0.7, 0.7];
        std::fs::write(&path, serde_json::to_string(&data).unwrap()).unwrap();
        assert!(Instance::load(&path).is_err());

        let mut data = tiny_instance().data().clone();
        data.utility_diff = vec![vec![vec![-1.0, 0.5]]];
        let inst = Instance::new(data).unwrap();
        let good = dir.path().join("good.json");
        inst.save(&good).unwrap();
        let back = Instance::load(&good).unwrap();
        assert_eq!(back.data(), inst.data());
    }

    #[test]
    fn profile_counts() {
        let inst = tiny_instance();
        assert_eq!(inst.num_signal_profiles(), 2);
        assert_eq!(inst.num_type_profiles(), 1);
    }
}

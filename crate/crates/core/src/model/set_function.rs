//! Sender set-functions over the receiver set.
//!
//! Receivers are indexed `0..n` and subsets are carried as [`ReceiverSet`]
//! bitmasks, so `n` is limited to 64 for the representation and to 16 for the
//! `table` kind (which stores one value per subset).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bitmask of receivers: bit `r` is set iff receiver `r` is in the set.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ReceiverSet(pub u64);

impl ReceiverSet {
    pub const EMPTY: ReceiverSet = ReceiverSet(0);

    pub fn full(n: usize) -> Self {
        if n >= 64 {
            ReceiverSet(u64::MAX)
        } else {
            ReceiverSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(r: usize) -> Self {
        ReceiverSet(1u64 << r)
    }

    #[inline]
    pub fn contains(self, r: usize) -> bool {
        self.0 >> r & 1 == 1
    }

    #[inline]
    pub fn with(self, r: usize) -> Self {
        ReceiverSet(self.0 | 1u64 << r)
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: ReceiverSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: ReceiverSet) -> Self {
        ReceiverSet(self.0 | other.0)
    }

    pub fn intersection(self, other: ReceiverSet) -> Self {
        ReceiverSet(self.0 & other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                return None;
            }
            let r = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            Some(r)
        })
    }
}

impl fmt::Debug for ReceiverSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl FromIterator<usize> for ReceiverSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        iter.into_iter().fold(ReceiverSet::EMPTY, ReceiverSet::with)
    }
}

/// A sender utility `f_θ: 2^R → [0, 1]` in one of three representations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetFunction {
    Table(TableFn),
    Coverage(CoverageFn),
    ConcaveCardinality(ConcaveCardinalityFn),
}

impl SetFunction {
    pub fn eval(&self, set: ReceiverSet) -> Result<f64> {
        match self {
            SetFunction::Table(t) => t.eval(set),
            SetFunction::Coverage(c) => c.eval(set),
            SetFunction::ConcaveCardinality(g) => g.eval(set),
        }
    }

    /// Submodularity is structural for coverage and concave-cardinality
    /// functions; tables carry the result of an exhaustive check (if any).
    pub fn is_submodular(&self) -> bool {
        match self {
            SetFunction::Table(t) => t.submodular == Some(true),
            SetFunction::Coverage(_) | SetFunction::ConcaveCardinality(_) => true,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SetFunction::Table(_) => "table",
            SetFunction::Coverage(_) => "coverage",
            SetFunction::ConcaveCardinality(_) => "concave_cardinality",
        }
    }
}

/// Evaluates `f` on a receiver subset.
pub fn eval_set_function(f: &SetFunction, set: ReceiverSet) -> Result<f64> {
    f.eval(set)
}

/// Largest receiver count for which the table kind is accepted.
pub const TABLE_MAX_RECEIVERS: usize = 16;
/// Largest receiver count for which the table submodularity flag is computed.
pub const TABLE_SUBMODULAR_CHECK_MAX: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "TableRepr", into = "TableRepr")]
pub struct TableFn {
    values: Vec<f64>,
    submodular: Option<bool>,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    submodular: Option<bool>,
}

impl From<TableRepr> for TableFn {
    // a claimed flag in the file is ignored; the flag is always recomputed
    fn from(r: TableRepr) -> Self {
        TableFn::new(r.values)
    }
}

impl From<TableFn> for TableRepr {
    fn from(t: TableFn) -> Self {
        TableRepr { values: t.values, submodular: t.submodular }
    }
}

impl TableFn {
    pub fn new(values: Vec<f64>) -> Self {
        let submodular = if values.len().is_power_of_two()
            && values.len().trailing_zeros() as usize <= TABLE_SUBMODULAR_CHECK_MAX
        {
            Some(table_is_submodular(&values, values.len().trailing_zeros() as usize))
        } else {
            None
        };
        TableFn { values, submodular }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn submodular(&self) -> Option<bool> {
        self.submodular
    }

    pub fn eval(&self, set: ReceiverSet) -> Result<f64> {
        usize::try_from(set.0)
            .ok()
            .and_then(|i| self.values.get(i))
            .copied()
            .ok_or_else(|| {
                Error::MalformedInstance(format!("table has no entry for subset {:?}", set))
            })
    }
}

/// Pairwise marginal check: `f(S ∪ {a}) − f(S) ≥ f(S ∪ {a,b}) − f(S ∪ {b})`
/// for all `S` and `a ≠ b` outside `S`. Equivalent to submodularity.
fn table_is_submodular(values: &[f64], n: usize) -> bool {
    for s in 0..values.len() {
        for a in 0..n {
            if s >> a & 1 == 1 {
                continue;
            }
            for b in (a + 1)..n {
                if s >> b & 1 == 1 {
                    continue;
                }
                let sa = s | 1 << a;
                let sb = s | 1 << b;
                let sab = sa | 1 << b;
                if values[sa] - values[s] < values[sab] - values[sb] - 1e-12 {
                    return false;
                }
            }
        }
    }
    true
}

/// Weighted coverage: `f(R) = Σ_e w_e · [e covered by some r ∈ R]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "CoverageRepr", into = "CoverageRepr")]
pub struct CoverageFn {
    universe: usize,
    covers: Vec<Vec<usize>>,
    weights: Vec<f64>,
    masks: Vec<Vec<u64>>,
}

#[derive(Serialize, Deserialize)]
struct CoverageRepr {
    universe: usize,
    covers: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl From<CoverageRepr> for CoverageFn {
    fn from(r: CoverageRepr) -> Self {
        CoverageFn::new(r.universe, r.covers, r.weights)
    }
}

impl From<CoverageFn> for CoverageRepr {
    fn from(c: CoverageFn) -> Self {
        CoverageRepr { universe: c.universe, covers: c.covers, weights: c.weights }
    }
}

impl CoverageFn {
    pub fn new(universe: usize, covers: Vec<Vec<usize>>, weights: Vec<f64>) -> Self {
        let words = universe.div_ceil(64).max(1);
        let masks = covers
            .iter()
            .map(|cover| {
                let mut m = vec![0u64; words];
                for &e in cover.iter().filter(|&&e| e < universe) {
                    m[e / 64] |= 1 << (e % 64);
                }
                m
            })
            .collect();
        CoverageFn { universe, covers, weights, masks }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn covers(&self) -> &[Vec<usize>] {
        &self.covers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn eval(&self, set: ReceiverSet) -> Result<f64> {
        let words = self.masks.first().map_or(1, Vec::len);
        let mut covered = vec![0u64; words];
        for r in set.iter() {
            let m = self.masks.get(r).ok_or_else(|| {
                Error::MalformedInstance(format!("coverage function has no cover set for receiver {r}"))
            })?;
            for (c, w) in covered.iter_mut().zip(m) {
                *c |= w;
            }
        }
        let mut total = 0.0;
        for (wi, word) in covered.iter().enumerate() {
            let mut bits = *word;
            while bits != 0 {
                let e = wi * 64 + bits.trailing_zeros() as usize;
                bits &= bits - 1;
                total += self.weights.get(e).copied().ok_or_else(|| {
                    Error::MalformedInstance(format!("coverage element {e} has no weight"))
                })?;
            }
        }
        Ok(total)
    }
}

/// `f(R) = g(|R|)` with `g(0) = 0`, non-decreasing, concave increments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcaveCardinalityFn {
    pub g: Vec<f64>,
}

impl ConcaveCardinalityFn {
    pub fn new(g: Vec<f64>) -> Self {
        ConcaveCardinalityFn { g }
    }

    pub fn eval(&self, set: ReceiverSet) -> Result<f64> {
        self.g.get(set.len()).copied().ok_or_else(|| {
            Error::MalformedInstance(format!(
                "concave_cardinality g has {} entries, needs index {}",
                self.g.len(),
                set.len()
            ))
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coverage_full_set_sums_all_weights() {
        let f = SetFunction::Coverage(CoverageFn::new(2, vec![vec![0], vec![1]], vec![0.5, 0.5]));
        assert_eq!(f.eval(ReceiverSet(0b11)).unwrap(), 1.0);
        assert_eq!(f.eval(ReceiverSet(0b01)).unwrap(), 0.5);
    }

    #[test]
    fn empty_set_is_zero_for_every_kind() {
        let kinds = [
            SetFunction::Coverage(CoverageFn::new(2, vec![vec![0], vec![1]], vec![0.5, 0.5])),
            SetFunction::ConcaveCardinality(ConcaveCardinalityFn::new(vec![0.0, 0.6, 0.9])),
            SetFunction::Table(TableFn::new(vec![0.0, 0.3, 0.4, 0.6])),
        ];
        for f in &kinds {
            assert_eq!(f.eval(ReceiverSet::EMPTY).unwrap(), 0.0, "{}", f.kind_name());
        }
    }

    #[test]
    fn concave_cardinality_looks_up_size() {
        let f = SetFunction::ConcaveCardinality(ConcaveCardinalityFn::new(vec![0.0, 0.6, 0.9]));
        assert_eq!(f.eval(ReceiverSet::singleton(1)).unwrap(), 0.6);
    }

    #[test]
    fn table_missing_entry_is_malformed() {
        let f = SetFunction::Table(TableFn::new(vec![0.0, 0.5]));
        assert!(matches!(f.eval(ReceiverSet(0b10)), Err(Error::MalformedInstance(_))));
    }

    #[test]
    fn table_submodularity_flag() {
        // f({r1,r2}) = 1, singletons 0: supermodular
        assert_eq!(TableFn::new(vec![0.0, 0.0, 0.0, 1.0]).submodular(), Some(false));
        assert_eq!(TableFn::new(vec![0.0, 0.6, 0.6, 0.9]).submodular(), Some(true));
    }

    #[test]
    fn coverage_roundtrips_through_json() {
        let f = SetFunction::Coverage(CoverageFn::new(3, vec![vec![0, 2], vec![1]], vec![0.2, 0.3, 0.5]));
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"kind\":\"coverage\""));
        let back: SetFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.eval(ReceiverSet(0b01)).unwrap(), 0.7);
    }

    #[test]
    fn receiver_set_iteration() {
        let s: ReceiverSet = [0, 3, 5].into_iter().collect();
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 3, 5]);
        assert_eq!(s.len(), 3);
        assert!(ReceiverSet(0b1000).is_subset_of(s));
    }
}

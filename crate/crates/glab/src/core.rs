//! Coefficient-level building blocks: sparse vectors over a real or complex
//! scalar field, index sets, and unimodular sign patterns.
//!
//! Basis indices are positive integers. Vectors are finitely supported;
//! stored entries are nonzero and arithmetic drops anything with modulus
//! below [`crate::ZERO_DROP`].

use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::{GlabError, Result, ZERO_DROP};

/// Coefficient scalar. Real-field spaces require the imaginary part to be 0.
pub type Coef = Complex64;

pub fn real(v: f64) -> Coef {
    Complex64::new(v, 0.0)
}

/// Modulus |z|. Exact for real inputs (hypot(x, 0) = |x|).
pub fn modulus(z: Coef) -> f64 {
    z.norm()
}

/// sign(z) = z/|z| for z != 0, and 1 for z = 0.
pub fn sign(z: Coef) -> Coef {
    let m = modulus(z);
    if m == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        z / m
    }
}

pub fn is_real(z: Coef) -> bool {
    z.im == 0.0
}

/// Scalar field of a space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

/// Finitely supported coefficient vector, indexed from 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: BTreeMap<u32, Coef>,
}

impl SparseVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, Coef)>) -> Result<Self> {
        let mut v = Self::new();
        for (i, c) in pairs {
            v.set(i, c)?;
        }
        Ok(v)
    }

    pub fn from_real_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        Self::from_pairs(pairs.into_iter().map(|(i, x)| (i, real(x))))
    }

    /// Sets entry `index` to `value`, dropping it if the modulus is below
    /// the zero-drop threshold. Index 0 is rejected.
    pub fn set(&mut self, index: u32, value: Coef) -> Result<()> {
        if index == 0 {
            return Err(GlabError::Invalid("indices start at 1".into()));
        }
        if modulus(value) < ZERO_DROP {
            self.entries.remove(&index);
        } else {
            self.entries.insert(index, value);
        }
        Ok(())
    }

    pub fn coef(&self, index: u32) -> Coef {
        self.entries.get(&index).copied().unwrap_or_default()
    }

    pub fn support(&self) -> IndexSet {
        IndexSet::from_sorted(self.entries.keys().copied().collect())
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_index(&self) -> Option<u32> {
        self.entries.keys().next_back().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, Coef)> + '_ {
        self.entries.iter().map(|(&i, &c)| (i, c))
    }

    /// Support as a sorted `(index, coefficient)` slice for norm kernels.
    pub fn packed(&self) -> Vec<(u32, Coef)> {
        self.iter().collect()
    }

    pub fn max_modulus(&self) -> f64 {
        self.entries.values().map(|&c| modulus(c)).fold(0.0, f64::max)
    }

    /// Keeps the entries indexed by `set`.
    pub fn restrict(&self, set: &IndexSet) -> SparseVector {
        let entries = self
            .entries
            .iter()
            .filter(|(i, _)| set.contains(**i))
            .map(|(&i, &c)| (i, c))
            .collect();
        SparseVector { entries }
    }

    /// Drops the entries indexed by `set`; the complement is taken inside
    /// the full index range, so `restrict + restrict_complement = self`.
    pub fn restrict_complement(&self, set: &IndexSet) -> SparseVector {
        let entries = self
            .entries
            .iter()
            .filter(|(i, _)| !set.contains(**i))
            .map(|(&i, &c)| (i, c))
            .collect();
        SparseVector { entries }
    }

    /// alpha*x + y with zero-drop.
    pub fn axpy(alpha: Coef, x: &SparseVector, y: &SparseVector) -> SparseVector {
        let mut out = y.clone();
        for (i, c) in x.iter() {
            let v = alpha * c + out.coef(i);
            if modulus(v) < ZERO_DROP {
                out.entries.remove(&i);
            } else {
                out.entries.insert(i, v);
            }
        }
        out
    }

    pub fn sub(&self, other: &SparseVector) -> SparseVector {
        SparseVector::axpy(real(-1.0), other, self)
    }

    pub fn scale(&self, alpha: Coef) -> SparseVector {
        SparseVector::axpy(alpha, self, &SparseVector::new())
    }

    /// Sign pattern of the coefficients on the support.
    pub fn sign_pattern(&self) -> SignPattern {
        SignPattern {
            signs: self.iter().map(|(i, c)| (i, sign(c))).collect(),
        }
    }

    pub fn all_real(&self) -> bool {
        self.entries.values().all(|&c| is_real(c))
    }

    /// First index (if any) carrying a non-real coefficient.
    pub fn first_non_real(&self) -> Option<u32> {
        self.iter().find(|(_, c)| !is_real(*c)).map(|(i, _)| i)
    }
}

/// Sorted, duplicate-free set of basis indices.
// No Ord: a by-value `Ord::max` would shadow the inherent `max(&self)`
// accessor on owned receivers. Sort by `as_slice()` where order matters.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IndexSet {
    indices: Vec<u32>,
}

impl IndexSet {
    pub fn new(mut indices: Vec<u32>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self { indices }
    }

    /// The caller promises `indices` is sorted and duplicate-free.
    pub fn from_sorted(indices: Vec<u32>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self { indices }
    }

    pub fn range(lo: u32, hi: u32) -> Self {
        Self::from_sorted((lo..=hi).collect())
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: u32) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.indices.iter().copied()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.indices
    }

    pub fn min(&self) -> Option<u32> {
        self.indices.first().copied()
    }

    pub fn max(&self) -> Option<u32> {
        self.indices.last().copied()
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v = self.indices.clone();
        v.extend_from_slice(&other.indices);
        IndexSet::new(v)
    }

    pub fn intersect(&self, other: &IndexSet) -> IndexSet {
        IndexSet::from_sorted(
            self.indices
                .iter()
                .copied()
                .filter(|&i| other.contains(i))
                .collect(),
        )
    }

    pub fn difference(&self, other: &IndexSet) -> IndexSet {
        IndexSet::from_sorted(
            self.indices
                .iter()
                .copied()
                .filter(|&i| !other.contains(i))
                .collect(),
        )
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        self.intersect(other).is_empty()
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }

    /// min(self) > c * max(other), the separation used by split-set ratios.
    /// Empty sets are never separated.
    pub fn separated_above(&self, other: &IndexSet, c: f64) -> bool {
        match (self.min(), other.max()) {
            (Some(lo), Some(hi)) => (lo as f64) > c * (hi as f64),
            _ => false,
        }
    }

    /// Unsigned indicator vector of the set.
    pub fn indicator(&self) -> SparseVector {
        SparseVector {
            entries: self.indices.iter().map(|&i| (i, real(1.0))).collect(),
        }
    }
}

impl FromIterator<u32> for IndexSet {
    fn from_iter<T: IntoIterator<Item = u32>>(iter: T) -> Self {
        IndexSet::new(iter.into_iter().collect())
    }
}

/// Unimodular signs attached to a set of indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignPattern {
    signs: BTreeMap<u32, Coef>,
}

impl SignPattern {
    /// All signs must have modulus 1 up to [`crate::TIE_TOL`].
    pub fn new(signs: impl IntoIterator<Item = (u32, Coef)>) -> Result<Self> {
        let signs: BTreeMap<u32, Coef> = signs.into_iter().collect();
        for (&i, &s) in &signs {
            if (modulus(s) - 1.0).abs() > crate::TIE_TOL {
                return Err(GlabError::Invalid(format!(
                    "sign at index {i} has modulus {} != 1",
                    modulus(s)
                )));
            }
        }
        Ok(Self { signs })
    }

    pub fn all_ones(set: &IndexSet) -> Self {
        Self {
            signs: set.iter().map(|i| (i, real(1.0))).collect(),
        }
    }

    /// Sign at `index`; defaults to 1 off the assignment, matching sign(0).
    pub fn sign(&self, index: u32) -> Coef {
        self.signs.get(&index).copied().unwrap_or_else(|| real(1.0))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, Coef)> + '_ {
        self.signs.iter().map(|(&i, &c)| (i, c))
    }

    /// Signed indicator 1_{eps A}.
    pub fn indicator(&self, set: &IndexSet) -> SparseVector {
        SparseVector {
            entries: set.iter().map(|i| (i, self.sign(i))).collect(),
        }
    }
}

/// All k-element subsets of `universe`, emitted in lexicographic order.
pub fn k_subsets(universe: &[u32], k: usize) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(u: &[u32], k: usize, start: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        let need = k - cur.len();
        for i in start..=u.len().saturating_sub(need) {
            cur.push(u[i]);
            rec(u, k, i + 1, cur, out);
            cur.pop();
        }
    }
    if k <= universe.len() {
        rec(universe, k, 0, &mut cur, &mut out);
    }
    out
}

/// Number of k-subsets as f64, for budget estimates.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Real sign choices (+1/-1) on `set`, all 2^|set| of them.
pub fn real_sign_patterns(set: &IndexSet) -> Vec<SignPattern> {
    let idx = set.as_slice();
    let mut out = Vec::with_capacity(1 << idx.len());
    for mask in 0u64..(1u64 << idx.len()) {
        let signs = idx
            .iter()
            .enumerate()
            .map(|(b, &i)| (i, real(if mask >> b & 1 == 0 { 1.0 } else { -1.0 })));
        out.push(SignPattern {
            signs: signs.collect(),
        });
    }
    out
}

/// Eighth-roots-of-unity sign choices on `set` (8^|set| patterns). A finite
/// grid over the complex unimodular group; sweeps over it give lower bounds.
pub fn complex_sign_patterns(set: &IndexSet) -> Vec<SignPattern> {
    let idx = set.as_slice();
    let roots: Vec<Coef> = (0..8)
        .map(|k| Complex64::from_polar(1.0, std::f64::consts::PI * k as f64 / 4.0))
        .collect();
    let mut out = Vec::new();
    let total = 8u64.pow(idx.len() as u32);
    for mut code in 0..total {
        let mut signs = BTreeMap::new();
        for &i in idx {
            signs.insert(i, roots[(code % 8) as usize]);
            code /= 8;
        }
        out.push(SignPattern { signs });
    }
    out
}

// Vectors serialize as [index, re, im] triples and index sets as plain
// arrays; deserialization funnels through the validating constructors so a
// parsed value obeys the same invariants as a built one.

impl serde::Serialize for SparseVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = s.serialize_seq(Some(self.entries.len()))?;
        for (n, z) in &self.entries {
            seq.serialize_element(&(*n, z.re, z.im))?;
        }
        seq.end()
    }
}

impl<'de> serde::Deserialize<'de> for SparseVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let triples = Vec::<(u32, f64, f64)>::deserialize(d)?;
        let mut v = SparseVector::new();
        for (n, re, im) in triples {
            v.set(n, Coef::new(re, im))
                .map_err(serde::de::Error::custom)?;
        }
        Ok(v)
    }
}

impl serde::Serialize for IndexSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.indices.serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for IndexSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(IndexSet::new(Vec::<u32>::deserialize(d)?))
    }
}

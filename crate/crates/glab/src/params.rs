//! Windowed computation of the norm-comparison parameters: democracy and
//! super-democracy ratios, the constant-coefficient quasi-greedy parameter,
//! quasi-greedy and conditionality estimates over witness families,
//! gap-separated indicator ratios, the fundamental function, and
//! admissibility margins. Best m-term errors live in [`crate::greedy::sigma`].
//!
//! Every sup here ranges over an explicit finite index window, so each value
//! is exact FOR THE WINDOW and a lower bound for the whole-space parameter.
//! Operator-norm parameters (g, g_c, g_tilde, k, k_c) additionally restrict
//! the sup to a family of witness vectors and report mode `lower-bound`.
//!
//! Sweeps partition their cell space into contiguous chunks, one per worker;
//! chunk results merge in chunk order with strictly-greater-replaces, which
//! reproduces the serial first-max and makes output independent of the
//! worker count.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::core::{k_subsets, real_sign_patterns, Coef, Field, SignPattern};
use crate::greedy::greedy_sets;
use crate::spaces::Space;
use crate::{GlabError, IndexSet, Result, SparseVector};

/// Work cap per table: norm evaluations plus enumeration cells. Exceeding
/// it is an error, never a silent truncation.
pub const DEFAULT_WORK_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Mode {
    /// Exhaustive over the window (and over all real sign patterns).
    #[serde(rename = "exact")]
    Exact,
    /// Sup over a restricted family (witness vectors or a sign grid).
    #[serde(rename = "lower-bound")]
    LowerBound,
    /// Inner inf over all separations replaced by a min over a finite list.
    #[serde(rename = "upper-bound-of-inner-inf")]
    UpperBoundOfInnerInf,
}

/// Everything needed to re-evaluate a reported value from scratch.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamWitness {
    /// norm(numerator) / norm(denominator).
    Ratio {
        numerator: SparseVector,
        denominator: SparseVector,
    },
    /// norm(x restricted to set) / norm(x).
    Restriction { x: SparseVector, set: IndexSet },
    /// norm(x minus its restriction to set) / norm(x).
    Complement { x: SparseVector, set: IndexSet },
    /// norm(x restricted to outer minus inner) / norm(x).
    NestedDifference {
        x: SparseVector,
        outer: IndexSet,
        inner: IndexSet,
    },
    /// norm(vector).
    Norm { vector: SparseVector },
}

impl ParamWitness {
    pub fn reevaluate(&self, space: &Space) -> Result<f64> {
        match self {
            ParamWitness::Ratio {
                numerator,
                denominator,
            } => Ok(space.norm(numerator)? / space.norm(denominator)?),
            ParamWitness::Restriction { x, set } => {
                Ok(space.norm(&x.restrict(set))? / space.norm(x)?)
            }
            ParamWitness::Complement { x, set } => {
                Ok(space.norm(&x.restrict_complement(set))? / space.norm(x)?)
            }
            ParamWitness::NestedDifference { x, outer, inner } => {
                let diff = outer.difference(inner);
                Ok(space.norm(&x.restrict(&diff))? / space.norm(x)?)
            }
            ParamWitness::Norm { vector } => space.norm(vector),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ParamTable {
    pub name: String,
    pub mode: Mode,
    pub window: IndexSet,
    /// m -> value; None means no admissible configuration fits the window
    /// at that m ("undefined at this window", deliberately distinct from 1).
    pub values: BTreeMap<usize, Option<f64>>,
    pub witnesses: BTreeMap<usize, ParamWitness>,
}

impl ParamTable {
    pub fn value(&self, m: usize) -> Option<f64> {
        self.values.get(&m).copied().flatten()
    }

    /// Recomputes every witness and checks it reproduces the stored value.
    pub fn verify(&self, space: &Space) -> Result<()> {
        for (m, v) in &self.values {
            let Some(v) = v else { continue };
            let w = self.witnesses.get(m).ok_or_else(|| {
                GlabError::Invalid(format!("table {} has no witness for m={m}", self.name))
            })?;
            let again = w.reevaluate(space)?;
            if (again - v).abs() > 1e-9 {
                return Err(GlabError::Invalid(format!(
                    "table {} witness for m={m} reproduces {again}, stored {v}",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Running max of the quasi-greedy estimates: the reported stand-in for
/// the uniform constant. A finite window can never certify finiteness of
/// the true sup over all m.
pub fn cq_running_max(g: &ParamTable) -> Option<f64> {
    g.values.values().filter_map(|v| *v).fold(None, |acc, v| {
        Some(match acc {
            None => v,
            Some(a) if v > a => v,
            Some(a) => a,
        })
    })
}

// ---------------------------------------------------------------------------
// shared plumbing

struct WorkBudget {
    used: u64,
    cap: u64,
}

impl WorkBudget {
    fn new(cap: u64) -> Self {
        Self {
            used: 0,
            cap: if cap == 0 { DEFAULT_WORK_BUDGET } else { cap },
        }
    }

    fn charge(&mut self, cells: u64) -> Result<()> {
        self.used = self.used.saturating_add(cells);
        if self.used > self.cap {
            Err(GlabError::BudgetExceeded(format!(
                "enumeration needs {} work units, cap {}; shrink the window or m",
                self.used, self.cap
            )))
        } else {
            Ok(())
        }
    }
}

fn check_window(space: &Space, window: &IndexSet) -> Result<()> {
    let Some(lo) = window.min() else {
        return Err(GlabError::Invalid("window is empty".into()));
    };
    if lo < 1 {
        return Err(GlabError::Invalid("window indices start at 1".into()));
    }
    let hi = window.max().unwrap();
    if hi > space.window() {
        return Err(GlabError::WindowExceeded {
            index: hi,
            window: space.window(),
        });
    }
    Ok(())
}

/// Evaluates f on 0..n across workers, each filling a contiguous chunk.
fn parallel_fill<T, F>(n: usize, jobs: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let jobs = jobs.max(1);
    if jobs == 1 || n < 64 {
        return (0..n).map(f).collect();
    }
    let chunk = n.div_ceil(jobs);
    let mut out: Vec<Option<T>> = (0..n).map(|_| None).collect();
    std::thread::scope(|s| {
        for (ci, slice) in out.chunks_mut(chunk).enumerate() {
            let f = &f;
            s.spawn(move || {
                for (i, slot) in slice.iter_mut().enumerate() {
                    *slot = Some(f(ci * chunk + i));
                }
            });
        }
    });
    out.into_iter().map(|o| o.unwrap()).collect()
}

/// First strict max of f over 0..n (None cells are skipped), computed in
/// contiguous chunks and merged in chunk order: identical to a serial scan
/// for every worker count.
fn parallel_best<F>(n: usize, jobs: usize, f: F) -> Option<(usize, f64)>
where
    F: Fn(usize) -> Option<f64> + Sync,
{
    fn scan<F: Fn(usize) -> Option<f64>>(lo: usize, hi: usize, f: &F) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for i in lo..hi {
            let Some(v) = f(i) else { continue };
            if !v.is_finite() {
                continue;
            }
            if best.map_or(true, |(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        best
    }

    let jobs = jobs.max(1);
    if jobs == 1 || n < 64 {
        return scan(0, n, &f);
    }
    let chunk = n.div_ceil(jobs);
    let mut partials: Vec<Option<(usize, f64)>> = Vec::new();
    std::thread::scope(|s| {
        let mut handles = Vec::new();
        let mut lo = 0;
        while lo < n {
            let hi = (lo + chunk).min(n);
            let f = &f;
            handles.push(s.spawn(move || scan(lo, hi, f)));
            lo = hi;
        }
        for h in handles {
            partials.push(h.join().expect("sweep worker panicked"));
        }
    });
    let mut best: Option<(usize, f64)> = None;
    for p in partials.into_iter().flatten() {
        if best.map_or(true, |(_, b)| p.1 > b) {
            best = Some(p);
        }
    }
    best
}

/// All size-k subsets of the window with, per set, the extreme signed
/// indicator norms over the sign family and the vectors attaining them.
struct LevelCache {
    sets: Vec<IndexSet>,
    /// per set: (largest norm over signs, attaining vector)
    hi: Vec<(f64, SparseVector)>,
    /// per set: (smallest norm over signs, attaining vector)
    lo: Vec<(f64, SparseVector)>,
}

#[derive(Clone, Copy, PartialEq)]
enum SignFamily {
    /// All 2^k real sign patterns: exhaustive over the real scalars.
    RealFull,
    /// Eighth-roots-of-unity grid: a lower bound in the complex scalars.
    ComplexGrid,
    /// The single all-ones pattern (unsigned democracy).
    AllOnes,
}

fn sign_family_for(space: &Space) -> SignFamily {
    match space.field() {
        Field::Real => SignFamily::RealFull,
        Field::Complex => SignFamily::ComplexGrid,
    }
}

fn mode_for(family: SignFamily) -> Mode {
    match family {
        SignFamily::ComplexGrid => Mode::LowerBound,
        _ => Mode::Exact,
    }
}

fn patterns_for(set: &IndexSet, family: SignFamily) -> Vec<SignPattern> {
    match family {
        SignFamily::RealFull => real_sign_patterns(set),
        SignFamily::ComplexGrid => crate::core::complex_sign_patterns(set),
        SignFamily::AllOnes => vec![SignPattern::all_ones(set)],
    }
}

fn build_level(
    space: &Space,
    window: &IndexSet,
    k: usize,
    family: SignFamily,
    jobs: usize,
    budget: &mut WorkBudget,
) -> Result<LevelCache> {
    let sets: Vec<IndexSet> = k_subsets(window.as_slice(), k)
        .into_iter()
        .map(IndexSet::from_sorted)
        .collect();
    let per_set: u64 = match family {
        SignFamily::RealFull => 1u64 << k,
        SignFamily::ComplexGrid => 8u64.pow(k as u32),
        SignFamily::AllOnes => 1,
    };
    budget.charge((sets.len() as u64).saturating_mul(per_set))?;

    let extremes = parallel_fill(sets.len(), jobs, |i| {
        let set = &sets[i];
        let mut hi: Option<(f64, SparseVector)> = None;
        let mut lo: Option<(f64, SparseVector)> = None;
        for pat in patterns_for(set, family) {
            let v = pat.indicator(set);
            let n = space.norm_unchecked(&v.packed());
            if hi.as_ref().map_or(true, |(b, _)| n > *b) {
                hi = Some((n, v.clone()));
            }
            if lo.as_ref().map_or(true, |(b, _)| n < *b) {
                lo = Some((n, v));
            }
        }
        (hi.unwrap(), lo.unwrap())
    });
    let mut hi = Vec::with_capacity(sets.len());
    let mut lo = Vec::with_capacity(sets.len());
    for (h, l) in extremes {
        hi.push(h);
        lo.push(l);
    }
    Ok(LevelCache { sets, hi, lo })
}

fn build_levels(
    space: &Space,
    window: &IndexSet,
    m: usize,
    family: SignFamily,
    jobs: usize,
    budget: &mut WorkBudget,
) -> Result<Vec<LevelCache>> {
    (1..=m.min(window.len()))
        .map(|k| build_level(space, window, k, family, jobs, budget))
        .collect()
}

/// Turns per-cardinality level maxima into a table: value at m is the max
/// over k <= m, so every table built this way is monotone in m.
fn prefix_table(
    name: &str,
    mode: Mode,
    window: &IndexSet,
    m: usize,
    levels: Vec<Option<(f64, ParamWitness)>>,
) -> ParamTable {
    let mut values = BTreeMap::new();
    let mut witnesses = BTreeMap::new();
    let mut best: Option<(f64, ParamWitness)> = None;
    for mp in 1..=m {
        if let Some(Some((v, w))) = levels.get(mp - 1) {
            if best.as_ref().map_or(true, |(b, _)| *v > *b) {
                best = Some((*v, w.clone()));
            }
        }
        match &best {
            Some((v, w)) => {
                values.insert(mp, Some(*v));
                witnesses.insert(mp, w.clone());
            }
            None => {
                values.insert(mp, None);
            }
        }
    }
    ParamTable {
        name: name.into(),
        mode,
        window: window.clone(),
        values,
        witnesses,
    }
}

// ---------------------------------------------------------------------------
// democracy sweeps

fn democracy_sweep(
    space: &Space,
    m: usize,
    window: &IndexSet,
    family: SignFamily,
    jobs: usize,
    budget: u64,
) -> Result<(ParamTable, ParamTable)> {
    check_window(space, window)?;
    let mut budget = WorkBudget::new(budget);
    let levels = build_levels(space, window, m, family, jobs, &mut budget)?;
    let (joint_name, disjoint_name) = match family {
        SignFamily::AllOnes => ("mu", "mu_d"),
        _ => ("mu_tilde", "mu_tilde_d"),
    };

    // Unconstrained equal-cardinality pairs decouple: the level max is the
    // largest signed norm over the smallest one.
    let mut joint_levels = Vec::new();
    for lc in &levels {
        if lc.sets.is_empty() {
            joint_levels.push(None);
            continue;
        }
        let (bi, _) = parallel_best(lc.sets.len(), jobs, |i| Some(lc.hi[i].0)).unwrap();
        let (si, _) = parallel_best(lc.sets.len(), jobs, |i| Some(-lc.lo[i].0)).unwrap();
        let value = lc.hi[bi].0 / lc.lo[si].0;
        let witness = ParamWitness::Ratio {
            numerator: lc.hi[bi].1.clone(),
            denominator: lc.lo[si].1.clone(),
        };
        joint_levels.push(Some((value, witness)));
    }

    // The disjoint variant pairs each numerator set against every disjoint
    // denominator set of the same cardinality.
    let mut disjoint_levels = Vec::new();
    for lc in &levels {
        let n = lc.sets.len();
        budget.charge((n as u64).saturating_mul(n as u64))?;
        let best = parallel_best(n * n, jobs, |cell| {
            let (i, j) = (cell / n, cell % n);
            if !lc.sets[i].is_disjoint(&lc.sets[j]) {
                return None;
            }
            Some(lc.hi[i].0 / lc.lo[j].0)
        });
        disjoint_levels.push(best.map(|(cell, v)| {
            let (i, j) = (cell / n, cell % n);
            let witness = ParamWitness::Ratio {
                numerator: lc.hi[i].1.clone(),
                denominator: lc.lo[j].1.clone(),
            };
            (v, witness)
        }));
    }

    let mode = mode_for(family);
    Ok((
        prefix_table(joint_name, mode, window, m, joint_levels),
        prefix_table(disjoint_name, mode, window, m, disjoint_levels),
    ))
}

/// Super-democracy tables: the worst signed-indicator norm ratio over
/// equal-cardinality set pairs up to size m, and the disjoint-pair variant.
pub fn super_democracy(
    space: &Space,
    m: usize,
    window: &IndexSet,
    jobs: usize,
    budget: u64,
) -> Result<(ParamTable, ParamTable)> {
    democracy_sweep(space, m, window, sign_family_for(space), jobs, budget)
}

/// Plain democracy tables: as super_democracy with all-ones signs only.
pub fn unsigned_democracy(
    space: &Space,
    m: usize,
    window: &IndexSet,
    jobs: usize,
    budget: u64,
) -> Result<(ParamTable, ParamTable)> {
    democracy_sweep(space, m, window, SignFamily::AllOnes, jobs, budget)
}

/// The alternative disjoint form: numerator sets no larger than the
/// denominator set, both within the window and disjoint. With enough
/// window room to pad the smaller set this equals the equal-cardinality
/// disjoint table, which `check_democracy_chain` verifies.
pub fn disjoint_alt_democracy(
    space: &Space,
    m: usize,
    window: &IndexSet,
    jobs: usize,
    budget: u64,
) -> Result<ParamTable> {
    check_window(space, window)?;
    let mut budget = WorkBudget::new(budget);
    let family = sign_family_for(space);
    let levels = build_levels(space, window, m, family, jobs, &mut budget)?;

    // level entry ka: numerator size kb <= ka, denominator size ka
    let mut alt_levels = Vec::new();
    for (ka, den) in levels.iter().enumerate() {
        let nd = den.sets.len() as u64;
        let mut level_best: Option<(f64, ParamWitness)> = None;
        for num in levels.iter().take(ka + 1) {
            let nn = num.sets.len();
            budget.charge(nd.saturating_mul(nn as u64))?;
            let best = parallel_best(nn * den.sets.len(), jobs, |cell| {
                let (i, j) = (cell / den.sets.len(), cell % den.sets.len());
                if !num.sets[i].is_disjoint(&den.sets[j]) {
                    return None;
                }
                Some(num.hi[i].0 / den.lo[j].0)
            });
            if let Some((cell, v)) = best {
                let (i, j) = (cell / den.sets.len(), cell % den.sets.len());
                if level_best.as_ref().map_or(true, |(b, _)| v > *b) {
                    level_best = Some((
                        v,
                        ParamWitness::Ratio {
                            numerator: num.hi[i].1.clone(),
                            denominator: den.lo[j].1.clone(),
                        },
                    ));
                }
            }
        }
        alt_levels.push(level_best);
    }
    Ok(prefix_table(
        "mu_tilde_d_alt",
        mode_for(family),
        window,
        m,
        alt_levels,
    ))
}

/// Constant-coefficient quasi-greedy parameter: worst ratio of a signed
/// indicator over a SUBSET of its support to the full signed indicator,
/// the signs inherited from the larger set.
pub fn gamma_cc(
    space: &Space,
    m: usize,
    window: &IndexSet,
    jobs: usize,
    budget: u64,
) -> Result<ParamTable> {
    check_window(space, window)?;
    if space.field() != Field::Real {
        return Err(GlabError::Unsupported(
            "the constant-coefficient quasi-greedy sweep needs a real scalar field".into(),
        ));
    }
    let mut budget = WorkBudget::new(budget);

    let mut levels = Vec::new();
    for k in 1..=m.min(window.len()) {
        let sets: Vec<IndexSet> = k_subsets(window.as_slice(), k)
            .into_iter()
            .map(IndexSet::from_sorted)
            .collect();
        // per (A, signs): 2^k - 1 nonempty subsets, each one norm eval
        budget.charge((sets.len() as u64) << (2 * k))?;
        let cells: Vec<(usize, usize)> = (0..sets.len())
            .flat_map(|si| (0..(1usize << k)).map(move |pi| (si, pi)))
            .collect();
        let evaluated = parallel_fill(cells.len(), jobs, |ci| {
            let (si, pi) = cells[ci];
            let a = &sets[si];
            let pats = real_sign_patterns(a);
            let pat = &pats[pi];
            let den_vec = pat.indicator(a);
            let den = space.norm_unchecked(&den_vec.packed());
            let idx: Vec<u32> = a.iter().collect();
            let mut best: Option<(f64, SparseVector)> = None;
            for bits in 1u32..(1 << k) {
                let sub = IndexSet::from_sorted(
                    idx.iter()
                        .enumerate()
                        .filter(|(b, _)| bits >> b & 1 == 1)
                        .map(|(_, &n)| n)
                        .collect(),
                );
                let num_vec = den_vec.restrict(&sub);
                let num = space.norm_unchecked(&num_vec.packed());
                let r = num / den;
                if best.as_ref().map_or(true, |(b, _)| r > *b) {
                    best = Some((r, num_vec));
                }
            }
            let (r, num_vec) = best.unwrap();
            (r, num_vec, den_vec)
        });
        let best = parallel_best(evaluated.len(), jobs, |i| Some(evaluated[i].0));
        levels.push(best.map(|(i, v)| {
            let (_, num, den) = &evaluated[i];
            (
                v,
                ParamWitness::Ratio {
                    numerator: num.clone(),
                    denominator: den.clone(),
                },
            )
        }));
    }
    Ok(prefix_table("gamma", Mode::Exact, window, m, levels))
}

/// Largest unsigned indicator norm over sets of size at most m.
pub fn fundamental_function(
    space: &Space,
    m: usize,
    window: &IndexSet,
    jobs: usize,
    budget: u64,
) -> Result<ParamTable> {
    check_window(space, window)?;
    let mut budget = WorkBudget::new(budget);
    let levels = build_levels(space, window, m, SignFamily::AllOnes, jobs, &mut budget)?;
    let out = levels
        .iter()
        .map(|lc| {
            parallel_best(lc.sets.len(), jobs, |i| Some(lc.hi[i].0)).map(|(i, v)| {
                (
                    v,
                    ParamWitness::Norm {
                        vector: lc.hi[i].1.clone(),
                    },
                )
            })
        })
        .collect();
    Ok(prefix_table("phi_r", Mode::Exact, window, m, out))
}

// ---------------------------------------------------------------------------
// gap-separated ratios

/// min(far) > c * max(near), in the basis enumeration order.
fn gap_separated(far: &IndexSet, near: &IndexSet, c: u32) -> bool {
    match (far.min(), near.max()) {
        (Some(lo), Some(hi)) => u64::from(lo) > u64::from(c) * u64::from(hi),
        _ => false,
    }
}

/// Two-sided ratio of a separated pair, oriented so the reported value is
/// the larger of the two one-sided ratios.
fn two_sided(
    lc: &LevelCache,
    i: usize,
    j: usize,
) -> (f64, bool) {
    let fwd = lc.hi[i].0 / lc.lo[j].0;
    let rev = lc.hi[j].0 / lc.lo[i].0;
    if fwd >= rev {
        (fwd, true)
    } else {
        (rev, false)
    }
}

/// Worst two-sided signed-indicator ratio over equal-cardinality pairs
/// separated by the multiplicative index gap c.
pub fn theta_sep(
    space: &Space,
    m: usize,
    c: u32,
    window: &IndexSet,
    jobs: usize,
    budget: u64,
) -> Result<ParamTable> {
    if c < 2 {
        return Err(GlabError::Invalid(format!(
            "separation factor must be an integer >= 2, got {c}"
        )));
    }
    check_window(space, window)?;
    let mut budget = WorkBudget::new(budget);
    let family = sign_family_for(space);
    let levels = build_levels(space, window, m, family, jobs, &mut budget)?;

    let mut out = Vec::new();
    for lc in &levels {
        let n = lc.sets.len();
        budget.charge((n as u64).saturating_mul(n as u64))?;
        // ordered (far, near) pairs; the separation can hold in only one
        // orientation, so each unordered pair is seen once
        let best = parallel_best(n * n, jobs, |cell| {
            let (i, j) = (cell / n, cell % n);
            if !gap_separated(&lc.sets[i], &lc.sets[j], c) {
                return None;
            }
            Some(two_sided(lc, i, j).0)
        });
        out.push(best.map(|(cell, v)| {
            let (i, j) = (cell / n, cell % n);
            let (_, far_on_top) = two_sided(lc, i, j);
            let (ni, nj) = if far_on_top { (i, j) } else { (j, i) };
            (
                v,
                ParamWitness::Ratio {
                    numerator: lc.hi[ni].1.clone(),
                    denominator: lc.lo[nj].1.clone(),
                },
            )
        }));
    }
    let mode = match family {
        SignFamily::ComplexGrid => Mode::LowerBound,
        _ => Mode::Exact,
    };
    Ok(prefix_table(
        &format!("theta_c{c}"),
        mode,
        window,
        m,
        out,
    ))
}

/// Separation-insensitive variant: sup over sets A of the min over the
/// given separation factors of A's worst two-sided ratio. Only sets whose
/// partner family is nonempty at EVERY listed factor participate, which is
/// the semantics under which the reported value never exceeds any
/// single-factor table. The finite factor list upper-bounds the true inner
/// inf, hence the mode.
pub fn theta_inf(
    space: &Space,
    m: usize,
    window: &IndexSet,
    c_list: &[u32],
    jobs: usize,
    budget: u64,
) -> Result<ParamTable> {
    if c_list.is_empty() {
        return Err(GlabError::Invalid("separation factor list is empty".into()));
    }
    if let Some(&bad) = c_list.iter().find(|&&c| c < 2) {
        return Err(GlabError::Invalid(format!(
            "separation factor must be an integer >= 2, got {bad}"
        )));
    }
    check_window(space, window)?;
    let mut budget = WorkBudget::new(budget);
    let family = sign_family_for(space);
    let levels = build_levels(space, window, m, family, jobs, &mut budget)?;

    let mut out = Vec::new();
    for lc in &levels {
        let n = lc.sets.len();
        budget.charge((n as u64* n as u64).saturating_mul(c_list.len() as u64))?;
        // per set A: min over factors of the worst partner ratio, provided
        // every factor admits at least one partner inside the window
        let per_set = parallel_fill(n, jobs, |i| {
            let mut inner: Option<(f64, usize, bool)> = None; // (value, partner, far_on_top)
            for &c in c_list {
                let mut worst: Option<(f64, usize, bool)> = None;
                for j in 0..n {
                    let separated = gap_separated(&lc.sets[i], &lc.sets[j], c)
                        || gap_separated(&lc.sets[j], &lc.sets[i], c);
                    if !separated {
                        continue;
                    }
                    let (v, first_on_top) = two_sided(lc, i, j);
                    if worst.as_ref().map_or(true, |(b, _, _)| v > *b) {
                        worst = Some((v, j, first_on_top));
                    }
                }
                let Some(w) = worst else { return None };
                if inner.as_ref().map_or(true, |(b, _, _)| w.0 < *b) {
                    inner = Some(w);
                }
            }
            inner
        });
        let best = parallel_best(n, jobs, |i| per_set[i].map(|(v, _, _)| v));
        out.push(best.map(|(i, v)| {
            let (_, j, first_on_top) = per_set[i].unwrap();
            let (ni, nj) = if first_on_top { (i, j) } else { (j, i) };
            (
                v,
                ParamWitness::Ratio {
                    numerator: lc.hi[ni].1.clone(),
                    denominator: lc.lo[nj].1.clone(),
                },
            )
        }));
    }
    Ok(prefix_table(
        "theta_inf",
        Mode::UpperBoundOfInnerInf,
        window,
        m,
        out,
    ))
}

// ---------------------------------------------------------------------------
// family-based operator estimates

/// Deterministic witness family: signed alternating and constant prefix
/// indicators over the window, every signed indicator of support up to m,
/// and seeded random sparse vectors with geometric coefficient decay.
/// These reach the known extremal behavior on all implemented spaces
/// (constant prefixes drive the difference-basis conditionality, alternating
/// patterns the summing one, decaying vectors exercise the tie-free path).
pub fn base_family(
    space: &Space,
    m: usize,
    window: &IndexSet,
    seed: u64,
    random_count: usize,
) -> Result<Vec<SparseVector>> {
    check_window(space, window)?;
    let idx: Vec<u32> = window.iter().collect();
    let mut family = Vec::new();

    // +-alternating and constant prefix indicators
    for j in 1..=idx.len() {
        let mut alternating = SparseVector::new();
        let mut constant = SparseVector::new();
        for (i, &n) in idx[..j].iter().enumerate() {
            alternating.set(n, crate::core::real(if i % 2 == 0 { 1.0 } else { -1.0 }))?;
            constant.set(n, crate::core::real(1.0))?;
        }
        family.push(alternating);
        if j > 1 {
            family.push(constant);
        }
    }

    // every signed indicator with support size <= m
    for k in 1..=m.min(idx.len()) {
        for set in k_subsets(&idx, k) {
            let set = IndexSet::from_sorted(set);
            for pat in real_sign_patterns(&set) {
                family.push(pat.indicator(&set));
            }
        }
    }

    // seeded random sparse vectors, geometric decay, distinct moduli
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let complex = space.field() == Field::Complex;
    for r in 0..random_count {
        let smax = idx.len().min(m + 3).max(1);
        let s = rng.gen_range(1..=smax);
        let mut pool = idx.clone();
        for j in 0..s {
            let swap = rng.gen_range(j..pool.len());
            pool.swap(j, swap);
        }
        let decay: f64 = [0.5, 0.7, 0.9][r % 3];
        let mut v = SparseVector::new();
        for (j, &n) in pool[..s].iter().enumerate() {
            let magnitude = decay.powi(j as i32);
            let phase = if complex {
                let eighth = std::f64::consts::FRAC_PI_4 * rng.gen_range(0..8) as f64;
                Coef::new(eighth.cos(), eighth.sin())
            } else if rng.gen_bool(0.5) {
                crate::core::real(1.0)
            } else {
                crate::core::real(-1.0)
            };
            v.set(n, phase * magnitude)?;
        }
        if !v.is_zero() {
            family.push(v);
        }
    }
    Ok(family)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct QuasiGreedyTables {
    pub g: ParamTable,
    pub g_c: ParamTable,
    pub g_tilde: ParamTable,
}

/// Per family vector: the greedy sets of every cardinality up to m.
fn enumerate_greedy_levels(
    space: &Space,
    m: usize,
    family: &[SparseVector],
) -> Result<Vec<Vec<Vec<IndexSet>>>> {
    let mut all = Vec::with_capacity(family.len());
    for x in family {
        space.validate(x)?;
        if x.is_zero() {
            return Err(GlabError::Invalid(
                "witness family contains the zero vector".into(),
            ));
        }
        let mut per_k = Vec::with_capacity(m + 1);
        for k in 0..=m {
            per_k.push(greedy_sets(x, k, space.window(), 1.0)?);
        }
        all.push(per_k);
    }
    Ok(all)
}

struct LevelBest {
    per_level: Vec<Option<(f64, ParamWitness)>>,
}

impl LevelBest {
    fn new(m: usize) -> Self {
        Self {
            per_level: vec![None; m],
        }
    }

    /// Levels are 1-based: offer(k, ..) feeds the k-th entry.
    fn offer(&mut self, k: usize, value: f64, witness: impl FnOnce() -> ParamWitness) {
        if k == 0 {
            return;
        }
        let slot = &mut self.per_level[k - 1];
        if slot.as_ref().map_or(true, |(b, _)| value > *b) {
            *slot = Some((value, witness()));
        }
    }

    fn merge(&mut self, other: LevelBest) {
        for (mine, theirs) in self.per_level.iter_mut().zip(other.per_level) {
            if let Some((v, w)) = theirs {
                if mine.as_ref().map_or(true, |(b, _)| v > *b) {
                    *mine = Some((v, w));
                }
            }
        }
    }
}

/// Quasi-greedy estimates over a witness family: for every family vector
/// and every greedy set of cardinality up to m, the restriction ratio (g),
/// the complement ratio (g_c, with the empty set supplying its floor of 1),
/// and the nested-pair difference ratio (g_tilde, a greedy subset removed
/// from a larger greedy set).
pub fn quasi_greedy_est(
    space: &Space,
    m: usize,
    family: &[SparseVector],
    jobs: usize,
    budget: u64,
) -> Result<QuasiGreedyTables> {
    if family.is_empty() {
        return Err(GlabError::Invalid("witness family is empty".into()));
    }
    let mut budget = WorkBudget::new(budget);
    let sets = enumerate_greedy_levels(space, m, family)?;
    for per_k in &sets {
        let counts: Vec<u64> = per_k.iter().map(|s| s.len() as u64).collect();
        let pair_work: u64 = (0..=m)
            .map(|k| counts[k] * counts[..=k].iter().sum::<u64>())
            .sum();
        budget.charge(counts.iter().sum::<u64>() * 2 + pair_work + 1)?;
    }

    let per_vector = parallel_fill(family.len(), jobs, |xi| {
        let x = &family[xi];
        let per_k = &sets[xi];
        let total = space.norm_unchecked(&x.packed());
        let mut g = LevelBest::new(m);
        let mut g_c = LevelBest::new(m);
        let mut g_tilde = LevelBest::new(m);
        for k in 0..=m {
            for outer in &per_k[k] {
                if k >= 1 {
                    let kept = space.norm_unchecked(&x.restrict(outer).packed()) / total;
                    g.offer(k, kept, || ParamWitness::Restriction {
                        x: x.clone(),
                        set: outer.clone(),
                    });
                    g_tilde.offer(k, kept, || ParamWitness::NestedDifference {
                        x: x.clone(),
                        outer: outer.clone(),
                        inner: IndexSet::empty(),
                    });
                }
                let rest = space.norm_unchecked(&x.restrict_complement(outer).packed()) / total;
                // the empty greedy set keeps everything: ratio exactly 1
                g_c.offer(k.max(1), rest, || ParamWitness::Complement {
                    x: x.clone(),
                    set: outer.clone(),
                });
                for kp in 1..=k {
                    for inner in &per_k[kp] {
                        if inner == outer || !inner.is_subset_of(outer) {
                            continue;
                        }
                        let diff = outer.difference(inner);
                        let v = space.norm_unchecked(&x.restrict(&diff).packed()) / total;
                        g_tilde.offer(k, v, || ParamWitness::NestedDifference {
                            x: x.clone(),
                            outer: outer.clone(),
                            inner: inner.clone(),
                        });
                    }
                }
            }
        }
        (g, g_c, g_tilde)
    });

    let mut g = LevelBest::new(m);
    let mut g_c = LevelBest::new(m);
    let mut g_tilde = LevelBest::new(m);
    for (a, b, c) in per_vector {
        g.merge(a);
        g_c.merge(b);
        g_tilde.merge(c);
    }
    let window = IndexSet::range(1, space.window());
    Ok(QuasiGreedyTables {
        g: prefix_table("g", Mode::LowerBound, &window, m, g.per_level),
        g_c: prefix_table("g_c", Mode::LowerBound, &window, m, g_c.per_level),
        g_tilde: prefix_table("g_tilde", Mode::LowerBound, &window, m, g_tilde.per_level),
    })
}

/// Conditionality estimates over a witness family: restriction and
/// complement ratios over arbitrary sets of size up to m, adversarially
/// chosen per vector as the best of its greedy sets, window prefixes, and
/// every-other-index combs.
pub fn conditionality_est(
    space: &Space,
    m: usize,
    family: &[SparseVector],
    jobs: usize,
    budget: u64,
) -> Result<(ParamTable, ParamTable)> {
    if family.is_empty() {
        return Err(GlabError::Invalid("witness family is empty".into()));
    }
    let mut budget = WorkBudget::new(budget);
    let greedy = enumerate_greedy_levels(space, m, family)?;
    let window = space.window();

    let mut candidate_sets: Vec<Vec<Vec<IndexSet>>> = Vec::with_capacity(family.len());
    for per_k in &greedy {
        let mut per_vec = Vec::with_capacity(m + 1);
        for (k, sets) in per_k.iter().enumerate() {
            let mut cands = sets.clone();
            if k >= 1 && k as u32 <= window {
                cands.push(IndexSet::range(1, k as u32));
                for start in [1u32, 2u32] {
                    let comb: Vec<u32> = (0..k as u32)
                        .map(|i| start + 2 * i)
                        .take_while(|&n| n <= window)
                        .collect();
                    if comb.len() == k {
                        cands.push(IndexSet::from_sorted(comb));
                    }
                }
            }
            per_vec.push(cands);
        }
        budget.charge(per_vec.iter().map(|c| 2 * c.len() as u64).sum::<u64>() + 1)?;
        candidate_sets.push(per_vec);
    }

    let per_vector = parallel_fill(family.len(), jobs, |xi| {
        let x = &family[xi];
        let total = space.norm_unchecked(&x.packed());
        let mut kt = LevelBest::new(m);
        let mut kc = LevelBest::new(m);
        for (k, cands) in candidate_sets[xi].iter().enumerate() {
            for set in cands {
                if k >= 1 {
                    let kept = space.norm_unchecked(&x.restrict(set).packed()) / total;
                    kt.offer(k, kept, || ParamWitness::Restriction {
                        x: x.clone(),
                        set: set.clone(),
                    });
                }
                let rest = space.norm_unchecked(&x.restrict_complement(set).packed()) / total;
                kc.offer(k.max(1), rest, || ParamWitness::Complement {
                    x: x.clone(),
                    set: set.clone(),
                });
            }
        }
        (kt, kc)
    });

    let mut kt = LevelBest::new(m);
    let mut kc = LevelBest::new(m);
    for (a, b) in per_vector {
        kt.merge(a);
        kc.merge(b);
    }
    let window = IndexSet::range(1, space.window());
    Ok((
        prefix_table("k", Mode::LowerBound, &window, m, kt.per_level),
        prefix_table("k_c", Mode::LowerBound, &window, m, kc.per_level),
    ))
}

// ---------------------------------------------------------------------------
// admissibility

/// Smallest factor rho-hat such that the norm of the part supported on A
/// bounds by rho-hat times the whole, over vectors supported on A plus any
/// far block B in [n0, max window] with |B| <= min(|A|, m). Coefficients
/// sweep every real sign pattern plus seeded random draws, so the result
/// is a lower bound for the true admissibility constant. The empty B keeps
/// the margin at least 1.
pub fn admissibility_margin(
    space: &Space,
    a: &IndexSet,
    n0: u32,
    m: usize,
    window: &IndexSet,
    seed: u64,
) -> Result<f64> {
    check_window(space, window)?;
    if a.is_empty() {
        return Err(GlabError::Invalid("the fixed block is empty".into()));
    }
    let amax = a.max().unwrap();
    if n0 <= amax {
        return Err(GlabError::Invalid(format!(
            "n0 = {n0} must lie beyond the fixed block (max index {amax})"
        )));
    }
    let wmax = window.max().unwrap();
    if wmax < n0 {
        return Err(GlabError::Invalid(format!(
            "window ends at {wmax}, before n0 = {n0}"
        )));
    }

    let far: Vec<u32> = window.iter().filter(|&n| n >= n0).collect();
    let cap = a.len().min(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margin: f64 = 0.0;
    for bsize in 0..=cap.min(far.len()) {
        for b in k_subsets(&far, bsize) {
            let support = a.union(&IndexSet::from_sorted(b));
            let mut samples: Vec<SparseVector> = Vec::new();
            if support.len() <= 12 {
                for pat in real_sign_patterns(&support) {
                    samples.push(pat.indicator(&support));
                }
            }
            for _ in 0..16 {
                let mut z = SparseVector::new();
                for n in support.iter() {
                    z.set(n, crate::core::real(rng.gen_range(-1.0..=1.0)))?;
                }
                if !z.is_zero() {
                    samples.push(z);
                }
            }
            for z in &samples {
                let whole = space.norm_unchecked(&z.packed());
                if whole < 1e-300 {
                    continue;
                }
                let part = space.norm_unchecked(&z.restrict(a).packed());
                margin = margin.max(part / whole);
            }
        }
    }
    Ok(margin)
}

// ---------------------------------------------------------------------------
// the democracy chain report

#[derive(Debug, Clone, serde::Serialize)]
pub struct ChainLine {
    pub name: String,
    pub m: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    /// True when the window is too small for the comparison to be a
    /// theorem (not enough room to pad sets), or an input table is itself
    /// an estimate; such lines are reported but never fail a check hard.
    pub advisory: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ChainReport {
    pub lines: Vec<ChainLine>,
}

impl ChainReport {
    pub fn hard_violations(&self) -> Vec<&ChainLine> {
        self.lines
            .iter()
            .filter(|l| !l.satisfied && !l.advisory)
            .collect()
    }

    pub fn all_satisfied(&self) -> bool {
        self.lines.iter().all(|l| l.satisfied)
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DemocracyTables {
    pub mu_tilde: ParamTable,
    pub mu_tilde_d: ParamTable,
    pub mu_tilde_d_alt: ParamTable,
    pub mu: ParamTable,
    pub mu_d: ParamTable,
    pub gamma: Option<ParamTable>,
}

/// Computes the democracy tables and checks the comparison lattice between
/// them: the sup-family inclusions, the squared-disjoint bound, the
/// constant-coefficient comparison, the alternative-form equality, and the
/// two basis-constant comparisons where the basis constant is known.
pub fn check_democracy_chain(
    space: &Space,
    m: usize,
    window: &IndexSet,
    jobs: usize,
    budget: u64,
) -> Result<(DemocracyTables, ChainReport)> {
    let (mu_tilde, mu_tilde_d) = super_democracy(space, m, window, jobs, budget)?;
    let mu_tilde_d_alt = disjoint_alt_democracy(space, m, window, jobs, budget)?;
    let (mu, mu_d) = unsigned_democracy(space, m, window, jobs, budget)?;
    let gamma = match space.field() {
        Field::Real => Some(gamma_cc(space, m, window, jobs, budget)?),
        Field::Complex => None,
    };

    let estimated_signs = space.field() == Field::Complex;
    let kappa = match space.field() {
        Field::Real => 1.0,
        Field::Complex => 2.0,
    };
    let w = window.len();
    let mut lines = Vec::new();
    let mut push = |name: &str, mp: usize, lhs: Option<f64>, rhs: Option<f64>, advisory: bool| {
        let (Some(lhs), Some(rhs)) = (lhs, rhs) else {
            return;
        };
        lines.push(ChainLine {
            name: name.into(),
            m: mp,
            lhs,
            rhs,
            satisfied: lhs <= rhs + 1e-9,
            advisory,
        });
    };

    for mp in 1..=m {
        let mt = mu_tilde.value(mp);
        let mtd = mu_tilde_d.value(mp);
        let alt = mu_tilde_d_alt.value(mp);
        let mu_v = mu.value(mp);
        let mud_v = mu_d.value(mp);

        push("mu_d <= mu", mp, mud_v, mu_v, false);
        push("mu <= mu_tilde", mp, mu_v, mt, false);
        push("mu_tilde_d <= mu_tilde", mp, mtd, mt, false);
        // squared-disjoint comparison: the proof pads with a third set of
        // the same size, which needs 3m indices of room
        push(
            "mu_tilde <= mu_tilde_d^2",
            mp,
            mt,
            mtd.map(|v| v * v),
            estimated_signs || 3 * mp > w,
        );
        if let Some(g) = gamma.as_ref().and_then(|t| t.value(mp)) {
            push(
                "mu_tilde <= (1+2k) gamma mu_tilde_d",
                mp,
                mt,
                mtd.map(|v| (1.0 + 2.0 * kappa) * g * v),
                estimated_signs,
            );
        }
        // alternative disjoint form: always at least the equal-cardinality
        // value; equal to it when the window can pad the smaller set
        push("mu_tilde_d <= alt form", mp, mtd, alt, false);
        push(
            "alt form == mu_tilde_d",
            mp,
            alt,
            mtd.map(|v| v + 1e-12),
            2 * mp > w,
        );
        if let Some(kb) = space.basis_constant() {
            let x = space.biorth_constant();
            push(
                "mu_tilde <= 2(Kb+1) mu_tilde_d + x Kb",
                mp,
                mt,
                mtd.map(|v| 2.0 * (kb + 1.0) * v + x * kb),
                estimated_signs || 2 * mp > w,
            );
            push(
                "mu <= 2(Kb+1) Kb mu_d + x Kb",
                mp,
                mu_v,
                mud_v.map(|v| 2.0 * (kb + 1.0) * kb * v + x * kb),
                2 * mp > w,
            );
        }
    }

    Ok((
        DemocracyTables {
            mu_tilde,
            mu_tilde_d,
            mu_tilde_d_alt,
            mu,
            mu_d,
            gamma,
        },
        ChainReport { lines },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::real;

    fn win(space: &Space) -> IndexSet {
        IndexSet::range(1, space.window())
    }

    /// Summing norm written independently of the Space implementation:
    /// largest absolute prefix sum of a dense coefficient slice.
    fn prefix_sup(coefs: &[f64]) -> f64 {
        let mut run = 0.0;
        let mut best: f64 = 0.0;
        for c in coefs {
            run += c;
            best = best.max(f64::abs(run));
        }
        best
    }

    #[test]
    fn summing_super_democracy_window8_is_m() {
        // largest signed indicator norm of size k is k (all plus), the
        // smallest is 1 (alternating), and disjoint pairs fit in [1,8]
        let space = Space::summing(8).unwrap();
        let (mt, mtd) = super_democracy(&space, 3, &win(&space), 1, 0).unwrap();
        for m in 1..=3 {
            assert_eq!(mt.value(m), Some(m as f64));
            assert_eq!(mtd.value(m), Some(m as f64));
        }
        mt.verify(&space).unwrap();
        mtd.verify(&space).unwrap();
    }

    #[test]
    fn summing_super_democracy_matches_bitmask_oracle() {
        // second, independently coded enumerator over [1,8], m = 2:
        // bitmask sets, bitmask signs, inline prefix-sum norm
        let space = Space::summing(8).unwrap();
        let (mt, _) = super_democracy(&space, 2, &win(&space), 1, 0).unwrap();
        let mut worst = 0.0f64;
        let mut norms_by_card: Vec<Vec<f64>> = vec![Vec::new(); 3];
        for bits in 1u32..256 {
            let card = bits.count_ones() as usize;
            if card > 2 {
                continue;
            }
            let idx: Vec<usize> = (0..8).filter(|i| bits >> i & 1 == 1).collect();
            for signs in 0u32..(1 << card) {
                let mut dense = [0.0; 8];
                for (b, &i) in idx.iter().enumerate() {
                    dense[i] = if signs >> b & 1 == 1 { -1.0 } else { 1.0 };
                }
                norms_by_card[card].push(prefix_sup(&dense));
            }
        }
        for card in 1..=2 {
            let hi = norms_by_card[card].iter().cloned().fold(0.0, f64::max);
            let lo = norms_by_card[card].iter().cloned().fold(f64::MAX, f64::min);
            worst = worst.max(hi / lo);
        }
        assert!((mt.value(2).unwrap() - worst).abs() < 1e-12);
        assert_eq!(worst, 2.0); // freeze the oracle itself
    }

    #[test]
    fn lp_democracy_tables_are_one() {
        for p in [1.0, 2.0] {
            let space = Space::lp(p, 8).unwrap();
            let (mt, mtd) = super_democracy(&space, 3, &win(&space), 1, 0).unwrap();
            for m in 1..=3 {
                assert!((mt.value(m).unwrap() - 1.0).abs() < 1e-12);
                assert!((mtd.value(m).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn summing_unsigned_democracy_is_one() {
        // every unsigned indicator of size k has prefix-sum norm exactly k
        let space = Space::summing(8).unwrap();
        let (mu, mud) = unsigned_democracy(&space, 3, &win(&space), 1, 0).unwrap();
        for m in 1..=3 {
            assert_eq!(mu.value(m), Some(1.0));
            assert_eq!(mud.value(m), Some(1.0));
        }
    }

    #[test]
    fn difference_super_democracy_is_2m() {
        // isolated spikes at indices >= 2 cost 2 each; the constant prefix
        // block costs exactly 1
        let space = Space::difference(8).unwrap();
        let (mt, mtd) = super_democracy(&space, 3, &win(&space), 1, 0).unwrap();
        for m in 1..=3 {
            assert_eq!(mt.value(m), Some(2.0 * m as f64));
            assert_eq!(mtd.value(m), Some(2.0 * m as f64));
        }
    }

    #[test]
    fn gamma_summing_window6_frozen_and_oracle_checked() {
        let space = Space::summing(6).unwrap();
        let window = IndexSet::range(1, 6);
        let gamma = gamma_cc(&space, 3, &window, 1, 0).unwrap();
        // m = 1, 2 cannot beat 1; m = 3 reaches 2 via (+,-,+) keeping the
        // outer plus pair
        assert_eq!(gamma.value(1), Some(1.0));
        assert_eq!(gamma.value(2), Some(1.0));
        assert_eq!(gamma.value(3), Some(2.0));
        gamma.verify(&space).unwrap();

        // independent bitmask enumerator for the same sweep
        let mut worst = [0.0f64; 4];
        for bits in 1u32..64 {
            let card = bits.count_ones() as usize;
            if card > 3 {
                continue;
            }
            let idx: Vec<usize> = (0..6).filter(|i| bits >> i & 1 == 1).collect();
            for signs in 0u32..(1 << card) {
                let mut dense = [0.0; 6];
                for (b, &i) in idx.iter().enumerate() {
                    dense[i] = if signs >> b & 1 == 1 { -1.0 } else { 1.0 };
                }
                let den = prefix_sup(&dense);
                for sub in 1u32..(1 << card) {
                    let mut sub_dense = [0.0; 6];
                    for (b, &i) in idx.iter().enumerate() {
                        if sub >> b & 1 == 1 {
                            sub_dense[i] = dense[i];
                        }
                    }
                    worst[card] = worst[card].max(prefix_sup(&sub_dense) / den);
                }
            }
        }
        let mut running = 0.0f64;
        for m in 1..=3 {
            running = running.max(worst[m]);
            assert!((gamma.value(m).unwrap() - running).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_lp_is_one_and_complex_rejected() {
        let space = Space::lp(2.0, 8).unwrap();
        let gamma = gamma_cc(&space, 3, &win(&space), 1, 0).unwrap();
        for m in 1..=3 {
            assert!((gamma.value(m).unwrap() - 1.0).abs() < 1e-12);
        }
        let trig = Space::trig(2.0, 4, None).unwrap();
        assert!(matches!(
            gamma_cc(&trig, 1, &IndexSet::range(1, 4), 1, 0),
            Err(GlabError::Unsupported(_))
        ));
    }

    #[test]
    fn quasi_greedy_l1_tables_are_identically_one() {
        let space = Space::lp(1.0, 8).unwrap();
        let family = base_family(&space, 3, &win(&space), 7, 12).unwrap();
        let qg = quasi_greedy_est(&space, 3, &family, 1, 0).unwrap();
        for m in 1..=3 {
            assert!((qg.g.value(m).unwrap() - 1.0).abs() < 1e-12);
            assert!((qg.g_c.value(m).unwrap() - 1.0).abs() < 1e-12);
            assert!((qg.g_tilde.value(m).unwrap() - 1.0).abs() < 1e-12);
        }
        qg.g.verify(&space).unwrap();
        qg.g_tilde.verify(&space).unwrap();
    }

    #[test]
    fn quasi_greedy_summing_grows_linearly() {
        // restricting the alternating +-1 prefix to its plus positions
        // turns norm 1 into norm m
        let space = Space::summing(8).unwrap();
        let family = base_family(&space, 4, &win(&space), 7, 12).unwrap();
        let qg = quasi_greedy_est(&space, 4, &family, 1, 0).unwrap();
        for m in 1..=4 {
            assert!(qg.g.value(m).unwrap() >= m as f64 - 1e-9);
        }
    }

    #[test]
    fn nested_difference_at_most_twice_restriction() {
        for space in [Space::summing(8).unwrap(), Space::difference(8).unwrap()] {
            let family = base_family(&space, 3, &win(&space), 11, 16).unwrap();
            let qg = quasi_greedy_est(&space, 3, &family, 1, 0).unwrap();
            for m in 1..=3 {
                let g = qg.g.value(m).unwrap();
                let gt = qg.g_tilde.value(m).unwrap();
                assert!(g <= gt + 1e-12);
                assert!(gt <= 2.0 * g + 1e-12);
            }
        }
    }

    #[test]
    fn conditionality_l2_is_exactly_one() {
        let space = Space::lp(2.0, 8).unwrap();
        let family = base_family(&space, 3, &win(&space), 3, 12).unwrap();
        let (k, kc) = conditionality_est(&space, 3, &family, 1, 0).unwrap();
        for m in 1..=3 {
            assert!((k.value(m).unwrap() - 1.0).abs() < 1e-12);
            assert!((kc.value(m).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conditionality_difference_reaches_comb_ratio() {
        // the all-ones prefix of length 2m has norm 1; its every-other
        // comb restriction norms 2m-1
        let space = Space::difference(12).unwrap();
        let family = base_family(&space, 3, &win(&space), 3, 12).unwrap();
        let (k, kc) = conditionality_est(&space, 3, &family, 1, 0).unwrap();
        for m in 1..=3 {
            assert!(k.value(m).unwrap() >= (m as f64) / 2.0);
            // the sanity ceiling: complements never beat 1 + crossbound * m
            assert!(kc.value(m).unwrap() <= 1.0 + space.cross_constant() * m as f64 + 1e-9);
        }
        assert!(k.value(3).unwrap() >= 5.0 - 1e-9);
        k.verify(&space).unwrap();
    }

    #[test]
    fn theta_l2_is_one_and_nonincreasing_in_c() {
        let space = Space::lp(2.0, 12).unwrap();
        let window = IndexSet::range(1, 12);
        for c in [2, 3, 4] {
            let t = theta_sep(&space, 2, c, &window, 1, 0).unwrap();
            assert!((t.value(2).unwrap() - 1.0).abs() < 1e-12);
        }
        let summing = Space::summing(12).unwrap();
        let mut last = f64::MAX;
        for c in [2, 3, 4] {
            let t = theta_sep(&summing, 2, c, &window, 1, 0).unwrap();
            let v = t.value(2).unwrap();
            assert!(v <= last + 1e-12);
            last = v;
        }
    }

    #[test]
    fn theta_undefined_when_no_pair_fits() {
        // c = 8 in a window of 8: min(far) > 8 never holds
        let space = Space::summing(8).unwrap();
        let t = theta_sep(&space, 3, 8, &win(&space), 1, 0).unwrap();
        for m in 1..=3 {
            assert_eq!(t.values[&m], None);
        }
    }

    #[test]
    fn theta_inf_summing_window12_matches_brute_force() {
        let space = Space::summing(12).unwrap();
        let window = IndexSet::range(1, 12);
        let c_list = [2u32, 3u32];
        let table = theta_inf(&space, 2, &window, &c_list, 1, 0).unwrap();

        // brute force: all pairs of equal-cardinality bitmask sets
        let norms = |bits: u32, signs: u32, idx: &[usize]| {
            let mut dense = [0.0f64; 12];
            for (b, &i) in idx.iter().enumerate() {
                let _ = bits;
                dense[i] = if signs >> b & 1 == 1 { -1.0 } else { 1.0 };
            }
            prefix_sup(&dense)
        };
        let mut best = [None::<f64>; 3];
        let sets: Vec<u32> = (1u32..(1 << 12)).filter(|b| b.count_ones() <= 2).collect();
        for &sa in &sets {
            let ca = sa.count_ones() as usize;
            let ia: Vec<usize> = (0..12).filter(|i| sa >> i & 1 == 1).collect();
            let (hi_a, lo_a) = {
                let (mut hi, mut lo) = (0.0f64, f64::MAX);
                for s in 0..(1u32 << ca) {
                    let n = norms(sa, s, &ia);
                    hi = hi.max(n);
                    lo = lo.min(n);
                }
                (hi, lo)
            };
            let mut per_c = Vec::new();
            for &c in &c_list {
                let mut worst: Option<f64> = None;
                for &sb in &sets {
                    if sb.count_ones() != ca as u32 {
                        continue;
                    }
                    let ib: Vec<usize> = (0..12).filter(|i| sb >> i & 1 == 1).collect();
                    let min_a = ia[0] as u32 + 1;
                    let max_a = *ia.last().unwrap() as u32 + 1;
                    let min_b = ib[0] as u32 + 1;
                    let max_b = *ib.last().unwrap() as u32 + 1;
                    if !(min_a > c * max_b || min_b > c * max_a) {
                        continue;
                    }
                    let (mut hi_b, mut lo_b) = (0.0f64, f64::MAX);
                    for s in 0..(1u32 << ca) {
                        let n = norms(sb, s, &ib);
                        hi_b = hi_b.max(n);
                        lo_b = lo_b.min(n);
                    }
                    let two = (hi_a / lo_b).max(hi_b / lo_a);
                    worst = Some(worst.map_or(two, |w: f64| w.max(two)));
                }
                per_c.push(worst);
            }
            if per_c.iter().any(|w| w.is_none()) {
                continue;
            }
            let inner = per_c.into_iter().map(Option::unwrap).fold(f64::MAX, f64::min);
            let slot = &mut best[ca];
            *slot = Some(slot.map_or(inner, |b| b.max(inner)));
        }
        let mut running: Option<f64> = None;
        for m in 1..=2usize {
            if let Some(v) = best[m] {
                running = Some(running.map_or(v, |r| r.max(v)));
            }
            assert_eq!(table.values[&m].is_some(), running.is_some());
            if let (Some(got), Some(want)) = (table.value(m), running) {
                assert!((got - want).abs() < 1e-12, "m={m} got {got} want {want}");
            }
        }
        // theta_inf never exceeds any single-factor table
        for c in c_list {
            let sep = theta_sep(&space, 2, c, &window, 1, 0).unwrap();
            for m in 1..=2 {
                if let (Some(a), Some(b)) = (table.value(m), sep.value(m)) {
                    assert!(a <= b + 1e-12);
                }
            }
        }
    }

    #[test]
    fn fundamental_function_closed_forms() {
        let l1 = Space::lp(1.0, 8).unwrap();
        let l2 = Space::lp(2.0, 8).unwrap();
        let summing = Space::summing(8).unwrap();
        for m in 1..=4usize {
            assert!(
                (fundamental_function(&l1, 4, &win(&l1), 1, 0).unwrap().value(m).unwrap()
                    - m as f64)
                    .abs()
                    < 1e-12
            );
            assert!(
                (fundamental_function(&l2, 4, &win(&l2), 1, 0).unwrap().value(m).unwrap()
                    - (m as f64).sqrt())
                .abs()
                    < 1e-12
            );
            assert!(
                (fundamental_function(&summing, 4, &win(&summing), 1, 0)
                    .unwrap()
                    .value(m)
                    .unwrap()
                    - m as f64)
                    .abs()
                    < 1e-12
            );
        }
    }

    #[test]
    fn admissibility_margins() {
        // orthogonality: restriction never grows the norm, empty B attains 1
        let l2 = Space::lp(2.0, 12).unwrap();
        let a = IndexSet::new(vec![1, 3]);
        let got = admissibility_margin(&l2, &a, 5, 2, &win(&l2), 5).unwrap();
        assert!((got - 1.0).abs() < 1e-12);

        // monotone bases: margin stays at the basis constant 1
        let summing = Space::summing(12).unwrap();
        let got = admissibility_margin(&summing, &a, 5, 2, &win(&summing), 5).unwrap();
        assert!(got <= 1.0 + 1e-9);

        let diff = Space::difference(12).unwrap();
        let a = IndexSet::new(vec![1, 2]);
        let got = admissibility_margin(&diff, &a, 5, 2, &win(&diff), 5).unwrap();
        assert!((got - 1.0).abs() < 1e-9);

        // n0 must clear the block, and the window must reach n0
        assert!(admissibility_margin(&diff, &a, 2, 2, &win(&diff), 5).is_err());
        assert!(admissibility_margin(&diff, &a, 20, 2, &win(&diff), 5).is_err());
    }

    #[test]
    fn admissibility_difference_matches_grid_oracle() {
        // dense grid over the coefficient box of z on A union B for the
        // single far block B = {5, 6}
        let space = Space::difference(6).unwrap();
        let a = IndexSet::new(vec![1, 2]);
        let margin = admissibility_margin(&space, &a, 5, 2, &win(&space), 5).unwrap();
        let mut grid_best = 0.0f64;
        let steps = 9; // [-1, 1] in quarter steps
        let coord = |i: usize| -1.0 + 0.25 * i as f64;
        for i0 in 0..steps {
            for i1 in 0..steps {
                for i2 in 0..steps {
                    for i3 in 0..steps {
                        let z = [coord(i0), coord(i1), 0.0, 0.0, coord(i2), coord(i3)];
                        let whole: f64 = (0..6)
                            .map(|i| {
                                let next = if i + 1 < 6 { z[i + 1] } else { 0.0 };
                                (z[i] - next).abs()
                            })
                            .sum();
                        if whole < 1e-12 {
                            continue;
                        }
                        let part = (z[0] - z[1]).abs() + z[1].abs();
                        grid_best = grid_best.max(part / whole);
                    }
                }
            }
        }
        assert!((margin - grid_best).abs() < 1e-9, "{margin} vs {grid_best}");
    }

    #[test]
    fn chain_report_clean_on_summing_window8() {
        let space = Space::summing(8).unwrap();
        let (tables, report) = check_democracy_chain(&space, 3, &win(&space), 1, 0).unwrap();
        assert!(report.all_satisfied(), "{:?}", report.hard_violations());
        assert!(report.hard_violations().is_empty());
        for t in [
            &tables.mu_tilde,
            &tables.mu_tilde_d,
            &tables.mu_tilde_d_alt,
            &tables.mu,
            &tables.mu_d,
        ] {
            t.verify(&space).unwrap();
        }
        tables.gamma.as_ref().unwrap().verify(&space).unwrap();
    }

    #[test]
    fn tables_identical_across_worker_counts() {
        let space = Space::difference(8).unwrap();
        let window = win(&space);
        let serial = check_democracy_chain(&space, 3, &window, 1, 0).unwrap();
        let parallel = check_democracy_chain(&space, 3, &window, 4, 0).unwrap();
        let a = serde_json::to_string(&serial.0.mu_tilde).unwrap();
        let b = serde_json::to_string(&parallel.0.mu_tilde).unwrap();
        assert_eq!(a, b);
        let a = serde_json::to_string(&serial.1).unwrap();
        let b = serde_json::to_string(&parallel.1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn work_budget_rejects_oversized_sweeps() {
        let space = Space::summing(8).unwrap();
        let err = super_democracy(&space, 3, &win(&space), 1, 10).unwrap_err();
        assert!(matches!(err, GlabError::BudgetExceeded(_)));
    }

    #[test]
    fn cq_is_the_running_max() {
        let space = Space::summing(8).unwrap();
        let family = base_family(&space, 3, &win(&space), 7, 8).unwrap();
        let qg = quasi_greedy_est(&space, 3, &family, 1, 0).unwrap();
        let cq = cq_running_max(&qg.g).unwrap();
        assert!((cq - qg.g.value(3).unwrap()).abs() < 1e-12); // monotone table
    }

    #[test]
    fn witness_reevaluation_detects_tampering() {
        let space = Space::summing(8).unwrap();
        let (mt, _) = super_democracy(&space, 2, &win(&space), 1, 0).unwrap();
        let mut tampered = mt.clone();
        tampered.values.insert(2, Some(99.0));
        assert!(tampered.verify(&space).is_err());
    }

    #[test]
    fn base_family_is_seeded_and_nonempty() {
        let space = Space::lp(2.0, 8).unwrap();
        let a = base_family(&space, 2, &win(&space), 42, 8).unwrap();
        let b = base_family(&space, 2, &win(&space), 42, 8).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x, y);
        }
        assert!(a.iter().all(|v| !v.is_zero()));
        // contains the plain alternating prefix of full window length
        let full: Vec<(u32, f64)> = (1..=8)
            .map(|n| (n, if n % 2 == 1 { 1.0 } else { -1.0 }))
            .collect();
        let target = SparseVector::from_real_pairs(full).unwrap();
        assert!(a.contains(&target));
        let _ = real(1.0);
    }
}

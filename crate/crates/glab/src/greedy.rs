//! Greedy selection, truncation, and best-m-term approximation.
//!
//! A set A of size m is a valid greedy selection for threshold ratio
//! t when min over A of |coefficient| >= t * max over the complement,
//! with ties accepted at an absolute 1e-12 slack. For t = 1 these are
//! the top-m sets; smaller t admits swaps deeper into the tail, so a
//! vector can have many valid selections and worst-case quantities
//! range over all of them.

use crate::core::{binomial, k_subsets, real, sign, Coef, Field, IndexSet, SparseVector};
use crate::optim::{minimize_convex, MinimizeConfig};
use crate::spaces::{Space, SpaceKind};
use crate::{GlabError, Result, TIE_TOL};

/// Hard cap on enumerated greedy selections.
const MAX_SETS: usize = 1_000_000;
/// Hard cap on support enumeration inside `sigma`.
const MAX_SIGMA_SUPPORTS: f64 = 200_000.0;

/// Per-restart eval cap for the ranking pass of the support sweep: one
/// full search cycle plus the grid polish at small dimension.
const SIGMA_RANK_BUDGET: u64 = 900;

/// How many leading supports the full-budget polish revisits.
const SIGMA_POLISH_KEEP: usize = 40;
/// Support size past which selection enumeration is refused.
const MAX_ENUM_SUPPORT: usize = 10_000;

/// Replaces every coefficient of modulus strictly above `alpha` by
/// `alpha * sign(coefficient)`; everything else is kept as is.
pub fn truncate(x: &SparseVector, alpha: f64) -> Result<SparseVector> {
    if !(alpha >= 0.0) {
        return Err(GlabError::Invalid("truncation level must be >= 0".into()));
    }
    let mut out = SparseVector::new();
    for (n, z) in x.iter() {
        let v = if z.norm() > alpha { sign(z) * alpha } else { z };
        out.set(n, v)?;
    }
    Ok(out)
}

/// Enumerates every greedy selection of size `m` inside `[1, window]`,
/// in lexicographic order.
pub fn greedy_sets(x: &SparseVector, m: usize, window: u32, t: f64) -> Result<Vec<IndexSet>> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(GlabError::Invalid(
            "threshold ratio must lie in (0, 1]".into(),
        ));
    }
    if window == 0 || m > window as usize {
        return Err(GlabError::Invalid(format!(
            "selection size {m} exceeds window {window}"
        )));
    }
    if let Some(idx) = x.max_index() {
        if idx > window {
            return Err(GlabError::WindowExceeded { index: idx, window });
        }
    }
    if m == 0 {
        return Ok(vec![IndexSet::empty()]);
    }

    // sorted support moduli; zero coordinates never carry weight
    let mut vals: Vec<(u32, f64)> = x.iter().map(|(n, z)| (n, z.norm())).collect();
    vals.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let s = vals.len();

    let mut sets: Vec<IndexSet> = Vec::new();
    if m > s {
        // every nonzero coordinate is forced in; the rest is zero padding
        let zeros: Vec<u32> = (1..=window).filter(|n| x.coef(*n) == Coef::ZERO).collect();
        let need = m - s;
        if binomial(zeros.len(), need) > MAX_SETS as f64 {
            return Err(GlabError::BudgetExceeded(
                "too many greedy selections; shrink m or the window".into(),
            ));
        }
        let support = x.support();
        for pad in k_subsets(&zeros, need) {
            sets.push(support.union(&IndexSet::new(pad)));
        }
    } else {
        if s > MAX_ENUM_SUPPORT {
            return Err(GlabError::BudgetExceeded(
                "support too large for selection enumeration".into(),
            ));
        }
        let mut taken: Vec<usize> = Vec::with_capacity(m);
        enumerate(&vals, m, t, 0, f64::NEG_INFINITY, &mut taken, &mut sets)?;
        for set in &mut sets {
            *set = IndexSet::new(set.iter().collect());
        }
    }
    sets.sort_by(|a, b| a.as_slice().cmp(b.as_slice()));
    Ok(sets)
}

/// Whether `set` is a valid greedy selection for `x` at ratio `t`:
/// the smallest in-set modulus clears t times the largest modulus left
/// outside, with the usual tie slack.
pub fn is_greedy_set(x: &SparseVector, set: &IndexSet, t: f64) -> bool {
    if !(t > 0.0 && t <= 1.0) {
        return false;
    }
    let inside = set
        .iter()
        .map(|n| x.coef(n).norm())
        .fold(f64::INFINITY, f64::min);
    let outside = x
        .iter()
        .filter(|(n, _)| !set.contains(*n))
        .map(|(_, z)| z.norm())
        .fold(0.0f64, f64::max);
    set.is_empty() || inside >= t * outside - TIE_TOL
}

/// Recursive take/skip walk over moduli sorted descending. `skipped`
/// is the largest modulus pushed to the complement so far; once the
/// running minimum of the taken values drops below t * skipped the
/// whole branch is dead.
fn enumerate(
    vals: &[(u32, f64)],
    m: usize,
    t: f64,
    pos: usize,
    skipped: f64,
    taken: &mut Vec<usize>,
    out: &mut Vec<IndexSet>,
) -> Result<()> {
    if taken.len() == m {
        let rest = if pos < vals.len() { vals[pos].1 } else { 0.0 };
        let cmax = skipped.max(rest).max(0.0);
        let tmin = vals[*taken.last().unwrap()].1;
        if tmin >= t * cmax - TIE_TOL {
            if out.len() >= MAX_SETS {
                return Err(GlabError::BudgetExceeded(
                    "too many greedy selections; shrink m or raise t".into(),
                ));
            }
            out.push(taken.iter().map(|&p| vals[p].0).collect());
        }
        return Ok(());
    }
    if pos == vals.len() || taken.len() + (vals.len() - pos) < m {
        return Ok(());
    }
    // take branch: dead once this value already violates the threshold
    if vals[pos].1 >= t * skipped.max(0.0) - TIE_TOL {
        taken.push(pos);
        enumerate(vals, m, t, pos + 1, skipped, taken, out)?;
        taken.pop();
    }
    // skip branch: the skipped value joins the complement
    let skipped = skipped.max(vals[pos].1);
    if taken.is_empty() || vals[*taken.last().unwrap()].1 >= t * skipped - TIE_TOL {
        enumerate(vals, m, t, pos + 1, skipped, taken, out)?;
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ChebConfig {
    /// Value tolerance; None picks 1e-9, or 1e-7 on trigonometric spaces.
    pub tol: Option<f64>,
    /// Evaluation budget per restart; 0 picks 20000 * d^2.
    pub budget_per_restart: u64,
}

impl Default for ChebConfig {
    fn default() -> Self {
        Self {
            tol: None,
            budget_per_restart: 0,
        }
    }
}

fn resolve_tol(space: &Space, tol: Option<f64>) -> f64 {
    tol.unwrap_or(match space.kind() {
        SpaceKind::Trig { .. } => 1e-7,
        _ => 1e-9,
    })
}

#[derive(Debug, Clone)]
pub struct ChebStep {
    /// Best correction coefficients found, supported on the given set.
    pub coefficients: SparseVector,
    /// x minus the correction.
    pub residual: SparseVector,
    pub residual_norm: f64,
    pub evals: u64,
    pub converged: bool,
}

/// Residual-norm objective over correction coefficients on a fixed
/// support, evaluated through a packed scratch buffer.
struct ResidualObjective<'a> {
    space: &'a Space,
    template: Vec<(u32, Coef)>,
    positions: Vec<usize>,
    base: Vec<Coef>,
    complex: bool,
    scratch: Vec<(u32, Coef)>,
}

impl<'a> ResidualObjective<'a> {
    fn new(space: &'a Space, x: &SparseVector, support: &IndexSet) -> Self {
        let mut template = x.packed();
        for n in support.iter() {
            if let Err(at) = template.binary_search_by_key(&n, |e| e.0) {
                template.insert(at, (n, Coef::ZERO));
            }
        }
        let positions = support
            .iter()
            .map(|n| template.binary_search_by_key(&n, |e| e.0).unwrap())
            .collect();
        let base = support.iter().map(|n| x.coef(n)).collect();
        let scratch = template.clone();
        Self {
            space,
            template,
            positions,
            base,
            complex: space.field() == Field::Complex,
            scratch,
        }
    }

    fn dim(&self) -> usize {
        self.positions.len() * if self.complex { 2 } else { 1 }
    }

    /// Start coordinates matching the coefficients of x on the support.
    fn matching_start(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        for z in &self.base {
            out.push(z.re);
            if self.complex {
                out.push(z.im);
            }
        }
        out
    }

    fn coefficient(&self, coords: &[f64], k: usize) -> Coef {
        if self.complex {
            Coef::new(coords[2 * k], coords[2 * k + 1])
        } else {
            real(coords[k])
        }
    }

    fn eval(&mut self, coords: &[f64]) -> f64 {
        self.scratch.copy_from_slice(&self.template);
        for (k, &pos) in self.positions.iter().enumerate() {
            self.scratch[pos].1 = self.base[k] - self.coefficient(coords, k);
        }
        self.space.norm_unchecked(&self.scratch)
    }
}

/// Minimizes ||x - sum of corrections on `support`|| and returns the
/// best correction found. The reported norm is always an upper bound
/// on the true minimum; a start matching x on the support makes the
/// plain restriction reachable exactly.
pub fn chebyshev_step(
    space: &Space,
    x: &SparseVector,
    support: &IndexSet,
    cfg: &ChebConfig,
) -> Result<ChebStep> {
    space.validate(x)?;
    if let Some(idx) = support.max() {
        if idx > space.window() {
            return Err(GlabError::WindowExceeded {
                index: idx,
                window: space.window(),
            });
        }
    }
    let mut obj = ResidualObjective::new(space, x, support);
    let d = obj.dim();
    let zeros = vec![0.0; d];
    let matching = obj.matching_start();
    let mut starts = vec![zeros.clone()];
    if matching.iter().any(|&c| c != 0.0) {
        starts.push(matching.clone());
        starts.push(matching.iter().map(|c| -c).collect());
    }
    let budget = if cfg.budget_per_restart == 0 {
        20_000 * (d as u64).max(1).pow(2)
    } else {
        cfg.budget_per_restart
    };
    let mut f = |coords: &[f64]| obj.eval(coords);
    let found = minimize_convex(
        &mut f,
        &starts,
        MinimizeConfig {
            tol: resolve_tol(space, cfg.tol),
            budget_per_restart: budget,
        },
    )?;
    let mut coefficients = SparseVector::new();
    for (k, n) in support.iter().enumerate() {
        coefficients.set(n, obj.coefficient(&found.point, k))?;
    }
    let residual = x.sub(&coefficients);
    Ok(ChebStep {
        coefficients,
        residual,
        residual_norm: found.value,
        evals: found.evals,
        converged: found.converged,
    })
}

#[derive(Debug, Clone)]
pub struct WorstCase {
    /// Every greedy selection, lexicographic.
    pub sets: Vec<IndexSet>,
    /// Residual norm per selection, aligned with `sets`.
    pub values: Vec<f64>,
    pub worst: f64,
    pub worst_set: IndexSet,
    pub evals: u64,
    pub converged: bool,
}

/// Cap on selections fed through the per-set minimization.
const MAX_WORST_SETS: usize = 50_000;

/// Worst plain greedy residual ||x - x restricted to A|| over all
/// greedy selections A. Exact: no minimization is involved.
pub fn worst_plain(space: &Space, x: &SparseVector, m: usize, t: f64) -> Result<WorstCase> {
    space.validate(x)?;
    let sets = greedy_sets(x, m, space.window(), t)?;
    let mut values = Vec::with_capacity(sets.len());
    for set in &sets {
        values.push(space.norm(&x.restrict_complement(set))?);
    }
    let (worst, worst_set) = pick_worst(&sets, &values);
    Ok(WorstCase {
        sets,
        values,
        worst,
        worst_set,
        evals: 0,
        converged: true,
    })
}

/// Worst corrected residual over all greedy selections: each selection
/// gets a full correction search and the maximum is reported.
pub fn worst_chebyshev(
    space: &Space,
    x: &SparseVector,
    m: usize,
    t: f64,
    cfg: &ChebConfig,
) -> Result<WorstCase> {
    space.validate(x)?;
    let sets = greedy_sets(x, m, space.window(), t)?;
    if sets.len() > MAX_WORST_SETS {
        return Err(GlabError::BudgetExceeded(
            "too many greedy selections to correct; raise t or shrink m".into(),
        ));
    }
    let mut values = Vec::with_capacity(sets.len());
    let mut evals = 0u64;
    let mut converged = true;
    for set in &sets {
        let step = chebyshev_step(space, x, set, cfg)?;
        values.push(step.residual_norm);
        evals += step.evals;
        converged &= step.converged;
    }
    let (worst, worst_set) = pick_worst(&sets, &values);
    Ok(WorstCase {
        sets,
        values,
        worst,
        worst_set,
        evals,
        converged,
    })
}

fn pick_worst(sets: &[IndexSet], values: &[f64]) -> (f64, IndexSet) {
    let mut worst = f64::NEG_INFINITY;
    let mut at = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > worst {
            worst = v;
            at = i;
        }
    }
    if sets.is_empty() {
        (0.0, IndexSet::empty())
    } else {
        (worst, sets[at].clone())
    }
}

#[derive(Debug, Clone)]
pub struct SigmaConfig {
    pub tol: Option<f64>,
    /// Per-restart budget inside each support's correction search.
    pub per_support_budget: u64,
    /// Total evaluation budget across all supports; 0 picks 1e7.
    pub total_budget: u64,
}

impl Default for SigmaConfig {
    fn default() -> Self {
        Self {
            tol: None,
            per_support_budget: 0,
            total_budget: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SigmaResult {
    /// Best m-term approximation error found (an upper bound that is
    /// exact whenever some support converged to the true minimum).
    pub value: f64,
    pub support: IndexSet,
    pub coefficients: SparseVector,
    pub evals: u64,
    pub converged: bool,
}

/// Best approximation by vectors with support of size `m` anywhere in
/// the window, by exhaustive support enumeration.
pub fn sigma(space: &Space, x: &SparseVector, m: usize, cfg: &SigmaConfig) -> Result<SigmaResult> {
    space.validate(x)?;
    let window = space.window();
    if m > window as usize {
        return Err(GlabError::Invalid(format!(
            "approximation rank {m} exceeds window {window}"
        )));
    }
    if m == 0 {
        return Ok(SigmaResult {
            value: space.norm(x)?,
            support: IndexSet::empty(),
            coefficients: SparseVector::new(),
            evals: 0,
            converged: true,
        });
    }
    if binomial(window as usize, m) > MAX_SIGMA_SUPPORTS {
        return Err(GlabError::BudgetExceeded(
            "too many supports to enumerate; shrink m or the window".into(),
        ));
    }
    let total_budget = if cfg.total_budget == 0 {
        10_000_000
    } else {
        cfg.total_budget
    };
    // Two-phase sweep: a capped ranking pass over every support, then a
    // full-budget polish of the leaders. The ranking pass still visits the
    // entire enumeration, so no support is ever skipped; the polish only
    // re-minimizes, so every reported value stays a valid upper bound and
    // the winning support's value is the converged one.
    let rank_budget = if cfg.per_support_budget == 0 {
        SIGMA_RANK_BUDGET
    } else {
        cfg.per_support_budget.min(SIGMA_RANK_BUDGET)
    };
    let rank_cfg = ChebConfig {
        tol: cfg.tol,
        budget_per_restart: rank_budget,
    };
    let polish_cfg = ChebConfig {
        tol: cfg.tol,
        budget_per_restart: cfg.per_support_budget,
    };
    let universe: Vec<u32> = (1..=window).collect();
    let mut ranked: Vec<(f64, usize, IndexSet, ChebStep)> = Vec::new();
    let mut evals = 0u64;
    for (order, support) in k_subsets(&universe, m).into_iter().enumerate() {
        if evals >= total_budget {
            return Err(GlabError::BudgetExceeded(
                "approximation search ran out of evaluation budget".into(),
            ));
        }
        let support = IndexSet::from_sorted(support);
        let step = chebyshev_step(space, x, &support, &rank_cfg)?;
        evals += step.evals;
        ranked.push((step.residual_norm, order, support, step));
    }
    // ties keep enumeration order, so the polish set is deterministic
    ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    ranked.truncate(SIGMA_POLISH_KEEP);
    let mut best: Option<(f64, usize, SigmaResult)> = None;
    for (value, order, support, step) in ranked {
        if evals >= total_budget {
            return Err(GlabError::BudgetExceeded(
                "approximation search ran out of evaluation budget".into(),
            ));
        }
        let polished = chebyshev_step(space, x, &support, &polish_cfg)?;
        evals += polished.evals;
        // value ties keep the polished step: same minimum, honest flags
        let (value, step) = if polished.residual_norm <= value {
            (polished.residual_norm, polished)
        } else {
            (value, step)
        };
        let better = match &best {
            None => true,
            // ties keep the earliest support in enumeration order
            Some((b, o, _)) => value < *b || (value == *b && order < *o),
        };
        if better {
            best = Some((
                value,
                order,
                SigmaResult {
                    value,
                    support,
                    coefficients: step.coefficients,
                    evals: 0,
                    converged: step.converged,
                },
            ));
        }
    }
    let (_, _, mut out) = best.unwrap();
    out.evals = evals;
    Ok(out)
}

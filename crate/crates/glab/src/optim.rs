//! Derivative-free minimization of convex objectives.
//!
//! The main routine runs cyclic coordinate descent with golden-section
//! line searches. Coordinate moves alone stall on coupled nonsmooth
//! objectives (max-of-affine pieces built from prefix sums do exactly
//! that), so a stalled sweep escalates: first line searches along
//! contiguous-run directions e_i + .. + e_j, transfer pairs e_i - e_j,
//! and remaining pair sums, then for small dimension a sign-lattice
//! probe of all {-w, 0, w}^d offsets. Only strictly improving moves are
//! accepted, so a start point that is already optimal is returned
//! unchanged. Each descent ends with a dyadic snap: polyhedral objectives
//! built from rational data minimize at rational vertices, and rounding to
//! the coarsest dyadic grid that does not hurt the value lands on the
//! vertex exactly instead of within tolerance. Everything is
//! deterministic: fixed direction order, fixed restart order, ties keep
//! the earlier restart.
//!
//! Only the minimum VALUE carries contract weight. Convex objectives with
//! flat regions have non-unique minimizers, and the reported point is just
//! the one this particular search settled on.

use crate::{GlabError, Result};

#[derive(Debug, Clone, Copy)]
pub struct MinimizeConfig {
    /// Absolute value tolerance the search aims for.
    pub tol: f64,
    /// Objective evaluations allowed per restart; 0 picks 200*d^2.
    pub budget_per_restart: u64,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            budget_per_restart: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimized {
    pub point: Vec<f64>,
    pub value: f64,
    pub evals: u64,
    /// False when some restart ran out of budget before its internal
    /// stall criterion was met.
    pub converged: bool,
}

const INVPHI: f64 = 0.618_033_988_749_894_9;
/// Dimension cap for the sign-lattice stall probe (3^d points).
const LATTICE_PROBE_MAX_DIM: usize = 7;

struct Budgeted<'a> {
    f: &'a mut dyn FnMut(&[f64]) -> f64,
    evals: u64,
    limit: u64,
}

impl<'a> Budgeted<'a> {
    fn eval(&mut self, x: &[f64]) -> Option<f64> {
        if self.evals >= self.limit {
            return None;
        }
        self.evals += 1;
        Some((self.f)(x))
    }
}

/// Minimizes `objective` over R^d starting from each point in `starts`.
/// `starts` must be non-empty and all of equal dimension.
pub fn minimize_convex(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    starts: &[Vec<f64>],
    cfg: MinimizeConfig,
) -> Result<Minimized> {
    let first = starts
        .first()
        .ok_or_else(|| GlabError::Invalid("minimize_convex needs a start point".into()))?;
    let d = first.len();
    if starts.iter().any(|s| s.len() != d) {
        return Err(GlabError::Invalid("start points differ in dimension".into()));
    }
    let per_restart = if cfg.budget_per_restart == 0 {
        200 * (d as u64).max(1).pow(2)
    } else {
        cfg.budget_per_restart
    };

    let mut best: Option<Minimized> = None;
    let mut total_evals = 0u64;
    for start in starts {
        let run = descend(objective, start, cfg.tol, per_restart);
        total_evals += run.evals;
        let better = match &best {
            None => true,
            Some(b) => run.value < b.value, // ties keep the earlier restart
        };
        if better {
            best = Some(run);
        }
    }
    let mut out = best.unwrap();
    out.evals = total_evals;
    Ok(out)
}

/// A search direction: sparse list of (coordinate, +-1 weight).
type Dir = Vec<(usize, f64)>;

/// Stall-escape directions, past the plain axes: contiguous runs
/// e_i+..+e_j (prefix-sum-coupled objectives separate along these),
/// transfer pairs e_i - e_j, and the non-adjacent pair sums.
fn escape_directions(d: usize) -> Vec<Dir> {
    let mut dirs = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            dirs.push((i..=j).map(|k| (k, 1.0)).collect());
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            dirs.push(vec![(i, 1.0), (j, -1.0)]);
        }
    }
    for i in 0..d {
        for j in i + 2..d {
            dirs.push(vec![(i, 1.0), (j, 1.0)]);
        }
    }
    dirs
}

fn descend(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    start: &[f64],
    tol: f64,
    budget: u64,
) -> Minimized {
    let d = start.len();
    let mut f = Budgeted {
        f: objective,
        evals: 0,
        limit: budget,
    };
    let mut point = start.to_vec();
    if d == 0 {
        let value = (f.f)(&point);
        return Minimized {
            point,
            value,
            evals: 1,
            converged: true,
        };
    }
    let mut value = match f.eval(&point) {
        Some(v) => v,
        None => {
            return Minimized {
                point,
                value: f64::INFINITY,
                evals: 0,
                converged: false,
            }
        }
    };
    let axes: Vec<Dir> = (0..d).map(|j| vec![(j, 1.0)]).collect();
    let escapes = escape_directions(d);
    let mut width = start.iter().map(|c| c.abs()).fold(1.0f64, f64::max);
    let mut converged = false;
    'outer: loop {
        // phase A: plain coordinate sweep
        let before = value;
        for dir in &axes {
            match line_search(&mut f, &mut point, dir, value, width) {
                Some(v) => value = v,
                None => break 'outer,
            }
        }
        if before - value >= tol {
            continue;
        }

        // phase B: coupled directions, only once axes stop paying
        let before = value;
        for dir in &escapes {
            match line_search(&mut f, &mut point, dir, value, width) {
                Some(v) => value = v,
                None => break 'outer,
            }
        }
        if before - value >= tol {
            continue;
        }

        // phase C: sign-lattice probe at the current scale
        if d <= LATTICE_PROBE_MAX_DIM {
            match lattice_probe(&mut f, &mut point, value, width) {
                Some(v) => {
                    if value - v >= tol {
                        value = v;
                        continue;
                    }
                    value = v;
                }
                None => break 'outer,
            }
        }

        // phase D: kink polish; piecewise-linear objectives stall within
        // line-search tolerance of a kink, and when the kink has dyadic
        // coordinates the grid round-off jumps straight onto it instead
        // of grinding the width cascade all the way down
        let snapped = dyadic_snap(&mut f, &mut point, value);
        if value - snapped >= tol {
            value = snapped;
            continue;
        }
        value = snapped;

        // no phase moved at this scale; zoom in
        if width < tol {
            converged = true;
            break;
        }
        width *= 0.0625;
    }
    value = dyadic_snap(&mut f, &mut point, value);
    Minimized {
        point,
        value,
        evals: f.evals,
        converged,
    }
}

/// Rounds the settled point to dyadic grids 1, 1/2, .., 1/256 and keeps
/// the best candidate: strictly better value, or the coarsest exact tie.
/// Line searches stop within tolerance of a kink; when the kink sits on a
/// dyadic point (Chebyshev corrections over dyadic data do), this recovers
/// it exactly, which downstream exact-value contracts rely on.
fn dyadic_snap(f: &mut Budgeted, point: &mut Vec<f64>, current: f64) -> f64 {
    let mut best = current;
    let mut improvement: Option<Vec<f64>> = None;
    let mut tie: Option<Vec<f64>> = None;
    for k in 0..=8u32 {
        let scale = f64::from(2u32.pow(k));
        let cand: Vec<f64> = point.iter().map(|c| (c * scale).round() / scale).collect();
        if cand == *point {
            break; // already on this grid, so on every finer one too
        }
        let Some(v) = f.eval(&cand) else { break };
        if v < best {
            best = v;
            improvement = Some(cand);
        } else if v == current && tie.is_none() {
            tie = Some(cand);
        }
    }
    if let Some(p) = improvement.or(tie) {
        *point = p;
    }
    best
}

/// Evaluates every offset in {-w, 0, w}^d and moves to the best strict
/// improvement. Returns the (possibly unchanged) value, or None when the
/// budget ran out.
fn lattice_probe(
    f: &mut Budgeted,
    point: &mut [f64],
    current: f64,
    width: f64,
) -> Option<f64> {
    let d = point.len();
    let base = point.to_vec();
    let mut trial = base.clone();
    let mut digits = vec![0u8; d]; // 0 -> -w, 1 -> 0, 2 -> +w
    let mut best = current;
    let mut best_trial: Option<Vec<f64>> = None;
    loop {
        // advance the odometer first so the all-zero offset is skipped
        let mut j = 0;
        loop {
            if j == d {
                match best_trial {
                    Some(t) => {
                        point.copy_from_slice(&t);
                        return Some(best);
                    }
                    None => return Some(current),
                }
            }
            digits[j] += 1;
            if digits[j] == 3 {
                digits[j] = 0;
                j += 1;
            } else {
                break;
            }
        }
        for (k, &dig) in digits.iter().enumerate() {
            trial[k] = base[k] + (dig as f64 - 1.0) * width;
        }
        let v = f.eval(&trial)?;
        if v < best {
            best = v;
            best_trial = Some(trial.clone());
        }
    }
}

/// Golden-section line search along `dir` from the current point.
/// Accepts only strict improvements; on success the point is updated and
/// the new value returned. None means the eval budget ran out (the point
/// is left as it was).
fn line_search(
    f: &mut Budgeted,
    point: &mut [f64],
    dir: &Dir,
    current: f64,
    width: f64,
) -> Option<f64> {
    let saved: Vec<f64> = dir.iter().map(|&(k, _)| point[k]).collect();
    let probe = |f: &mut Budgeted, t: f64, point: &mut [f64]| -> Option<f64> {
        for (&(k, w), &old) in dir.iter().zip(saved.iter()) {
            point[k] = old + t * w;
        }
        let v = f.eval(point);
        for (&(k, _), &old) in dir.iter().zip(saved.iter()) {
            point[k] = old;
        }
        v
    };

    // maintain a triple lo < c < hi and slide it until fc <= min(flo, fhi),
    // which brackets a minimum of the convex section
    let mut w = width;
    let mut c = 0.0;
    let mut fc = current;
    let mut lo = -w;
    let mut hi = w;
    let mut flo = probe(f, lo, point)?;
    let mut fhi = probe(f, hi, point)?;
    for _ in 0..60 {
        if flo < fc && flo <= fhi {
            hi = c;
            fhi = fc;
            c = lo;
            fc = flo;
            w *= 2.0;
            lo = c - w;
            flo = probe(f, lo, point)?;
        } else if fhi < fc {
            lo = c;
            flo = fc;
            c = hi;
            fc = fhi;
            w *= 2.0;
            hi = c + w;
            fhi = probe(f, hi, point)?;
        } else {
            break;
        }
    }

    // golden-section contraction; the floor respects both the bracket
    // scale and the representable spacing near the iterates
    let scale = lo.abs().max(hi.abs()) + saved.iter().fold(0.0f64, |a, &s| a.max(s.abs()));
    let width_floor = (hi - lo) * 1e-12 + scale * 1e-15 + 1e-300;
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = probe(f, x1, point)?;
    let mut f2 = probe(f, x2, point)?;
    let mut guard = 0u32;
    while hi - lo > width_floor {
        guard += 1;
        if guard > 300 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = probe(f, x1, point)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = probe(f, x2, point)?;
        }
    }
    let (mut tbest, mut fbest) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if fc < fbest {
        tbest = c;
        fbest = fc;
    }
    if fbest < current {
        for (&(k, w), &old) in dir.iter().zip(saved.iter()) {
            point[k] = old + tbest * w;
        }
        Some(fbest)
    } else {
        Some(current)
    }
}

#[derive(Debug, Clone)]
pub struct GridMin {
    pub point: Vec<f64>,
    pub value: f64,
    pub evals: u64,
}

/// Exhaustively evaluates `objective` on the lattice `lo + k*step` per
/// axis (inclusive of both ends up to rounding) and returns the best
/// point. Refuses lattices above 1e8 points.
pub fn grid_oracle(
    objective: &mut dyn FnMut(&[f64]) -> f64,
    lo: &[f64],
    hi: &[f64],
    step: f64,
) -> Result<GridMin> {
    if lo.len() != hi.len() {
        return Err(GlabError::Invalid("grid bounds differ in dimension".into()));
    }
    if !(step > 0.0) {
        return Err(GlabError::Invalid("grid step must be positive".into()));
    }
    let d = lo.len();
    let mut counts = Vec::with_capacity(d);
    let mut total = 1f64;
    for j in 0..d {
        if hi[j] < lo[j] {
            return Err(GlabError::Invalid("grid range is empty".into()));
        }
        let n = ((hi[j] - lo[j]) / step + 1e-9).floor() as u64 + 1;
        counts.push(n);
        total *= n as f64;
        if total > 1e8 {
            return Err(GlabError::BudgetExceeded(
                "grid oracle lattice exceeds 1e8 points; widen the step".into(),
            ));
        }
    }
    let mut idx = vec![0u64; d];
    let mut x = lo.to_vec();
    let mut best_value = f64::INFINITY;
    let mut best_point = x.clone();
    let mut evals = 0u64;
    loop {
        for j in 0..d {
            x[j] = lo[j] + idx[j] as f64 * step;
        }
        let v = objective(&x);
        evals += 1;
        if v < best_value {
            best_value = v;
            best_point = x.clone();
        }
        // odometer
        let mut j = 0;
        loop {
            if j == d {
                return Ok(GridMin {
                    point: best_point,
                    value: best_value,
                    evals,
                });
            }
            idx[j] += 1;
            if idx[j] == counts[j] {
                idx[j] = 0;
                j += 1;
            } else {
                break;
            }
        }
    }
}

//! Concrete sequence spaces and their norm kernels.
//!
//! Every space evaluates norms of finitely supported coefficient vectors
//! over a finite index window. Five kinds are provided:
//!
//! * `summing:N`      — norm = sup of |prefix sums|, window N
//! * `difference:N`   — norm = sum of |consecutive coefficient differences|
//! * `lp:p:N`         — the usual l^p norm, `p = inf` for the sup norm
//! * `trig:p:F[:G]`   — L^p on the circle for trigonometric polynomials,
//!                      quadrature on a G-point grid (default G = 8F);
//!                      storage index 1 is frequency 0, even indices are
//!                      positive frequencies n/2, odd indices are -(n-1)/2
//! * `block:...`      — a lattice norm built from balanced-sign functionals
//!                      and tail sums over a partition into blocks

use num_complex::Complex64;
use std::sync::OnceLock;

use crate::core::{modulus, Coef, Field, IndexSet, SparseVector};
use crate::{GlabError, Result};

#[derive(Debug, Clone)]
pub enum SpaceKind {
    Summing,
    Difference,
    /// Exponent in [1, inf]; `f64::INFINITY` selects the sup norm.
    Lp(f64),
    Trig {
        p: f64,
        maxfreq: u32,
        grid: u32,
    },
    Block(BlockSpec),
}

/// Block partition with weights. Block k (1-based) covers indices
/// `(start_k, start_k + size_k]`; the last block may be astronomically
/// large (size stored as +inf) in which case it covers the rest of the
/// window and its weights underflow to zero.
#[derive(Debug, Clone)]
pub struct BlockSpec {
    starts: Vec<u64>,
    sizes: Vec<f64>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
}

impl BlockSpec {
    /// Doubly exponential recursion: N_0 = 1, N_k = 2^(2^(N_{k-1})),
    /// alpha_k = 2^(-N_{k-1}) = 1/log2(N_k), beta_k = N_k^(-1/2).
    /// Only kmax <= 2 is representable; N_3 = 2^65536 has no integer form,
    /// so the block after the last materialized one is kept with +inf size
    /// and zero weights.
    pub fn default_recursion(kmax: u32) -> Result<Self> {
        if kmax == 0 {
            return Err(GlabError::Invalid("block recursion needs kmax >= 1".into()));
        }
        if kmax > 2 {
            return Err(GlabError::Unsupported(
                "block:default is limited to kmax <= 2 (the next block size, 2^65536, \
                 is not representable); use block:geom:base:kmax for deeper recursions"
                    .into(),
            ));
        }
        let mut sizes_exact: Vec<u64> = Vec::new();
        let mut n_prev: u64 = 1; // N_0
        for _ in 0..=kmax {
            // N_k = 2^(2^(N_{k-1})) while it fits; one block past kmax is kept
            let size = if n_prev <= 5 { 1u64 << (1u64 << n_prev) } else { u64::MAX };
            if size == u64::MAX {
                sizes_exact.push(u64::MAX);
                break;
            }
            sizes_exact.push(size);
            n_prev = size;
        }
        let mut starts = Vec::new();
        let mut sizes = Vec::new();
        let mut alphas = Vec::new();
        let mut betas = Vec::new();
        let mut start = 0u64;
        for &sz in &sizes_exact {
            starts.push(start);
            if sz == u64::MAX {
                sizes.push(f64::INFINITY);
                alphas.push(0.0); // 2^(-65536) underflows
                betas.push(0.0);
            } else {
                let szf = sz as f64;
                sizes.push(szf);
                alphas.push(1.0 / szf.log2());
                betas.push(1.0 / szf.sqrt());
                start += sz;
            }
        }
        Ok(Self {
            starts,
            sizes,
            alphas,
            betas,
        })
    }

    /// Geometric recursion N_k = base^k with the same weight formulas,
    /// alpha_k = 1/log2(N_k), beta_k = N_k^(-1/2). The base must be even
    /// (balanced sign patterns need even block sizes) and at least 2.
    pub fn geometric(base: u64, kmax: u32) -> Result<Self> {
        if base < 2 || base % 2 != 0 {
            return Err(GlabError::Invalid(
                "block:geom needs an even base >= 2".into(),
            ));
        }
        if kmax == 0 {
            return Err(GlabError::Invalid("block recursion needs kmax >= 1".into()));
        }
        let mut starts = Vec::new();
        let mut sizes = Vec::new();
        let mut alphas = Vec::new();
        let mut betas = Vec::new();
        let mut start = 0u64;
        for k in 1..=(kmax + 1) as u64 {
            let size = base
                .checked_pow(k as u32)
                .filter(|&s| start.saturating_add(s) <= u32::MAX as u64)
                .ok_or_else(|| {
                    GlabError::Invalid(format!(
                        "block:geom:{base}:{kmax} exceeds the index range"
                    ))
                })?;
            let szf = size as f64;
            starts.push(start);
            sizes.push(szf);
            alphas.push(1.0 / szf.log2());
            betas.push(1.0 / szf.sqrt());
            start += size;
        }
        Ok(Self {
            starts,
            sizes,
            alphas,
            betas,
        })
    }

    pub fn num_blocks(&self) -> usize {
        self.starts.len()
    }

    /// 1-based block index holding `index`, or None beyond the last block.
    pub fn block_of(&self, index: u32) -> Option<usize> {
        let idx = index as u64;
        for k in (0..self.starts.len()).rev() {
            if idx > self.starts[k] {
                return if self.sizes[k].is_infinite()
                    || idx <= self.starts[k] + self.sizes[k] as u64
                {
                    Some(k + 1)
                } else {
                    None
                };
            }
        }
        None
    }

    /// First index of block k (1-based k).
    pub fn block_start(&self, k: usize) -> u64 {
        self.starts[k - 1] + 1
    }

    pub fn block_size(&self, k: usize) -> f64 {
        self.sizes[k - 1]
    }

    pub fn alpha(&self, k: usize) -> f64 {
        self.alphas[k - 1]
    }

    pub fn beta(&self, k: usize) -> f64 {
        self.betas[k - 1]
    }

    fn window_end(&self) -> u64 {
        let last = self.starts.len() - 1;
        if self.sizes[last].is_infinite() {
            // reach one previous-block width into the open block
            self.starts[last] + self.sizes[last - 1] as u64
        } else {
            self.starts[last] + self.sizes[last] as u64
        }
    }

    /// max over balanced sign choices sigma on block k (equally many +1 and
    /// -1 across the whole block) of |sum_j sigma_j v_j|, where `vals` are
    /// the coefficients of x inside block k. Zeros off the given support
    /// are free sign slots.
    fn balanced_sign_max(&self, k: usize, vals: &[f64]) -> Result<f64> {
        let size = self.sizes[k - 1];
        if size.is_finite() && (size as u64) % 2 != 0 {
            return Err(GlabError::Invalid(format!(
                "balanced signs need an even block size, block {k} has {size}"
            )));
        }
        let half = size / 2.0;
        let p = vals.len();
        if p == 0 {
            return Ok(0.0);
        }
        let mut sorted = vals.to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let total: f64 = sorted.iter().sum();
        // prefix[r] = sum of the r largest values
        let mut prefix = vec![0.0f64; p + 1];
        for (i, &v) in sorted.iter().enumerate() {
            prefix[i + 1] = prefix[i] + v;
        }
        let r_min = ((p as f64) - half).max(0.0) as usize;
        let r_max = half.min(p as f64) as usize;
        let mut best = 0.0f64;
        for r in r_min..=r_max {
            // +1 on the r largest values
            best = best.max((2.0 * prefix[r] - total).abs());
            // +1 on the r smallest values (negation branch)
            best = best.max((2.0 * (total - prefix[p - r]) - total).abs());
        }
        Ok(best)
    }
}

/// A normed sequence space over a finite window.
#[derive(Debug, Clone)]
pub struct Space {
    kind: SpaceKind,
    field: Field,
    window: u32,
    descriptor: String,
    twiddle: std::sync::Arc<OnceLock<Vec<Complex64>>>,
}

impl Space {
    pub fn summing(window: u32) -> Result<Self> {
        if window == 0 {
            return Err(GlabError::Invalid("window must be >= 1".into()));
        }
        Ok(Self {
            kind: SpaceKind::Summing,
            field: Field::Real,
            window,
            descriptor: format!("summing:{window}"),
            twiddle: Default::default(),
        })
    }

    pub fn difference(window: u32) -> Result<Self> {
        if window == 0 {
            return Err(GlabError::Invalid("window must be >= 1".into()));
        }
        Ok(Self {
            kind: SpaceKind::Difference,
            field: Field::Real,
            window,
            descriptor: format!("difference:{window}"),
            twiddle: Default::default(),
        })
    }

    pub fn lp(p: f64, window: u32) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(GlabError::Invalid(format!("lp exponent {p} < 1")));
        }
        if window == 0 {
            return Err(GlabError::Invalid("window must be >= 1".into()));
        }
        Ok(Self {
            kind: SpaceKind::Lp(p),
            field: Field::Real,
            window,
            descriptor: format!("lp:{}:{window}", fmt_exponent(p)),
            twiddle: Default::default(),
        })
    }

    /// Trigonometric L^p space on the circle, complex scalars. `maxfreq`
    /// bounds the hosted |frequency|; `grid` is the quadrature size
    /// (default 8 * maxfreq).
    pub fn trig(p: f64, maxfreq: u32, grid: Option<u32>) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(GlabError::Invalid(format!("trig exponent {p} < 1")));
        }
        if maxfreq == 0 {
            return Err(GlabError::Invalid("trig needs maxfreq >= 1".into()));
        }
        let g = grid.unwrap_or(8 * maxfreq);
        if g <= 2 * maxfreq {
            return Err(GlabError::Invalid(format!(
                "grid {g} too coarse for maxfreq {maxfreq}; need grid > 2*maxfreq"
            )));
        }
        let descriptor = match grid {
            Some(g) => format!("trig:{}:{maxfreq}:{g}", fmt_exponent(p)),
            None => format!("trig:{}:{maxfreq}", fmt_exponent(p)),
        };
        Ok(Self {
            kind: SpaceKind::Trig {
                p,
                maxfreq,
                grid: g,
            },
            field: Field::Complex,
            window: 2 * maxfreq + 1,
            descriptor,
            twiddle: Default::default(),
        })
    }

    pub fn block_default(kmax: u32) -> Result<Self> {
        let spec = BlockSpec::default_recursion(kmax)?;
        let window = spec.window_end();
        Ok(Self {
            kind: SpaceKind::Block(spec),
            field: Field::Real,
            window: window as u32,
            descriptor: format!("block:default:{kmax}"),
            twiddle: Default::default(),
        })
    }

    pub fn block_geom(base: u64, kmax: u32) -> Result<Self> {
        let spec = BlockSpec::geometric(base, kmax)?;
        let window = spec.window_end();
        Ok(Self {
            kind: SpaceKind::Block(spec),
            field: Field::Real,
            window: window as u32,
            descriptor: format!("block:geom:{base}:{kmax}"),
            twiddle: Default::default(),
        })
    }

    /// Parses a space descriptor:
    /// `summing:N | difference:N | lp:p:N | trig:p:F[:G] | block:default:K |
    /// block:geom:B:K` where p is a decimal, a fraction like 4/3, or `inf`.
    pub fn parse(descriptor: &str) -> Result<Self> {
        let parts: Vec<&str> = descriptor.split(':').collect();
        let usage = || {
            GlabError::Usage(format!(
                "bad space descriptor '{descriptor}'; expected summing:N, difference:N, \
                 lp:p:N, trig:p:maxfreq[:grid], block:default:kmax, or block:geom:base:kmax"
            ))
        };
        match parts.as_slice() {
            ["summing", n] => Space::summing(n.parse().map_err(|_| usage())?),
            ["difference", n] => Space::difference(n.parse().map_err(|_| usage())?),
            ["lp", p, n] => Space::lp(parse_exponent(p)?, n.parse().map_err(|_| usage())?),
            ["trig", p, f] => Space::trig(parse_exponent(p)?, f.parse().map_err(|_| usage())?, None),
            ["trig", p, f, g] => Space::trig(
                parse_exponent(p)?,
                f.parse().map_err(|_| usage())?,
                Some(g.parse().map_err(|_| usage())?),
            ),
            ["block", "default", k] => Space::block_default(k.parse().map_err(|_| usage())?),
            ["block", "geom", b, k] => Space::block_geom(
                b.parse().map_err(|_| usage())?,
                k.parse().map_err(|_| usage())?,
            ),
            _ => Err(usage()),
        }
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn block_spec(&self) -> Option<&BlockSpec> {
        match &self.kind {
            SpaceKind::Block(b) => Some(b),
            _ => None,
        }
    }

    pub fn validate(&self, x: &SparseVector) -> Result<()> {
        if let Some(max) = x.max_index() {
            if max > self.window {
                return Err(GlabError::WindowExceeded {
                    index: max,
                    window: self.window,
                });
            }
        }
        if self.field == Field::Real {
            if let Some(i) = x.first_non_real() {
                return Err(GlabError::NonRealCoefficient(i));
            }
        }
        Ok(())
    }

    pub fn norm(&self, x: &SparseVector) -> Result<f64> {
        self.validate(x)?;
        Ok(self.norm_unchecked(&x.packed()))
    }

    /// Norm kernel on a validated, sorted `(index, coefficient)` slice.
    /// Callers inside hot loops validate once and reuse this.
    pub fn norm_unchecked(&self, packed: &[(u32, Coef)]) -> f64 {
        match &self.kind {
            SpaceKind::Summing => norm_summing(packed),
            SpaceKind::Difference => norm_difference(packed),
            SpaceKind::Lp(p) => norm_lp(*p, packed),
            SpaceKind::Trig { p, grid, .. } => {
                let table = self.twiddle_table(*grid);
                norm_trig(*p, *grid, table, packed)
            }
            SpaceKind::Block(spec) => norm_block(spec, packed),
        }
    }

    fn twiddle_table(&self, grid: u32) -> &[Complex64] {
        self.twiddle.get_or_init(|| {
            (0..grid)
                .map(|k| {
                    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / grid as f64)
                })
                .collect()
        })
    }

    /// max over balanced sign vectors on block k of |<1_{sigma S_k}, x>|.
    pub fn balanced_sign_max(&self, block: usize, x: &SparseVector) -> Result<f64> {
        let spec = self.block_spec().ok_or_else(|| {
            GlabError::Unsupported("balanced_sign_max needs a block space".into())
        })?;
        self.validate(x)?;
        if block == 0 || block > spec.num_blocks() {
            return Err(GlabError::Invalid(format!(
                "block index {block} out of range 1..={}",
                spec.num_blocks()
            )));
        }
        let vals: Vec<f64> = x
            .iter()
            .filter(|(i, _)| spec.block_of(*i) == Some(block))
            .map(|(_, c)| c.re)
            .collect();
        spec.balanced_sign_max(block, &vals)
    }

    // --- basis metadata -------------------------------------------------

    /// Norm of the n-th basis vector.
    pub fn basis_norm(&self, n: u32) -> f64 {
        match &self.kind {
            SpaceKind::Difference if n >= 2 => 2.0,
            _ => 1.0,
        }
    }

    /// Norm of the n-th coordinate functional.
    pub fn dual_norm(&self, n: u32) -> f64 {
        match &self.kind {
            SpaceKind::Summing if n >= 2 => 2.0,
            _ => 1.0,
        }
    }

    /// sup over n, j of dual_norm(n) * basis_norm(j).
    pub fn cross_constant(&self) -> f64 {
        match &self.kind {
            SpaceKind::Summing | SpaceKind::Difference => 2.0,
            _ => 1.0,
        }
    }

    /// sup over n of dual_norm(n) * basis_norm(n).
    pub fn biorth_constant(&self) -> f64 {
        match &self.kind {
            SpaceKind::Summing | SpaceKind::Difference => 2.0,
            _ => 1.0,
        }
    }

    /// Basis constant sup_N ||S_N|| when known exactly.
    pub fn basis_constant(&self) -> Option<f64> {
        match &self.kind {
            SpaceKind::Summing | SpaceKind::Difference | SpaceKind::Lp(_) => Some(1.0),
            _ => None,
        }
    }

    /// Upper bound for max{sup ||F_N||, sup ||I - F_N||} over the averaging
    /// operators F_N. Exactly 1 + basis constant where that is known; for
    /// the trigonometric spaces a conservative documented constant is
    /// stored, used only to scale lower-bound checks.
    pub fn averaging_constant(&self) -> Option<f64> {
        match &self.kind {
            SpaceKind::Summing | SpaceKind::Difference | SpaceKind::Lp(_) => Some(2.0),
            SpaceKind::Trig { .. } => Some(3.0),
            SpaceKind::Block(_) => None,
        }
    }

    /// [c1, c2] such that geometric frequency sets A = {2^j} of size m have
    /// indicator L^p norm in [c1 sqrt(m), c2 sqrt(m)], for p in {1, 2, 4}.
    pub fn lacunary_band(&self) -> Option<(f64, f64)> {
        match &self.kind {
            SpaceKind::Trig { p, .. } => {
                if *p == 1.0 {
                    Some((1.0 / 2f64.sqrt(), 1.0))
                } else if *p == 2.0 {
                    Some((1.0, 1.0))
                } else if *p == 4.0 {
                    Some((1.0, 2f64.powf(0.25)))
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

fn fmt_exponent(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else if p == 4.0 / 3.0 {
        "4/3".into()
    } else if p == p.trunc() {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

pub fn parse_exponent(s: &str) -> Result<f64> {
    let p = if s == "inf" {
        f64::INFINITY
    } else if let Some((a, b)) = s.split_once('/') {
        let num: f64 = a
            .parse()
            .map_err(|_| GlabError::Usage(format!("bad exponent '{s}'")))?;
        let den: f64 = b
            .parse()
            .map_err(|_| GlabError::Usage(format!("bad exponent '{s}'")))?;
        num / den
    } else {
        s.parse()
            .map_err(|_| GlabError::Usage(format!("bad exponent '{s}'")))?
    };
    if p >= 1.0 {
        Ok(p)
    } else {
        Err(GlabError::Usage(format!("exponent {s} must be >= 1")))
    }
}

// --- norm kernels -------------------------------------------------------

fn norm_summing(packed: &[(u32, Coef)]) -> f64 {
    let mut acc = Complex64::default();
    let mut best = 0.0f64;
    for &(_, c) in packed {
        acc += c;
        best = best.max(modulus(acc));
    }
    best
}

fn norm_difference(packed: &[(u32, Coef)]) -> f64 {
    let mut total = 0.0f64;
    for (pos, &(i, c)) in packed.iter().enumerate() {
        // term at n = i-1 when the left neighbor is absent
        let left_present = pos > 0 && packed[pos - 1].0 == i - 1;
        if i >= 2 && !left_present {
            total += modulus(c);
        }
        // term at n = i
        let right = packed
            .get(pos + 1)
            .filter(|&&(j, _)| j == i + 1)
            .map(|&(_, c)| c)
            .unwrap_or_default();
        total += modulus(c - right);
    }
    total
}

fn norm_lp(p: f64, packed: &[(u32, Coef)]) -> f64 {
    if p.is_infinite() {
        return packed.iter().map(|&(_, c)| modulus(c)).fold(0.0, f64::max);
    }
    if p == 1.0 {
        return packed.iter().map(|&(_, c)| modulus(c)).sum();
    }
    if p == 2.0 {
        return packed
            .iter()
            .map(|&(_, c)| c.norm_sqr())
            .sum::<f64>()
            .sqrt();
    }
    packed
        .iter()
        .map(|&(_, c)| modulus(c).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Frequency hosted by storage index n.
pub fn storage_freq(n: u32) -> i64 {
    if n == 1 {
        0
    } else if n % 2 == 0 {
        (n / 2) as i64
    } else {
        -(((n - 1) / 2) as i64)
    }
}

/// Storage index hosting frequency f.
pub fn freq_storage(f: i64) -> u32 {
    if f == 0 {
        1
    } else if f > 0 {
        2 * f as u32
    } else {
        (-2 * f + 1) as u32
    }
}

fn norm_trig(p: f64, grid: u32, table: &[Complex64], packed: &[(u32, Coef)]) -> f64 {
    let g = grid as i64;
    let mut sup = 0.0f64;
    let mut acc = 0.0f64;
    for point in 0..g {
        let mut value = Complex64::default();
        for &(n, c) in packed {
            let k = (storage_freq(n) * point).rem_euclid(g) as usize;
            value += c * table[k];
        }
        let a = modulus(value);
        if p.is_infinite() {
            sup = sup.max(a);
        } else if p == 2.0 {
            acc += a * a;
        } else if p == 1.0 {
            acc += a;
        } else {
            acc += a.powf(p);
        }
    }
    if p.is_infinite() {
        sup
    } else {
        let mean = acc / g as f64;
        if p == 2.0 {
            mean.sqrt()
        } else if p == 1.0 {
            mean
        } else {
            mean.powf(1.0 / p)
        }
    }
}

fn norm_block(spec: &BlockSpec, packed: &[(u32, Coef)]) -> f64 {
    let mut best = packed.iter().map(|&(_, c)| modulus(c)).fold(0.0, f64::max);
    let nb = spec.num_blocks();
    // per-block coefficient lists, in block order
    let mut by_block: Vec<Vec<f64>> = vec![Vec::new(); nb];
    for &(i, c) in packed {
        if let Some(k) = spec.block_of(i) {
            by_block[k - 1].push(c.re);
        }
    }
    for k in 1..=nb {
        let alpha = spec.alpha(k);
        if alpha > 0.0 && !by_block[k - 1].is_empty() {
            let bsm = spec
                .balanced_sign_max(k, &by_block[k - 1])
                .expect("even block sizes are enforced at construction");
            best = best.max(alpha * bsm);
        }
    }
    // tail sums: for each k, the N_k largest |values| strictly after block k
    for k in 1..nb {
        let beta = spec.beta(k);
        if beta == 0.0 {
            continue;
        }
        let mut tail: Vec<f64> = by_block[k..]
            .iter()
            .flat_map(|v| v.iter().map(|x| x.abs()))
            .collect();
        if tail.is_empty() {
            continue;
        }
        tail.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let take = spec.block_size(k).min(tail.len() as f64) as usize;
        let sum: f64 = tail[..take].iter().sum();
        best = best.max(beta * sum);
    }
    best
}

// --- basis-ordering operators --------------------------------------------

/// Restriction to the first N coordinates.
pub fn partial_sum(x: &SparseVector, n: u32) -> SparseVector {
    x.restrict(&IndexSet::range(1, n))
}

/// Average of the first N partial sums: coefficient j is scaled by
/// 1 - (j-1)/N for j <= N and dropped beyond.
pub fn cesaro_mean(x: &SparseVector, n: u32) -> SparseVector {
    let mut out = SparseVector::new();
    for (j, c) in x.iter() {
        if j <= n {
            let w = 1.0 - (j - 1) as f64 / n as f64;
            out.set(j, c * w).unwrap();
        }
    }
    out
}

/// Window operator with flat pass below N and a linear ramp to zero at M:
/// coefficient j is kept for j <= N, scaled by 1 - (j-N-1)/(M-N) for
/// N < j <= M, and dropped beyond. Requires M > N >= 1.
pub fn vallee_poussin(x: &SparseVector, n: u32, m: u32) -> Result<SparseVector> {
    if m <= n || n == 0 {
        return Err(GlabError::Invalid(format!(
            "window operator needs M > N >= 1, got N={n}, M={m}"
        )));
    }
    let mut out = SparseVector::new();
    for (j, c) in x.iter() {
        if j <= n {
            out.set(j, c)?;
        } else if j <= m {
            let w = 1.0 - (j - n - 1) as f64 / (m - n) as f64;
            out.set(j, c * w)?;
        }
    }
    Ok(out)
}

//! The weight operator `A f = f/(1+|·|)`, the norm
//! `‖f‖ = sup_x |f(x)|/(1+|x|)`, and its two computation routes: an exact
//! closed form for piecewise-linear functions and a brute-force oracle over
//! a grid on the compactified line.
//!
//! The compactification uses `x = t/(1−|t|)` for `t ∈ (−1, 1)`, whose
//! inverse `t = x/(1+|x|)` is exactly the weight, so uniform spacing in `t`
//! is uniform spacing in `A`-units.

use crate::network::ReluNetwork;
use crate::piecewise::PiecewiseLinear;
use crate::pl_algebra::network_to_pl;
use crate::target::{ExtendedPoint, YTarget};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Plus,
    Minus,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::Plus => write!(f, "+inf"),
            Side::Minus => write!(f, "-inf"),
        }
    }
}

#[derive(Debug, Error)]
pub enum NormError {
    #[error("target `{label}` has no declared asymptotic value at {side}; estimate it first")]
    MissingAsymptotics { label: String, side: Side },
    #[error("target not evaluable: non-finite value at x = {x}")]
    NotEvaluable { x: f64 },
    #[error(
        "asymptotic ratio at {side} did not settle (last differences {last_diffs:?}); \
         target may not lie in the weighted space"
    )]
    AlphaNonConvergence { side: Side, last_diffs: Vec<f64> },
}

/// Anything that can be paired with the weight: pointwise evaluation on R
/// plus the two boundary values of `A f` on the compactified line.
pub trait YElement {
    fn eval_at(&self, x: f64) -> f64;
    fn boundary_value(&self, side: Side) -> Result<f64, NormError>;
}

impl YElement for ReluNetwork {
    fn eval_at(&self, x: f64) -> f64 {
        self.eval(x)
    }

    /// `A f(+∞) = Σ_{aᵢ>0} cᵢaᵢ` and `A f(−∞) = −Σ_{aᵢ<0} cᵢaᵢ`: the tail
    /// slopes, with the sign flip on the left because the weight is `1 − x`
    /// there.
    fn boundary_value(&self, side: Side) -> Result<f64, NormError> {
        Ok(match side {
            Side::Plus => self.right_tail_slope(),
            Side::Minus => -self.left_tail_slope(),
        })
    }
}

impl YElement for PiecewiseLinear {
    fn eval_at(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn boundary_value(&self, side: Side) -> Result<f64, NormError> {
        Ok(match side {
            Side::Plus => self.right_slope(),
            Side::Minus => -self.left_slope(),
        })
    }
}

impl YElement for YTarget {
    fn eval_at(&self, x: f64) -> f64 {
        self.eval(x)
    }

    fn boundary_value(&self, side: Side) -> Result<f64, NormError> {
        let declared = match side {
            Side::Plus => self.declared_alpha_plus(),
            Side::Minus => self.declared_alpha_minus(),
        };
        declared.ok_or_else(|| NormError::MissingAsymptotics {
            label: self.label().to_string(),
            side,
        })
    }
}

/// `A f` at a point of the compactified line: `f(x)/(1+|x|)` at finite
/// points, the boundary values at `±∞`.
pub fn apply_a<F: YElement + ?Sized>(f: &F, p: ExtendedPoint) -> Result<f64, NormError> {
    match p {
        ExtendedPoint::Finite(x) => {
            let v = f.eval_at(x) / (1.0 + x.abs());
            if v.is_finite() {
                Ok(v)
            } else {
                Err(NormError::NotEvaluable { x })
            }
        }
        ExtendedPoint::PlusInfinity => f.boundary_value(Side::Plus),
        ExtendedPoint::MinusInfinity => f.boundary_value(Side::Minus),
    }
}

/// Symmetric grid on the compactified line: `t = k/n` for `k ∈ [−n, n]`
/// mapped through `x = t/(1−|t|)`, with `t = ±1` the boundary points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompactGrid {
    n: u32,
}

impl CompactGrid {
    pub fn new(resolution: u32) -> Self {
        assert!(resolution >= 1, "grid resolution must be positive");
        CompactGrid { n: resolution }
    }

    pub fn resolution(&self) -> u32 {
        self.n
    }

    /// Number of grid points, `2n + 1`.
    pub fn len(&self) -> usize {
        2 * self.n as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The grid point with index `k ∈ [−n, n]`; `x_k = k/(n − |k|)` is the
    /// exact image of `t = k/n`.
    pub fn point(&self, k: i64) -> ExtendedPoint {
        let n = self.n as i64;
        debug_assert!(-n <= k && k <= n);
        if k == n {
            ExtendedPoint::PlusInfinity
        } else if k == -n {
            ExtendedPoint::MinusInfinity
        } else {
            ExtendedPoint::Finite(k as f64 / (n - k.abs()) as f64)
        }
    }

    /// All points in increasing order, boundaries included.
    pub fn points(&self) -> impl Iterator<Item = ExtendedPoint> + '_ {
        let n = self.n as i64;
        (-n..=n).map(move |k| self.point(k))
    }

    /// Finite points in increasing order.
    pub fn finite_xs(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n as i64;
        ((1 - n)..n).map(move |k| k as f64 / (n - k.abs()) as f64)
    }

    /// Largest finite coordinate on the grid, `n − 1`.
    pub fn max_finite_x(&self) -> f64 {
        (self.n - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    ExactPl,
    GridOracle,
}

impl NormMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormMethod::ExactPl => "exact_pl",
            NormMethod::GridOracle => "grid_oracle",
        }
    }
}

/// Value and arg-max of a norm computation. The witness may be `±∞` when
/// the supremum is a tail limit rather than attained; ties go to the
/// smallest point in the extended-line order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub value: f64,
    pub witness: ExtendedPoint,
    pub method: NormMethod,
}

fn fold_candidate(best: &mut Option<(f64, ExtendedPoint)>, value: f64, at: ExtendedPoint) {
    match best {
        Some((v, _)) if value <= *v => {}
        _ => *best = Some((value, at)),
    }
}

/// Exact weighted norm of a piecewise-linear function. On every maximal
/// interval where both `f` and the weight are affine the ratio is monotone,
/// so the supremum over R is attained among: the knots, `x = 0`, and the
/// tail limits `|m_R|`, `|m_L|`.
pub fn y_norm_exact(pl: &PiecewiseLinear) -> NormReport {
    let weighted = |x: f64| (pl.eval(x) / (1.0 + x.abs())).abs();

    // Candidates in increasing order so ties keep the smallest witness.
    let mut best: Option<(f64, ExtendedPoint)> = None;
    fold_candidate(&mut best, pl.left_slope().abs(), ExtendedPoint::MinusInfinity);
    let mut candidates: Vec<f64> = pl.knots().to_vec();
    if !candidates.contains(&0.0) {
        candidates.push(0.0);
        candidates.sort_by(f64::total_cmp);
    }
    for x in candidates {
        fold_candidate(&mut best, weighted(x), ExtendedPoint::Finite(x));
    }
    fold_candidate(&mut best, pl.right_slope().abs(), ExtendedPoint::PlusInfinity);

    let (value, witness) = best.unwrap();
    NormReport { value, witness, method: NormMethod::ExactPl }
}

/// Brute-force weighted norm over a compactified grid: the independent
/// oracle against [`y_norm_exact`]. Always a lower bound on the true norm.
pub fn y_norm_grid<F: YElement + ?Sized>(
    f: &F,
    grid: &CompactGrid,
) -> Result<NormReport, NormError> {
    let mut best = None;
    for p in grid.points() {
        fold_candidate(&mut best, apply_a(f, p)?.abs(), p);
    }
    let (value, witness) = best.expect("grid has at least one point");
    Ok(NormReport { value, witness, method: NormMethod::GridOracle })
}

/// Same as [`y_norm_grid`] with the scan split over `threads` chunks. The
/// max-reduction resolves ties toward the smallest coordinate, so the
/// result does not depend on the split.
pub fn y_norm_grid_threaded<F: YElement + Sync + ?Sized>(
    f: &F,
    grid: &CompactGrid,
    threads: usize,
) -> Result<NormReport, NormError> {
    let n = grid.resolution() as i64;
    let threads = threads.clamp(1, 256) as i64;

    let scan = |from: i64, to: i64| -> Result<Option<(f64, ExtendedPoint)>, NormError> {
        let mut best = None;
        for k in from..to {
            let p = grid.point(k);
            fold_candidate(&mut best, apply_a(f, p)?.abs(), p);
        }
        Ok(best)
    };

    let merged = if threads == 1 {
        scan(-n, n + 1)?
    } else {
        let total = 2 * n + 1;
        let chunk = total / threads + 1;
        let mut results = Vec::new();
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|i| {
                    let from = -n + i * chunk;
                    let to = (from + chunk).min(n + 1);
                    s.spawn(move || scan(from, to.max(from)))
                })
                .collect();
            for h in handles {
                results.push(h.join().expect("norm scan thread panicked"));
            }
        });
        let mut best = None;
        for r in results {
            if let Some((v, p)) = r? {
                fold_candidate(&mut best, v, p);
            }
        }
        best
    };

    let (value, witness) = merged.expect("grid has at least one point");
    Ok(NormReport { value, witness, method: NormMethod::GridOracle })
}

/// Schedule for estimating the asymptotic value of `A f`: evaluate at
/// `±2^k` for `k` in the range and accept once the last `window` successive
/// differences all fall below `tol`.
#[derive(Debug, Clone, Copy)]
pub struct AlphaSchedule {
    pub k_min: u32,
    pub k_max: u32,
    pub window: usize,
    pub tol: f64,
}

impl Default for AlphaSchedule {
    fn default() -> Self {
        AlphaSchedule { k_min: 10, k_max: 40, window: 3, tol: 1e-8 }
    }
}

/// Richardson-style limit estimate of `A f` at `side`, per [`AlphaSchedule`].
pub fn estimate_alpha_with(
    target: &YTarget,
    side: Side,
    schedule: &AlphaSchedule,
) -> Result<f64, NormError> {
    let sign = match side {
        Side::Plus => 1.0,
        Side::Minus => -1.0,
    };
    let mut values = Vec::with_capacity((schedule.k_max - schedule.k_min + 1) as usize);
    for k in schedule.k_min..=schedule.k_max {
        let x = sign * (2.0f64).powi(k as i32);
        let v = target.eval(x) / (1.0 + x.abs());
        if !v.is_finite() {
            return Err(NormError::NotEvaluable { x });
        }
        values.push(v);
    }
    let diffs: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let tail = &diffs[diffs.len().saturating_sub(schedule.window)..];
    if tail.len() >= schedule.window && tail.iter().all(|d| d.abs() <= schedule.tol) {
        Ok(*values.last().unwrap())
    } else {
        Err(NormError::AlphaNonConvergence { side, last_diffs: tail.to_vec() })
    }
}

pub fn estimate_alpha(target: &YTarget, side: Side) -> Result<f64, NormError> {
    estimate_alpha_with(target, side, &AlphaSchedule::default())
}

/// Declared asymptotics if present, otherwise estimated.
pub fn resolve_alphas(
    target: &YTarget,
    schedule: &AlphaSchedule,
) -> Result<(f64, f64), NormError> {
    let plus = match target.declared_alpha_plus() {
        Some(a) => a,
        None => estimate_alpha_with(target, Side::Plus, schedule)?,
    };
    let minus = match target.declared_alpha_minus() {
        Some(a) => a,
        None => estimate_alpha_with(target, Side::Minus, schedule)?,
    };
    Ok((plus, minus))
}

/// Both sides of the bounded-domain recapture inequality
/// `sup_{|x|≤R} |f| ≤ (1+R)·‖f‖`: the left side exactly (max over kinks in
/// range and the endpoints), the right side from the exact norm.
pub fn linf_bound_check(net: &ReluNetwork, radius: f64) -> (f64, f64) {
    assert!(radius > 0.0 && radius.is_finite());
    let mut lhs = net.eval(-radius).abs().max(net.eval(radius).abs());
    for u in net.units() {
        let k = u.kink();
        if -radius < k && k < radius {
            lhs = lhs.max(net.eval(k).abs());
        }
    }
    let rhs = (1.0 + radius) * y_norm_exact(&network_to_pl(net)).value;
    (lhs, rhs)
}

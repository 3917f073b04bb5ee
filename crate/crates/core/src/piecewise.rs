//! Canonical continuous piecewise-linear functions: strictly increasing
//! knots, one value per knot, and two tail slopes. With no knots the
//! function is the affine line `m·x + c0`. Canonical means no knot has
//! equal incoming and outgoing slope, so the representation of a given
//! function is unique.

use crate::network::ModelError;

/// Kink locations closer than this are merged during canonicalization;
/// they come from `-b/a` computed in floating point where exact-duplicate
/// intent dominates at this scale.
pub(crate) const KNOT_MERGE_TOL: f64 = 1e-12;

/// Relative slope-jump threshold below which a knot is treated as flat and
/// removed. Relative to the largest slope in play so legitimately tiny
/// features at small scales survive.
pub(crate) const JUMP_CANCEL_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<f64>,
    values: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
    /// Intercept of the line; only meaningful when `knots` is empty.
    intercept: f64,
}

impl PiecewiseLinear {
    /// Builds a canonical PL function from knot data. Tails extend with the
    /// given slopes from the extreme knots; knots whose slope jump is
    /// negligible are removed.
    pub fn from_knots(
        knots: Vec<f64>,
        values: Vec<f64>,
        left_slope: f64,
        right_slope: f64,
    ) -> Result<Self, ModelError> {
        if values.len() != knots.len() {
            return Err(ModelError::ValueCountMismatch {
                expected: knots.len(),
                got: values.len(),
            });
        }
        for &v in knots.iter().chain(values.iter()).chain([&left_slope, &right_slope]) {
            if !v.is_finite() {
                return Err(ModelError::NonFinite(v));
            }
        }
        for (i, w) in knots.windows(2).enumerate() {
            if w[0] >= w[1] {
                return Err(ModelError::KnotsNotIncreasing(i));
            }
        }
        if knots.is_empty() {
            if left_slope != right_slope {
                return Err(ModelError::LineSlopesDiffer);
            }
            return Ok(Self::line(left_slope, 0.0));
        }
        Ok(canonicalize(knots, values, left_slope, right_slope))
    }

    /// The affine line `x ↦ slope·x + intercept`.
    pub fn line(slope: f64, intercept: f64) -> Self {
        PiecewiseLinear {
            knots: Vec::new(),
            values: Vec::new(),
            left_slope: slope,
            right_slope: slope,
            intercept,
        }
    }

    pub fn zero() -> Self {
        Self::line(0.0, 0.0)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left_slope(&self) -> f64 {
        self.left_slope
    }

    pub fn right_slope(&self) -> f64 {
        self.right_slope
    }

    /// Intercept of the affine representation; 0 unless `knots` is empty.
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn is_line(&self) -> bool {
        self.knots.is_empty()
    }

    /// Exact evaluation: linear interpolation between bracketing knots,
    /// tail-slope extrapolation outside the knot range.
    pub fn eval(&self, x: f64) -> f64 {
        if self.knots.is_empty() {
            return self.left_slope * x + self.intercept;
        }
        match self.knots.binary_search_by(|k| k.total_cmp(&x)) {
            Ok(i) => self.values[i],
            Err(0) => self.values[0] + self.left_slope * (x - self.knots[0]),
            Err(i) if i == self.knots.len() => {
                self.values[i - 1] + self.right_slope * (x - self.knots[i - 1])
            }
            Err(i) => {
                let (x0, x1) = (self.knots[i - 1], self.knots[i]);
                let (v0, v1) = (self.values[i - 1], self.values[i]);
                v0 + (x - x0) * (v1 - v0) / (x1 - x0)
            }
        }
    }

    /// Slope of the segment immediately right of knot `i` (the tail slope
    /// for the last knot).
    pub(crate) fn outgoing_slope(&self, i: usize) -> f64 {
        if i + 1 == self.knots.len() {
            self.right_slope
        } else {
            (self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i])
        }
    }

    /// Slope jump at knot `i` (outgoing minus incoming); nonzero on every
    /// knot of a canonical function.
    pub(crate) fn slope_jump(&self, i: usize) -> f64 {
        let incoming = if i == 0 { self.left_slope } else { self.outgoing_slope(i - 1) };
        self.outgoing_slope(i) - incoming
    }
}

/// Assembles a piecewise-linear function from parts already known to be
/// canonical (strictly increasing knots, nonzero jumps). Used by the
/// network conversion, which derives jumps exactly from unit data.
pub(crate) fn assemble(
    knots: Vec<f64>,
    values: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
) -> PiecewiseLinear {
    debug_assert!(knots.windows(2).all(|w| w[0] < w[1]));
    debug_assert_eq!(knots.len(), values.len());
    debug_assert!(!knots.is_empty());
    PiecewiseLinear { knots, values, left_slope, right_slope, intercept: 0.0 }
}

/// Removes knots with negligible slope jump and merges coincident knots.
/// Input knots must be sorted (not necessarily strict: near-duplicates are
/// merged here).
pub(crate) fn canonicalize(
    knots: Vec<f64>,
    values: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
) -> PiecewiseLinear {
    debug_assert_eq!(knots.len(), values.len());

    // Merge knots closer than the absolute tolerance, keeping the first.
    let mut kx: Vec<f64> = Vec::with_capacity(knots.len());
    let mut kv: Vec<f64> = Vec::with_capacity(values.len());
    for (x, v) in knots.into_iter().zip(values) {
        match kx.last() {
            Some(&last) if x - last <= KNOT_MERGE_TOL => {}
            _ => {
                kx.push(x);
                kv.push(v);
            }
        }
    }

    // Segment slopes, tails included.
    let n = kx.len();
    let mut slopes = Vec::with_capacity(n + 1);
    slopes.push(left_slope);
    for i in 1..n {
        slopes.push((kv[i] - kv[i - 1]) / (kx[i] - kx[i - 1]));
    }
    slopes.push(right_slope);

    let jumps: Vec<f64> = (0..n).map(|i| slopes[i + 1] - slopes[i]).collect();
    let scale = jumps
        .iter()
        .fold(left_slope.abs().max(right_slope.abs()).max(1.0), |m, j| m.max(j.abs()));
    let cutoff = JUMP_CANCEL_REL_TOL * scale;

    let mut out_x = Vec::with_capacity(n);
    let mut out_v = Vec::with_capacity(n);
    for i in 0..n {
        if jumps[i].abs() > cutoff {
            out_x.push(kx[i]);
            out_v.push(kv[i]);
        }
    }

    if out_x.is_empty() {
        // Everything cancelled: the function is (numerically) affine.
        let (slope, intercept) = if n > 0 {
            (left_slope, kv[0] - left_slope * kx[0])
        } else {
            (left_slope, 0.0)
        };
        return PiecewiseLinear::line(slope, intercept);
    }

    PiecewiseLinear {
        knots: out_x,
        values: out_v,
        left_slope,
        right_slope,
        intercept: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hat_pl() -> PiecewiseLinear {
        PiecewiseLinear::from_knots(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0], 0.0, 0.0).unwrap()
    }

    #[test]
    fn eval_hat() {
        let hat = hat_pl();
        assert_eq!(hat.eval(1.0), 1.0);
        assert_eq!(hat.eval(1.5), 0.5);
        assert_eq!(hat.eval(-3.0), 0.0);
        assert_eq!(hat.eval(9.0), 0.0);
    }

    #[test]
    fn eval_line() {
        let id = PiecewiseLinear::line(1.0, 0.0);
        assert_eq!(id.eval(-4.0), -4.0);
        assert_eq!(id.eval(0.25), 0.25);
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(matches!(
            PiecewiseLinear::from_knots(vec![0.0, 0.0], vec![1.0, 2.0], 0.0, 0.0),
            Err(ModelError::KnotsNotIncreasing(0))
        ));
        assert!(matches!(
            PiecewiseLinear::from_knots(vec![0.0], vec![], 0.0, 0.0),
            Err(ModelError::ValueCountMismatch { .. })
        ));
    }

    #[test]
    fn canonicalization_drops_flat_knots() {
        // Middle knot lies exactly on the segment between its neighbours.
        let pl =
            PiecewiseLinear::from_knots(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 2.0], 0.0, 0.0)
                .unwrap();
        assert_eq!(pl.knots(), &[0.0, 2.0]);
    }

    #[test]
    fn all_flat_collapses_to_line() {
        let pl =
            PiecewiseLinear::from_knots(vec![1.0, 2.0], vec![3.0, 5.0], 2.0, 2.0).unwrap();
        assert!(pl.is_line());
        assert_eq!(pl.left_slope(), 2.0);
        assert_eq!(pl.eval(0.0), 1.0); // 3 − 2·1
        assert_eq!(pl.eval(10.0), 21.0);
    }

    #[test]
    fn continuity_at_knots() {
        let hat = hat_pl();
        for &k in hat.knots() {
            let eps = 1e-9;
            let left = hat.eval(k - eps);
            let right = hat.eval(k + eps);
            let at = hat.eval(k);
            assert!((left - at).abs() <= 2.0 * eps + 1e-15);
            assert!((right - at).abs() <= 2.0 * eps + 1e-15);
        }
    }

    #[test]
    fn eval_exact_at_knots() {
        let hat = hat_pl();
        assert_eq!(hat.eval(0.0), 0.0);
        assert_eq!(hat.eval(2.0), 0.0);
    }
}

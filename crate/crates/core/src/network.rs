//! Two-layer ReLU networks: finite sums `x ↦ Σ cᵢ · ReLU(aᵢx + bᵢ)` with
//! `aᵢ ≠ 0`. These are the elements of the linear span of shifted/scaled
//! ReLU units, stored exactly as their parameter lists.

use thiserror::Error;

/// The rectified linear unit, `max(x, 0)`.
#[inline]
pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("unit slope must be nonzero")]
    ZeroSlope,
    #[error("non-finite parameter: {0}")]
    NonFinite(f64),
    #[error("knots must be strictly increasing (violated near index {0})")]
    KnotsNotIncreasing(usize),
    #[error("expected {expected} knot values, got {got}")]
    ValueCountMismatch { expected: usize, got: usize },
    #[error("a knot-free function is a line and needs equal tail slopes")]
    LineSlopesDiffer,
    #[error("need at least 2 knots, got {got}")]
    TooFewKnots { got: usize },
}

/// One hidden unit `x ↦ c · ReLU(ax + b)`. The slope `a` is nonzero so the
/// unit always has a genuine kink at `-b/a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReluUnit {
    slope: f64,
    offset: f64,
    coefficient: f64,
}

impl ReluUnit {
    pub fn new(slope: f64, offset: f64, coefficient: f64) -> Result<Self, ModelError> {
        for v in [slope, offset, coefficient] {
            if !v.is_finite() {
                return Err(ModelError::NonFinite(v));
            }
        }
        if slope == 0.0 {
            return Err(ModelError::ZeroSlope);
        }
        Ok(ReluUnit { slope, offset, coefficient })
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// Location of the kink, `-b/a`.
    pub fn kink(&self) -> f64 {
        -self.offset / self.slope
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.coefficient * relu(self.slope * x + self.offset)
    }
}

/// A finite two-layer ReLU network. The empty network is the zero function.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReluNetwork {
    units: Vec<ReluUnit>,
}

impl ReluNetwork {
    pub fn new(units: Vec<ReluUnit>) -> Self {
        ReluNetwork { units }
    }

    /// The zero function (empty sum).
    pub fn zero() -> Self {
        ReluNetwork { units: Vec::new() }
    }

    /// Builds a network from `(a, b, c)` triples, validating each unit.
    pub fn from_triples(triples: &[(f64, f64, f64)]) -> Result<Self, ModelError> {
        let units = triples
            .iter()
            .map(|&(a, b, c)| ReluUnit::new(a, b, c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ReluNetwork { units })
    }

    pub fn units(&self) -> &[ReluUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Exact evaluation `Σ cᵢ · ReLU(aᵢx + bᵢ)`; the empty sum is 0.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.units.iter().map(|u| u.eval(x)).sum()
    }

    /// Slope of the function far to the left: `Σ_{aᵢ<0} cᵢ·aᵢ`. For
    /// `x` below every kink only the negative-slope units are active.
    pub fn left_tail_slope(&self) -> f64 {
        self.units
            .iter()
            .filter(|u| u.slope < 0.0)
            .map(|u| u.coefficient * u.slope)
            .sum()
    }

    /// Slope of the function far to the right: `Σ_{aᵢ>0} cᵢ·aᵢ`.
    pub fn right_tail_slope(&self) -> f64 {
        self.units
            .iter()
            .filter(|u| u.slope > 0.0)
            .map(|u| u.coefficient * u.slope)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_branches() {
        assert_eq!(relu(3.0), 3.0);
        assert_eq!(relu(-2.5), 0.0);
        assert_eq!(relu(0.0), 0.0);
    }

    #[test]
    fn relu_positive_homogeneity() {
        for &lambda in &[0.5, 2.0, 7.25] {
            for i in -20..=20 {
                let x = i as f64 * 0.37;
                assert_eq!(relu(lambda * x), lambda * relu(x));
            }
        }
    }

    #[test]
    fn zero_slope_rejected() {
        assert_eq!(ReluUnit::new(0.0, 1.0, 1.0), Err(ModelError::ZeroSlope));
        assert!(matches!(
            ReluUnit::new(f64::NAN, 1.0, 1.0),
            Err(ModelError::NonFinite(_))
        ));
        assert!(matches!(
            ReluUnit::new(1.0, f64::INFINITY, 1.0),
            Err(ModelError::NonFinite(_))
        ));
    }

    // max(1−|x−1|, 0) written as three units: ReLU(x) + ReLU(x−2) − 2·ReLU(x−1)
    fn hat_net() -> ReluNetwork {
        ReluNetwork::from_triples(&[(1.0, 0.0, 1.0), (1.0, -2.0, 1.0), (1.0, -1.0, -2.0)]).unwrap()
    }

    #[test]
    fn eval_hat_identity_points() {
        let net = hat_net();
        assert_eq!(net.eval(1.0), 1.0);
        assert_eq!(net.eval(0.5), 0.5);
        assert_eq!(ReluNetwork::zero().eval(7.0), 0.0);
    }

    #[test]
    fn eval_is_continuous_on_samples() {
        // No jump larger than the Lipschitz bound times the step.
        let net = hat_net();
        let lipschitz: f64 = net
            .units()
            .iter()
            .map(|u| (u.coefficient() * u.slope()).abs())
            .sum();
        let step = 1e-4;
        let mut prev = net.eval(-5.0);
        let mut x = -5.0;
        while x < 5.0 {
            x += step;
            let y = net.eval(x);
            assert!((y - prev).abs() <= lipschitz * step + 1e-12);
            assert!(y.is_finite());
            prev = y;
        }
    }

    #[test]
    fn tail_slopes() {
        let net = ReluNetwork::from_triples(&[(2.0, 1.0, 3.0), (-1.0, 0.0, 4.0)]).unwrap();
        assert_eq!(net.right_tail_slope(), 6.0);
        assert_eq!(net.left_tail_slope(), -4.0);
    }
}

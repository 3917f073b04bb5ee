//! Targets living in the weighted space: a pointwise evaluator plus the
//! (declared or yet-to-be-estimated) limits of `f(x)/(1+|x|)` at `±∞`,
//! and points of the two-point compactification `R ∪ {±∞}`.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

/// A point of the extended real line. Ordered so that
/// `-∞ < finite < +∞`, which is also the tie-breaking order used when a
/// supremum is attained at several points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedPoint {
    MinusInfinity,
    Finite(f64),
    PlusInfinity,
}

impl ExtendedPoint {
    pub fn finite(x: f64) -> Self {
        debug_assert!(x.is_finite());
        ExtendedPoint::Finite(x)
    }

    pub fn as_finite(&self) -> Option<f64> {
        match self {
            ExtendedPoint::Finite(x) => Some(*x),
            _ => None,
        }
    }

    pub fn total_cmp(&self, other: &Self) -> Ordering {
        use ExtendedPoint::*;
        match (self, other) {
            (MinusInfinity, MinusInfinity) | (PlusInfinity, PlusInfinity) => Ordering::Equal,
            (MinusInfinity, _) | (_, PlusInfinity) => Ordering::Less,
            (_, MinusInfinity) | (PlusInfinity, _) => Ordering::Greater,
            (Finite(a), Finite(b)) => a.total_cmp(b),
        }
    }
}

impl fmt::Display for ExtendedPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedPoint::MinusInfinity => write!(f, "-inf"),
            ExtendedPoint::PlusInfinity => write!(f, "+inf"),
            ExtendedPoint::Finite(x) => write!(f, "{x}"),
        }
    }
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An opaque target function. `alpha_plus`/`alpha_minus` are the limits of
/// `f(x)/(1+|x|)` at `±∞` when the caller declares them; otherwise they are
/// estimated on demand (see `weighted_norm::estimate_alpha`).
#[derive(Clone)]
pub struct YTarget {
    evaluator: Evaluator,
    alpha_plus: Option<f64>,
    alpha_minus: Option<f64>,
    label: String,
}

impl YTarget {
    pub fn new(
        label: impl Into<String>,
        evaluator: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        YTarget {
            evaluator: Arc::new(evaluator),
            alpha_plus: None,
            alpha_minus: None,
            label: label.into(),
        }
    }

    /// Declares the asymptotic values of `f/(1+|·|)`; both must be finite.
    pub fn with_alphas(mut self, alpha_plus: f64, alpha_minus: f64) -> Self {
        assert!(alpha_plus.is_finite() && alpha_minus.is_finite());
        self.alpha_plus = Some(alpha_plus);
        self.alpha_minus = Some(alpha_minus);
        self
    }

    pub fn with_alpha_plus(mut self, alpha: f64) -> Self {
        assert!(alpha.is_finite());
        self.alpha_plus = Some(alpha);
        self
    }

    pub fn with_alpha_minus(mut self, alpha: f64) -> Self {
        assert!(alpha.is_finite());
        self.alpha_minus = Some(alpha);
        self
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }

    pub fn declared_alpha_plus(&self) -> Option<f64> {
        self.alpha_plus
    }

    pub fn declared_alpha_minus(&self) -> Option<f64> {
        self.alpha_minus
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Debug for YTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("YTarget")
            .field("label", &self.label)
            .field("alpha_plus", &self.alpha_plus)
            .field("alpha_minus", &self.alpha_minus)
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extended_point_order() {
        let pts = [
            ExtendedPoint::MinusInfinity,
            ExtendedPoint::finite(-3.0),
            ExtendedPoint::finite(0.0),
            ExtendedPoint::finite(5.0),
            ExtendedPoint::PlusInfinity,
        ];
        for w in pts.windows(2) {
            assert_eq!(w[0].total_cmp(&w[1]), Ordering::Less);
        }
    }

    #[test]
    fn target_eval_and_alphas() {
        let t = YTarget::new("abs", |x: f64| x.abs()).with_alphas(1.0, 1.0);
        assert_eq!(t.eval(-2.0), 2.0);
        assert_eq!(t.declared_alpha_plus(), Some(1.0));
        assert_eq!(t.declared_alpha_minus(), Some(1.0));
    }
}

//! Lossless conversion between ReLU networks and canonical piecewise-linear
//! functions, the standard gadgets built from single kinks (hats, ramps,
//! bounded steps), and the linear-space operations on both representations.
//!
//! The two directions are exact inverses up to floating-point rounding:
//! a network's kinks become knots with slope jump `cᵢ·|aᵢ|`, and a knot
//! with slope jump `δ` becomes the unit `δ·ReLU(x − knot)`. Affine parts
//! are spanned by `x = ReLU(x) − ReLU(−x)` and the four-unit constant
//! `ReLU(x) − ReLU(−x) − ReLU(x−1) + ReLU(1−x) = 1`.

use crate::network::{ModelError, ReluNetwork, ReluUnit};
use crate::piecewise::{
    assemble, canonicalize, PiecewiseLinear, JUMP_CANCEL_REL_TOL, KNOT_MERGE_TOL,
};

/// Converts a network to the canonical piecewise-linear function it
/// computes. Each unit contributes the slope jump `c·|a|` at its kink
/// `−b/a`; coincident kinks merge, jumps that cancel drop their knot, and
/// knot values are direct evaluations, so the result agrees with the
/// network pointwise. Jumps come from the unit data rather than from value
/// differences, which would cancel catastrophically for close kinks.
pub fn network_to_pl(net: &ReluNetwork) -> PiecewiseLinear {
    if net.is_empty() {
        return PiecewiseLinear::zero();
    }

    let mut kinks: Vec<(f64, f64)> = net
        .units()
        .iter()
        .map(|u| (u.kink(), u.coefficient() * u.slope().abs()))
        .collect();
    kinks.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Merge coincident kinks, accumulating their jumps.
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(kinks.len());
    for (x, jump) in kinks {
        match merged.last_mut() {
            Some((last, total)) if x - *last <= KNOT_MERGE_TOL => *total += jump,
            _ => merged.push((x, jump)),
        }
    }

    let left_slope = net.left_tail_slope();
    let right_slope = net.right_tail_slope();
    let scale = merged
        .iter()
        .fold(left_slope.abs().max(right_slope.abs()).max(1.0), |m, (_, j)| m.max(j.abs()));
    let cutoff = JUMP_CANCEL_REL_TOL * scale;

    let knots: Vec<f64> =
        merged.iter().filter(|(_, j)| j.abs() > cutoff).map(|(x, _)| *x).collect();
    if knots.is_empty() {
        // Every kink cancelled: the function is affine with f(0) as anchor.
        return PiecewiseLinear::line(left_slope, net.eval(0.0));
    }
    let values: Vec<f64> = knots.iter().map(|&k| net.eval(k)).collect();
    assemble(knots, values, left_slope, right_slope)
}

/// Converts a canonical piecewise-linear function to a network computing
/// the same values: affine-part gadget first (slope, then constant), then
/// one unit `δⱼ·ReLU(x − xⱼ)` per knot in knot order.
pub fn pl_to_network(pl: &PiecewiseLinear) -> ReluNetwork {
    let mut units: Vec<ReluUnit> = Vec::new();

    // Left-tail affine extension m_L·x + c_L.
    let (m_left, c_left) = if pl.is_line() {
        (pl.left_slope(), pl.intercept())
    } else {
        let x0 = pl.knots()[0];
        (pl.left_slope(), pl.values()[0] - pl.left_slope() * x0)
    };

    let unit = |a: f64, b: f64, c: f64| ReluUnit::new(a, b, c).expect("tabulated unit is valid");

    if m_left != 0.0 {
        // m_L·x = m_L·(ReLU(x) − ReLU(−x))
        units.push(unit(1.0, 0.0, m_left));
        units.push(unit(-1.0, 0.0, -m_left));
    }
    if c_left != 0.0 {
        // c_L·1 with 1 = ReLU(x) − ReLU(−x) − ReLU(x−1) + ReLU(1−x)
        units.push(unit(1.0, 0.0, c_left));
        units.push(unit(-1.0, 0.0, -c_left));
        units.push(unit(1.0, -1.0, -c_left));
        units.push(unit(-1.0, 1.0, c_left));
    }
    for i in 0..pl.knots().len() {
        let jump = pl.slope_jump(i);
        units.push(unit(1.0, -pl.knots()[i], jump));
    }

    ReluNetwork::new(units)
}

/// The triangular bump `max(1 − |x − center|/halfwidth, 0)` as a three-unit
/// network with kinks at `center ± halfwidth` and `center`.
pub fn hat(center: f64, halfwidth: f64) -> Result<ReluNetwork, ModelError> {
    if !(halfwidth > 0.0 && halfwidth.is_finite() && center.is_finite()) {
        return Err(ModelError::NonFinite(halfwidth));
    }
    let s = 1.0 / halfwidth;
    ReluNetwork::from_triples(&[
        (1.0, halfwidth - center, s),
        (1.0, -halfwidth - center, s),
        (1.0, -center, -2.0 * s),
    ])
}

/// `ReLU(x)`: the network whose weighted boundary values are 1 at `+∞` and
/// 0 at `−∞`.
pub fn ramp_plus() -> ReluNetwork {
    ReluNetwork::from_triples(&[(1.0, 0.0, 1.0)]).unwrap()
}

/// `ReLU(−x)`: boundary values 0 at `+∞`, 1 at `−∞`.
pub fn ramp_minus() -> ReluNetwork {
    ReluNetwork::from_triples(&[(-1.0, 0.0, 1.0)]).unwrap()
}

/// The bounded step `ReLU(x) − ReLU(x−1)`: ramps from 0 to 1 on `[0, 1]`
/// and stays there. Its weighted boundary values vanish.
pub fn step_f() -> ReluNetwork {
    ReluNetwork::from_triples(&[(1.0, 0.0, 1.0), (1.0, -1.0, -1.0)]).unwrap()
}

/// The mirror step `ReLU(−x) − ReLU(−x−1)`, i.e. `step_f(−x)`.
pub fn step_g() -> ReluNetwork {
    ReluNetwork::from_triples(&[(-1.0, 0.0, 1.0), (-1.0, -1.0, -1.0)]).unwrap()
}

/// Pointwise sum of two networks: unit-list concatenation.
pub fn net_add(p: &ReluNetwork, q: &ReluNetwork) -> ReluNetwork {
    let mut units = p.units().to_vec();
    units.extend_from_slice(q.units());
    ReluNetwork::new(units)
}

/// Pointwise scaling of a network: multiplies every coefficient.
pub fn net_scale(p: &ReluNetwork, s: f64) -> ReluNetwork {
    let units = p
        .units()
        .iter()
        .map(|u| ReluUnit::new(u.slope(), u.offset(), s * u.coefficient()).unwrap())
        .collect();
    ReluNetwork::new(units)
}

/// Pointwise sum of two piecewise-linear functions over the merged knot
/// set, canonicalized.
pub fn pl_add(p: &PiecewiseLinear, q: &PiecewiseLinear) -> PiecewiseLinear {
    let mut knots: Vec<f64> = p.knots().iter().chain(q.knots()).copied().collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    if knots.is_empty() {
        return PiecewiseLinear::line(
            p.left_slope() + q.left_slope(),
            p.intercept() + q.intercept(),
        );
    }
    let values: Vec<f64> = knots.iter().map(|&x| p.eval(x) + q.eval(x)).collect();
    canonicalize(
        knots,
        values,
        p.left_slope() + q.left_slope(),
        p.right_slope() + q.right_slope(),
    )
}

/// Pointwise scaling of a piecewise-linear function, canonicalized (scaling
/// by 0 collapses to the zero line).
pub fn pl_scale(p: &PiecewiseLinear, s: f64) -> PiecewiseLinear {
    if p.is_line() {
        return PiecewiseLinear::line(s * p.left_slope(), s * p.intercept());
    }
    let values: Vec<f64> = p.values().iter().map(|v| s * v).collect();
    canonicalize(p.knots().to_vec(), values, s * p.left_slope(), s * p.right_slope())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relu;

    fn assert_pointwise_eq(net: &ReluNetwork, pl: &PiecewiseLinear, tol: f64) {
        let mut x = -20.0;
        while x <= 20.0 {
            let (a, b) = (net.eval(x), pl.eval(x));
            let scale = 1.0_f64.max(a.abs()).max(b.abs());
            assert!((a - b).abs() <= tol * scale, "mismatch at x={x}: {a} vs {b}");
            x += 0.0625;
        }
    }

    #[test]
    fn hat_identity_three_units() {
        // max(1−|x−1|, 0) = ReLU(x) + ReLU(x−2) − 2·ReLU(x−1)
        let h = hat(1.0, 1.0).unwrap();
        let mut x = -5.0;
        while x <= 5.0 {
            let closed_form = (1.0 - (x - 1.0f64).abs()).max(0.0);
            assert!((h.eval(x) - closed_form).abs() <= 1e-12, "x={x}");
            x += 0.01;
        }
        let triples: Vec<_> =
            h.units().iter().map(|u| (u.slope(), u.offset(), u.coefficient())).collect();
        assert!(triples.contains(&(1.0, 0.0, 1.0)));
        assert!(triples.contains(&(1.0, -2.0, 1.0)));
        assert!(triples.contains(&(1.0, -1.0, -2.0)));
    }

    #[test]
    fn hat_rejects_nonpositive_halfwidth() {
        assert!(hat(0.0, 0.0).is_err());
        assert!(hat(0.0, -1.0).is_err());
    }

    #[test]
    fn hat_peak_and_support() {
        for &(c, h) in &[(0.0, 2.0), (-3.5, 0.25), (10.0, 1.0)] {
            let net = hat(c, h).unwrap();
            assert_eq!(net.eval(c), 1.0);
            assert_eq!(net.eval(c - h), 0.0);
            assert_eq!(net.eval(c + h), 0.0);
            assert_eq!(net.eval(c - 2.0 * h), 0.0);
        }
        assert_eq!(hat(0.0, 2.0).unwrap().eval(1.0), 0.5);
    }

    #[test]
    fn ramp_and_step_values() {
        assert_eq!(ramp_plus().eval(5.0), 5.0);
        assert_eq!(ramp_minus().eval(-3.0), 3.0);
        assert_eq!(step_f().eval(2.0), 1.0);
        assert_eq!(step_f().eval(0.5), 0.5);
        assert_eq!(step_f().eval(-1.0), 0.0);
        assert_eq!(step_g().eval(-2.0), 1.0);
        // g = f(−·) on a grid
        let (f, g) = (step_f(), step_g());
        let mut x = -4.0;
        while x <= 4.0 {
            assert_eq!(g.eval(x), f.eval(-x));
            x += 0.125;
        }
    }

    #[test]
    fn hat_network_to_pl() {
        let pl = network_to_pl(&hat(1.0, 1.0).unwrap());
        assert_eq!(pl.knots(), &[0.0, 1.0, 2.0]);
        assert_eq!(pl.values(), &[0.0, 1.0, 0.0]);
        assert_eq!(pl.left_slope(), 0.0);
        assert_eq!(pl.right_slope(), 0.0);
    }

    #[test]
    fn cancelling_kinks_give_line() {
        // ReLU(x) − ReLU(−x) = x; the kink at 0 cancels.
        let net = ReluNetwork::from_triples(&[(1.0, 0.0, 1.0), (-1.0, 0.0, -1.0)]).unwrap();
        let pl = network_to_pl(&net);
        assert!(pl.is_line());
        assert_eq!(pl.left_slope(), 1.0);
        assert_eq!(pl.intercept(), 0.0);
        for &x in &[-7.0, -0.5, 0.0, 3.25] {
            assert_eq!(net.eval(x), x);
        }
    }

    #[test]
    fn empty_network_is_zero_line() {
        let pl = network_to_pl(&ReluNetwork::zero());
        assert!(pl.is_line());
        assert_eq!(pl.left_slope(), 0.0);
        assert_eq!(pl.intercept(), 0.0);
    }

    #[test]
    fn constant_one_gadget() {
        let one = pl_to_network(&PiecewiseLinear::line(0.0, 1.0));
        assert_eq!(one.len(), 4);
        for &x in &[-2.0, 0.0, 2.0] {
            assert_eq!(one.eval(x), 1.0);
        }
        // ReLU(x) − ReLU(−x) − ReLU(x−1) + ReLU(1−x), written out
        for &x in &[-2.0, 0.0, 0.5, 2.0] {
            let direct = relu(x) - relu(-x) - relu(x - 1.0) + relu(1.0 - x);
            assert_eq!(one.eval(x), direct);
        }
    }

    #[test]
    fn identity_line_two_units() {
        let net = pl_to_network(&PiecewiseLinear::line(1.0, 0.0));
        let triples: Vec<_> =
            net.units().iter().map(|u| (u.slope(), u.offset(), u.coefficient())).collect();
        assert_eq!(triples, vec![(1.0, 0.0, 1.0), (-1.0, 0.0, -1.0)]);
    }

    #[test]
    fn hat_pl_to_network_matches_identity() {
        let pl = PiecewiseLinear::from_knots(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0], 0.0, 0.0)
            .unwrap();
        let net = pl_to_network(&pl);
        assert_eq!(net.len(), 3);
        let mut triples: Vec<_> =
            net.units().iter().map(|u| (u.slope(), u.offset(), u.coefficient())).collect();
        triples.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        assert_eq!(triples, vec![(1.0, -2.0, 1.0), (1.0, -1.0, -2.0), (1.0, 0.0, 1.0)]);
    }

    #[test]
    fn round_trip_hat() {
        let pl = PiecewiseLinear::from_knots(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0], 0.0, 0.0)
            .unwrap();
        let back = network_to_pl(&pl_to_network(&pl));
        assert_eq!(back.knots(), pl.knots());
        assert_pointwise_eq(&pl_to_network(&pl), &back, 1e-12);
    }

    #[test]
    fn add_and_scale() {
        let hat_pl = network_to_pl(&hat(1.0, 1.0).unwrap());
        let zero = pl_add(&hat_pl, &pl_scale(&hat_pl, -1.0));
        assert!(zero.is_line());
        assert_eq!(zero.left_slope(), 0.0);
        assert_eq!(zero.eval(1.0), 0.0);

        let abs = net_add(&ramp_plus(), &ramp_minus());
        assert_eq!(abs.eval(2.0), 2.0);
        assert_eq!(abs.eval(-2.0), 2.0);

        let tripled = pl_scale(&PiecewiseLinear::line(1.0, 0.0), 3.0);
        assert!(tripled.is_line());
        assert_eq!(tripled.left_slope(), 3.0);
        assert_eq!(tripled.intercept(), 0.0);

        let scaled_net = net_scale(&step_f(), 2.0);
        assert_eq!(scaled_net.eval(2.0), 2.0);
    }

    #[test]
    fn knot_count_bounded_by_units() {
        let net = ReluNetwork::from_triples(&[
            (1.0, 0.0, 1.0),
            (2.0, 0.0, 0.5),   // same kink as above
            (1.0, -1.0, 2.0),
            (-3.0, 1.5, 0.25),
        ])
        .unwrap();
        let pl = network_to_pl(&net);
        assert!(pl.knots().len() <= net.len());
        assert_pointwise_eq(&net, &pl, 1e-12);
    }
}

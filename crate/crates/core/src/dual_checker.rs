//! Desk-scale mechanization of the dual argument: finite atomic signed
//! measures on the compactified line, paired against networks through the
//! weight operator. Hats detect (and reconstruct) finite atoms, ramps
//! detect boundary atoms, and a measure that annihilates all of them is
//! quantitatively pinned near zero.
//!
//! The pairing here is the weighted one, `⟨μ, f⟩ = Σ w·(A f)(loc)`, which
//! is the one the isomorphism onto bounded continuous functions induces.
//! For bounded networks the unweighted pairing of the bounded extension is
//! also provided, since the two genuinely differ at `±∞` (a bounded step
//! has `A`-boundary value 0 but bounded-extension value 1); the separation
//! experiment below makes the consequences of that difference measurable.

use crate::network::ReluNetwork;
use crate::pl_algebra::{hat, network_to_pl, ramp_minus, ramp_plus, step_f, step_g};
use crate::target::ExtendedPoint;
use crate::weighted_norm::{apply_a, CompactGrid, NormError, Side, YElement};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DualError {
    #[error("duplicate atom at {0}")]
    DuplicateAtom(ExtendedPoint),
    #[error("non-finite atom weight {0}")]
    NonFiniteWeight(f64),
    #[error("hat grid does not cover atom at x = {atom}")]
    GridNotCovering { atom: f64 },
    #[error("hat grid invalid: {0}")]
    BadHatGrid(&'static str),
    #[error("no bounded extension: tail slope is nonzero on the {0} side")]
    NoBoundedExtension(Side),
    #[error(transparent)]
    Pairing(#[from] NormError),
}

/// A finite atomic signed measure on `R ∪ {±∞}`; the desk-scale stand-in
/// for a continuous functional on the weighted space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    atoms: Vec<(ExtendedPoint, f64)>,
}

impl DiscreteMeasure {
    /// Builds a measure from atoms; locations must be pairwise distinct and
    /// weights finite. Atoms are kept sorted by location.
    pub fn new(mut atoms: Vec<(ExtendedPoint, f64)>) -> Result<Self, DualError> {
        for &(_, w) in &atoms {
            if !w.is_finite() {
                return Err(DualError::NonFiniteWeight(w));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        for pair in atoms.windows(2) {
            if pair[0].0.total_cmp(&pair[1].0).is_eq() {
                return Err(DualError::DuplicateAtom(pair[0].0));
            }
        }
        Ok(DiscreteMeasure { atoms })
    }

    /// The zero measure.
    pub fn zero() -> Self {
        DiscreteMeasure { atoms: Vec::new() }
    }

    pub fn dirac(at: ExtendedPoint, weight: f64) -> Result<Self, DualError> {
        Self::new(vec![(at, weight)])
    }

    pub fn atoms(&self) -> &[(ExtendedPoint, f64)] {
        &self.atoms
    }

    pub fn finite_atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.atoms.iter().filter_map(|(p, w)| p.as_finite().map(|x| (x, *w)))
    }

    pub fn boundary_weight(&self, side: Side) -> f64 {
        let probe = match side {
            Side::Plus => ExtendedPoint::PlusInfinity,
            Side::Minus => ExtendedPoint::MinusInfinity,
        };
        self.atoms
            .iter()
            .find(|(p, _)| p.total_cmp(&probe).is_eq())
            .map_or(0.0, |(_, w)| *w)
    }
}

/// Weighted pairing `Σ wᵢ · (A f)(locᵢ)`.
pub fn pair<F: YElement + ?Sized>(mu: &DiscreteMeasure, f: &F) -> Result<f64, NormError> {
    let mut acc = 0.0;
    for &(loc, w) in &mu.atoms {
        acc += w * apply_a(f, loc)?;
    }
    Ok(acc)
}

/// Unweighted pairing `Σ wᵢ · f̄(locᵢ)` of the bounded continuous extension
/// `f̄` of the network over the compactified line. Exists only when both
/// tail slopes vanish; then `f̄(±∞)` are the constant tail values.
pub fn pair_bounded_extension(
    mu: &DiscreteMeasure,
    net: &ReluNetwork,
) -> Result<f64, DualError> {
    let pl = network_to_pl(net);
    if pl.left_slope() != 0.0 {
        return Err(DualError::NoBoundedExtension(Side::Minus));
    }
    if pl.right_slope() != 0.0 {
        return Err(DualError::NoBoundedExtension(Side::Plus));
    }
    let (low, high) = if pl.is_line() {
        (pl.intercept(), pl.intercept())
    } else {
        (pl.values()[0], *pl.values().last().unwrap())
    };
    let mut acc = 0.0;
    for &(loc, w) in &mu.atoms {
        let v = match loc {
            ExtendedPoint::Finite(x) => net.eval(x),
            ExtendedPoint::MinusInfinity => low,
            ExtendedPoint::PlusInfinity => high,
        };
        acc += w * v;
    }
    Ok(acc)
}

/// Transcript of one annihilation experiment over a covering hat grid.
#[derive(Debug, Clone)]
pub struct AnnihilationReport {
    /// `(center, ⟨μ, hat(center, halfwidth)⟩)` per grid center.
    pub hat_pairings: Vec<(f64, f64)>,
    pub ramp_plus_pairing: f64,
    pub ramp_minus_pairing: f64,
    /// Per finite atom `(location, weight recovered from the nearest hat)`.
    pub recovered_atoms: Vec<(f64, f64)>,
    /// Boundary weights recovered from the ramp pairings after subtracting
    /// the recovered finite-atom contributions: `(μ({+∞}), μ({−∞}))`.
    pub recovered_boundary: (f64, f64),
    pub annihilates: bool,
    pub halfwidth: f64,
    pub tol: f64,
}

/// Pairs `μ` against every hat on the grid and both ramps. The verdict is
/// `annihilates` iff every pairing is within `tol`; the report also
/// reconstructs the measure from the pairings (exact for atoms isolated
/// within one hat support).
pub fn annihilation_test(
    mu: &DiscreteMeasure,
    centers: &[f64],
    halfwidth: f64,
    tol: f64,
) -> Result<AnnihilationReport, DualError> {
    if centers.is_empty() {
        return Err(DualError::BadHatGrid("no hat centers"));
    }
    if !(halfwidth > 0.0 && halfwidth.is_finite()) {
        return Err(DualError::BadHatGrid("halfwidth must be positive"));
    }
    let mut sorted = centers.to_vec();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        if w[1] - w[0] > halfwidth * (1.0 + 1e-12) {
            return Err(DualError::BadHatGrid("center spacing exceeds halfwidth"));
        }
    }
    for (x, _) in mu.finite_atoms() {
        if x < sorted[0] || x > *sorted.last().unwrap() {
            return Err(DualError::GridNotCovering { atom: x });
        }
    }

    let mut hat_pairings = Vec::with_capacity(sorted.len());
    for &c in &sorted {
        let h = hat(c, halfwidth).expect("validated halfwidth");
        hat_pairings.push((c, pair(mu, &h)?));
    }
    let ramp_plus_pairing = pair(mu, &ramp_plus())?;
    let ramp_minus_pairing = pair(mu, &ramp_minus())?;

    // Recover each finite atom from the hat centered nearest to it:
    // ⟨μ, hat⟩ = w·hat(x₀)/(1+|x₀|) when the atom is isolated.
    let mut recovered_atoms = Vec::new();
    for (x, _) in mu.finite_atoms() {
        let (idx, c) = sorted
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (x - **a).abs().total_cmp(&(x - **b).abs()).then(a.total_cmp(b))
            })
            .map(|(i, c)| (i, *c))
            .expect("nonempty centers");
        let hat_value = (1.0 - (x - c).abs() / halfwidth).max(0.0);
        if hat_value == 0.0 {
            return Err(DualError::GridNotCovering { atom: x });
        }
        let recovered = hat_pairings[idx].1 * (1.0 + x.abs()) / hat_value;
        recovered_atoms.push((x, recovered));
    }

    // Boundary masses from the ramps, with the recovered finite-atom
    // contributions subtracted: A(ramp±)(±∞) = 1 and 0 on the other side.
    let finite_part = |ramp: &ReluNetwork| -> f64 {
        recovered_atoms
            .iter()
            .map(|&(x, w)| w * ramp.eval(x) / (1.0 + x.abs()))
            .sum()
    };
    let recovered_plus = ramp_plus_pairing - finite_part(&ramp_plus());
    let recovered_minus = ramp_minus_pairing - finite_part(&ramp_minus());

    let annihilates = hat_pairings.iter().all(|(_, v)| v.abs() <= tol)
        && ramp_plus_pairing.abs() <= tol
        && ramp_minus_pairing.abs() <= tol;

    Ok(AnnihilationReport {
        hat_pairings,
        ramp_plus_pairing,
        ramp_minus_pairing,
        recovered_atoms,
        recovered_boundary: (recovered_plus, recovered_minus),
        annihilates,
        halfwidth,
        tol,
    })
}

/// Which spanning family the separation experiment tests against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanningSet {
    /// The two bounded steps plus compactly supported hats. Every member
    /// has weighted boundary value 0.
    LiteralSteps,
    /// The two ramps plus compactly supported hats; the ramps carry the
    /// boundary values.
    CorrectedRamps,
}

/// Best grid least-squares approximation of `ReLU(x)` from the chosen
/// family, reported as the weighted sup-norm of the residual on the grid.
///
/// With [`SpanningSet::LiteralSteps`] the residual cannot drop below 1 for
/// any budget: every candidate has `A`-value 0 at `+∞` while the target has
/// 1 there. With the ramps included the target is itself in the span.
pub fn separation_residual(
    set: SpanningSet,
    grid_resolution: u32,
    candidate_budget: usize,
) -> Result<f64, DualError> {
    let grid = CompactGrid::new(grid_resolution);

    let mut candidates: Vec<ReluNetwork> = match set {
        SpanningSet::LiteralSteps => vec![step_f(), step_g()],
        SpanningSet::CorrectedRamps => vec![ramp_plus(), ramp_minus()],
    };
    // Unit hats, spacing 1, symmetric about 0.
    let offset = (candidate_budget as f64 - 1.0) / 2.0;
    for j in 0..candidate_budget {
        candidates.push(hat(j as f64 - offset, 1.0).expect("unit halfwidth"));
    }

    let target = ramp_plus();
    let points: Vec<ExtendedPoint> = grid.points().collect();
    let y: Vec<f64> = points
        .iter()
        .map(|&p| apply_a(&target, p))
        .collect::<Result<_, _>>()?;
    let features: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| points.iter().map(|&p| apply_a(c, p)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;

    let coeffs = lstsq::solve_normal_equations(&features, &y, 1e-10);

    let mut sup: f64 = 0.0;
    for (row, yv) in y.iter().enumerate() {
        let combo: f64 = coeffs.iter().zip(&features).map(|(c, f)| c * f[row]).sum();
        sup = sup.max((yv - combo).abs());
    }
    Ok(sup)
}

/// Dense least squares via the normal equations with a relative eigenvalue
/// cutoff; hats at nearby centers are close to collinear on coarse grids,
/// so the Gram matrix needs the truncation.
mod lstsq {
    /// Solves `min ‖Φᵀc − y‖₂` where `features[i]` is the i-th column of Φᵀ
    /// (one candidate sampled over all grid points). Eigenvalues below
    /// `rel_cutoff · λ_max` are truncated.
    pub fn solve_normal_equations(
        features: &[Vec<f64>],
        y: &[f64],
        rel_cutoff: f64,
    ) -> Vec<f64> {
        let k = features.len();
        if k == 0 {
            return Vec::new();
        }
        let mut gram = vec![vec![0.0; k]; k];
        let mut rhs = vec![0.0; k];
        for i in 0..k {
            for j in i..k {
                let dot: f64 = features[i].iter().zip(&features[j]).map(|(a, b)| a * b).sum();
                gram[i][j] = dot;
                gram[j][i] = dot;
            }
            rhs[i] = features[i].iter().zip(y).map(|(a, b)| a * b).sum();
        }

        let (eigvals, eigvecs) = jacobi_eigen(gram);
        let lambda_max = eigvals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let cutoff = rel_cutoff * lambda_max;

        let mut coeffs = vec![0.0; k];
        for (idx, &lambda) in eigvals.iter().enumerate() {
            if lambda.abs() <= cutoff || lambda == 0.0 {
                continue;
            }
            let projection: f64 = (0..k).map(|r| eigvecs[r][idx] * rhs[r]).sum();
            let scale = projection / lambda;
            for r in 0..k {
                coeffs[r] += scale * eigvecs[r][idx];
            }
        }
        coeffs
    }

    /// Cyclic Jacobi eigendecomposition of a symmetric matrix; returns
    /// eigenvalues and the orthogonal matrix of eigenvectors (as columns).
    #[allow(clippy::needless_range_loop)]
    fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
        let n = a.len();
        let mut v = vec![vec![0.0; n]; n];
        for (i, row) in v.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for _sweep in 0..60 {
            let mut off: f64 = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    off += a[i][j] * a[i][j];
                }
            }
            let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
            if off <= 1e-30 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a[p][q].abs() <= 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for r in 0..n {
                        let (arp, arq) = (a[r][p], a[r][q]);
                        a[r][p] = c * arp - s * arq;
                        a[r][q] = s * arp + c * arq;
                    }
                    for r in 0..n {
                        let (apr, aqr) = (a[p][r], a[q][r]);
                        a[p][r] = c * apr - s * aqr;
                        a[q][r] = s * apr + c * aqr;
                    }
                    for r in 0..n {
                        let (vrp, vrq) = (v[r][p], v[r][q]);
                        v[r][p] = c * vrp - s * vrq;
                        v[r][q] = s * vrp + c * vrq;
                    }
                }
            }
        }
        let eigvals = (0..n).map(|i| a[i][i]).collect();
        (eigvals, v)
    }

}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pl_algebra::net_add;

    fn dirac_inf(w: f64) -> DiscreteMeasure {
        DiscreteMeasure::dirac(ExtendedPoint::PlusInfinity, w).unwrap()
    }

    #[test]
    fn pair_examples() {
        let mu = dirac_inf(1.0);
        assert_eq!(pair(&mu, &ramp_plus()).unwrap(), 1.0);
        assert_eq!(pair(&mu, &step_f()).unwrap(), 0.0);

        let at_one = DiscreteMeasure::dirac(ExtendedPoint::finite(1.0), 2.0).unwrap();
        assert_eq!(pair(&at_one, &hat(1.0, 1.0).unwrap()).unwrap(), 1.0);
    }

    #[test]
    fn bounded_extension_disagrees_at_infinity() {
        // The weighted pairing of δ_{+∞} with the bounded step is 0; the
        // unweighted pairing of its bounded extension is the limit value 1.
        let mu = dirac_inf(1.0);
        assert_eq!(pair(&mu, &step_f()).unwrap(), 0.0);
        assert_eq!(pair_bounded_extension(&mu, &step_f()).unwrap(), 1.0);
        // Ramps are unbounded, so no bounded extension exists.
        assert!(matches!(
            pair_bounded_extension(&mu, &ramp_plus()),
            Err(DualError::NoBoundedExtension(Side::Plus))
        ));
    }

    #[test]
    fn pairing_is_linear() {
        let mu = DiscreteMeasure::new(vec![
            (ExtendedPoint::finite(-2.0), 0.5),
            (ExtendedPoint::finite(0.5), -1.25),
            (ExtendedPoint::PlusInfinity, 2.0),
        ])
        .unwrap();
        let f = hat(0.0, 2.0).unwrap();
        let g = step_g();
        let sum = net_add(&f, &g);
        let lhs = pair(&mu, &sum).unwrap();
        let rhs = pair(&mu, &f).unwrap() + pair(&mu, &g).unwrap();
        assert!((lhs - rhs).abs() <= 1e-12);

        let scaled = crate::pl_algebra::net_scale(&f, -3.5);
        assert!((pair(&mu, &scaled).unwrap() + 3.5 * pair(&mu, &f).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn zero_measure_annihilates() {
        let centers: Vec<f64> = (-3..=3).map(|k| k as f64).collect();
        let report = annihilation_test(&DiscreteMeasure::zero(), &centers, 1.0, 1e-9).unwrap();
        assert!(report.annihilates);
        assert!(report.hat_pairings.iter().all(|(_, v)| *v == 0.0));
        assert_eq!(report.ramp_plus_pairing, 0.0);
    }

    #[test]
    fn dirac_at_zero_fails_hat_step() {
        let mu = DiscreteMeasure::dirac(ExtendedPoint::finite(0.0), 1.0).unwrap();
        let centers: Vec<f64> = (-3..=3).map(|k| k as f64).collect();
        let report = annihilation_test(&mu, &centers, 1.0, 1e-9).unwrap();
        assert!(!report.annihilates);
        let at_zero = report.hat_pairings.iter().find(|(c, _)| *c == 0.0).unwrap();
        assert_eq!(at_zero.1, 1.0);
        assert_eq!(report.recovered_atoms, vec![(0.0, 1.0)]);
    }

    #[test]
    fn boundary_measure_passes_hats_fails_ramps() {
        let mu = DiscreteMeasure::new(vec![
            (ExtendedPoint::PlusInfinity, 1.0),
            (ExtendedPoint::MinusInfinity, -1.0),
        ])
        .unwrap();
        let centers: Vec<f64> = (-3..=3).map(|k| k as f64).collect();
        let report = annihilation_test(&mu, &centers, 1.0, 1e-9).unwrap();
        assert!(!report.annihilates);
        assert!(report.hat_pairings.iter().all(|(_, v)| *v == 0.0));
        assert_eq!(report.ramp_plus_pairing, 1.0);
        assert_eq!(report.ramp_minus_pairing, -1.0);
        assert_eq!(report.recovered_boundary, (1.0, -1.0));
    }

    #[test]
    fn recovery_of_mixed_measure() {
        let mu = DiscreteMeasure::new(vec![
            (ExtendedPoint::finite(-1.5), 0.75),
            (ExtendedPoint::finite(2.0), -0.5),
            (ExtendedPoint::PlusInfinity, 0.25),
        ])
        .unwrap();
        let centers: Vec<f64> = (-8..=8).map(|k| k as f64 * 0.5).collect();
        let report = annihilation_test(&mu, &centers, 0.5, 1e-9).unwrap();
        assert!(!report.annihilates);
        for (&(x, w), &(rx, rw)) in
            [(-1.5, 0.75), (2.0, -0.5)].iter().zip(&report.recovered_atoms)
        {
            assert_eq!(x, rx);
            assert!((w - rw).abs() <= 1e-12, "{w} vs {rw}");
        }
        assert!((report.recovered_boundary.0 - 0.25).abs() <= 1e-12);
        assert!(report.recovered_boundary.1.abs() <= 1e-12);
    }

    #[test]
    fn uncovered_atom_rejected() {
        let mu = DiscreteMeasure::dirac(ExtendedPoint::finite(10.0), 1.0).unwrap();
        let centers: Vec<f64> = (-3..=3).map(|k| k as f64).collect();
        assert!(matches!(
            annihilation_test(&mu, &centers, 1.0, 1e-9),
            Err(DualError::GridNotCovering { .. })
        ));
    }

    #[test]
    fn duplicate_atoms_rejected() {
        assert!(matches!(
            DiscreteMeasure::new(vec![
                (ExtendedPoint::finite(1.0), 1.0),
                (ExtendedPoint::finite(1.0), 2.0),
            ]),
            Err(DualError::DuplicateAtom(_))
        ));
    }

    #[test]
    fn separation_literal_set_obstructed() {
        let residual = separation_residual(SpanningSet::LiteralSteps, 400, 0).unwrap();
        assert!(residual >= 1.0 - 1e-6, "residual {residual}");
        let residual = separation_residual(SpanningSet::LiteralSteps, 400, 50).unwrap();
        assert!(residual >= 1.0 - 1e-6, "residual {residual}");
    }

    #[test]
    fn separation_corrected_set_succeeds() {
        let residual = separation_residual(SpanningSet::CorrectedRamps, 400, 50).unwrap();
        assert!(residual <= 1e-2, "residual {residual}");
    }
}

//! The triplet triangle and its separation constraints.
//!
//! A triplet `(anchor, positive, negative)` spans a triangle. The distance
//! constraint compares the squared anchor-positive and anchor-negative edges
//! directly. The angular constraint instead bounds the angle at the negative
//! vertex of a reconstructed triangle: the circumcircle through anchor and
//! positive is centered at their midpoint `c` with radius `‖a − p‖ / 2`, and
//! the reconstructed angle `n'` satisfies
//! `tan n' = ‖a − p‖ / (2 ‖n − c‖)`. Bounding `n'` is invariant to rotation,
//! translation and uniform scaling of the three points.

use crate::error::{Error, Result};
use crate::scalar::{from_f64, Scalar};
use crate::vecmath;

/// An anchor/positive/negative vector triple. Anchor and positive are drawn
/// from the same class, the negative from a different one; the struct itself
/// only enforces the numeric invariants (equal dimension, finite entries).
#[derive(Debug, Clone, PartialEq)]
pub struct Triplet<S> {
    anchor: Vec<S>,
    positive: Vec<S>,
    negative: Vec<S>,
}

impl<S: Scalar> Triplet<S> {
    pub fn new(anchor: Vec<S>, positive: Vec<S>, negative: Vec<S>) -> Result<Self> {
        let dim = anchor.len();
        if dim == 0 {
            return Err(Error::invalid("triplet vectors must have dimension >= 1"));
        }
        if positive.len() != dim || negative.len() != dim {
            return Err(Error::invalid(format!(
                "triplet dimension mismatch: anchor {}, positive {}, negative {}",
                dim,
                positive.len(),
                negative.len()
            )));
        }
        for v in [&anchor, &positive, &negative] {
            if !vecmath::is_finite(v) {
                return Err(Error::invalid("triplet components must be finite"));
            }
        }
        Ok(Self {
            anchor,
            positive,
            negative,
        })
    }

    pub fn anchor(&self) -> &[S] {
        &self.anchor
    }

    pub fn positive(&self) -> &[S] {
        &self.positive
    }

    pub fn negative(&self) -> &[S] {
        &self.negative
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }
}

/// Derived quantities of the reconstructed triplet triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleGeometry<S> {
    /// Midpoint of anchor and positive; center of their circumcircle.
    pub center: Vec<S>,
    /// Circumcircle radius, `‖anchor − positive‖ / 2`.
    pub radius: S,
    /// Distance from the negative point to the center.
    pub negative_to_center_dist: S,
    /// `radius / negative_to_center_dist`; positive infinity when the
    /// negative point coincides with the center.
    pub tan_angle_n_prime: S,
}

/// Componentwise midpoint of anchor and positive, `(a + p) / 2`.
pub fn positive_center<S: Scalar>(anchor: &[S], positive: &[S]) -> Result<Vec<S>> {
    if anchor.len() != positive.len() || anchor.is_empty() {
        return Err(Error::invalid(format!(
            "midpoint dimension mismatch: {} vs {}",
            anchor.len(),
            positive.len()
        )));
    }
    Ok(vecmath::midpoint(anchor, positive))
}

/// Center, radius, negative-to-center distance and reconstructed tangent of
/// the triplet triangle.
pub fn triangle_geometry<S: Scalar>(t: &Triplet<S>) -> TriangleGeometry<S> {
    let center = vecmath::midpoint(t.anchor(), t.positive());
    let radius = vecmath::distance(t.anchor(), t.positive()) * from_f64::<S>(0.5);
    let dist = vecmath::distance(t.negative(), &center);
    let tan = if dist > S::zero() {
        radius / dist
    } else {
        S::infinity()
    };
    TriangleGeometry {
        center,
        radius,
        negative_to_center_dist: dist,
        tan_angle_n_prime: tan,
    }
}

/// Distance constraint: `‖a − p‖² + margin ≤ ‖a − n‖²`.
pub fn triplet_constraint_satisfied<S: Scalar>(t: &Triplet<S>, margin: S) -> Result<bool> {
    if margin < S::zero() {
        return Err(Error::invalid("margin must be nonnegative"));
    }
    let ap = vecmath::squared_distance(t.anchor(), t.positive());
    let an = vecmath::squared_distance(t.anchor(), t.negative());
    Ok(ap + margin <= an)
}

/// Angular constraint: the reconstructed angle at the negative vertex is at
/// most `alpha`, i.e. `‖a − p‖ ≤ 2 tan(alpha) ‖n − c‖`.
///
/// The comparison is done in angle space (`atan2(radius, dist) ≤ alpha`),
/// which is monotone-equivalent to the tangent form and keeps exact
/// boundaries such as `tan n' = 1` at `alpha = 45°` on the satisfied side.
/// When the negative point coincides with the center the angle is `90°`,
/// so the constraint only holds in the fully degenerate zero-radius case.
pub fn angular_constraint_satisfied<S: Scalar>(t: &Triplet<S>, alpha_degrees: f64) -> Result<bool> {
    let alpha_rad = validate_alpha(alpha_degrees)?;
    let geo = triangle_geometry(t);
    if geo.negative_to_center_dist == S::zero() {
        return Ok(geo.radius == S::zero());
    }
    let angle = geo.radius.atan2(geo.negative_to_center_dist);
    Ok(angle <= from_f64::<S>(alpha_rad))
}

/// Checks `0 < alpha < 90` and returns the angle in radians.
pub(crate) fn validate_alpha(alpha_degrees: f64) -> Result<f64> {
    if !(alpha_degrees > 0.0 && alpha_degrees < 90.0) {
        return Err(Error::invalid(format!(
            "alpha must lie strictly between 0 and 90 degrees, got {alpha_degrees}"
        )));
    }
    Ok(alpha_degrees.to_radians())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(a: &[f64], p: &[f64], n: &[f64]) -> Triplet<f64> {
        Triplet::new(a.to_vec(), p.to_vec(), n.to_vec()).unwrap()
    }

    #[test]
    fn triplet_rejects_bad_input() {
        assert!(Triplet::new(vec![1.0], vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(Triplet::<f64>::new(vec![], vec![], vec![]).is_err());
        assert!(Triplet::new(vec![f64::NAN], vec![0.0], vec![1.0]).is_err());
        assert!(Triplet::new(vec![f64::INFINITY], vec![0.0], vec![1.0]).is_err());
    }

    #[test]
    fn midpoint_examples() {
        assert_eq!(
            positive_center(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            vec![0.5, 0.5]
        );
        let u = [0.3, -0.7, 2.0];
        assert_eq!(positive_center(&u, &u).unwrap(), u.to_vec());
        assert_eq!(
            positive_center(&[1.0, 0.0], &[-1.0, 0.0]).unwrap(),
            vec![0.0, 0.0]
        );
        assert!(positive_center(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn geometry_hand_values() {
        let g = triangle_geometry(&t(&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]));
        assert_eq!(g.center, vec![0.5, 0.5]);
        assert!((g.radius - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((g.negative_to_center_dist - 2.5f64.sqrt()).abs() < 1e-15);
        assert!((g.tan_angle_n_prime - 0.44721).abs() < 5e-6);

        let g = triangle_geometry(&t(&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0]));
        assert_eq!(g.center, vec![0.0, 0.0]);
        assert_eq!(g.radius, 1.0);
        assert_eq!(g.negative_to_center_dist, 1.0);
        assert_eq!(g.tan_angle_n_prime, 1.0);
    }

    #[test]
    fn geometry_degenerate_zero_radius() {
        let g = triangle_geometry(&t(&[1.0, 0.0], &[1.0, 0.0], &[0.0, 3.0]));
        assert_eq!(g.radius, 0.0);
        assert_eq!(g.tan_angle_n_prime, 0.0);
    }

    #[test]
    fn geometry_negative_at_center_has_infinite_tangent() {
        let g = triangle_geometry(&t(&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 0.0]));
        assert_eq!(g.radius, 1.0);
        assert_eq!(g.negative_to_center_dist, 0.0);
        assert!(g.tan_angle_n_prime.is_infinite());
    }

    #[test]
    fn triplet_constraint_examples() {
        let tri = t(&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]);
        assert!(triplet_constraint_satisfied(&tri, 0.1).unwrap());
        assert!(!triplet_constraint_satisfied(&tri, 3.0).unwrap());
        let tri = t(&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]);
        assert!(triplet_constraint_satisfied(&tri, 0.0).unwrap());
        assert!(triplet_constraint_satisfied(&tri, -0.1).is_err());
    }

    #[test]
    fn angular_constraint_examples() {
        let tri = t(&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0]);
        // Boundary: tan(angle at the negative vertex) = 1 = tan 45°.
        assert!(angular_constraint_satisfied(&tri, 45.0).unwrap());
        assert!(!angular_constraint_satisfied(&tri, 36.0).unwrap());

        // Zero-width triangle is satisfied at any alpha.
        let tri = t(&[1.0, 0.0], &[1.0, 0.0], &[0.0, 5.0]);
        for alpha in [1.0, 20.0, 89.0] {
            assert!(angular_constraint_satisfied(&tri, alpha).unwrap());
        }
    }

    #[test]
    fn angular_constraint_rejects_bad_alpha() {
        let tri = t(&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]);
        for alpha in [0.0, -3.0, 90.0, 135.0] {
            assert!(angular_constraint_satisfied(&tri, alpha).is_err());
        }
    }

    #[test]
    fn angular_constraint_degenerate_center_cases() {
        // Negative at the center with positive radius: violated.
        let tri = t(&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 0.0]);
        assert!(!angular_constraint_satisfied(&tri, 45.0).unwrap());
        // All three coincide: satisfied.
        let tri = t(&[1.0, 0.0], &[1.0, 0.0], &[1.0, 0.0]);
        assert!(angular_constraint_satisfied(&tri, 45.0).unwrap());
    }

    #[test]
    fn angular_constraint_monotone_in_alpha() {
        let mut rng = crate::gradcheck::test_rng(7);
        for _ in 0..200 {
            let tri = crate::gradcheck::random_triplet::<f64>(&mut rng, 3);
            let mut prev = false;
            for alpha in [5.0, 15.0, 30.0, 45.0, 60.0, 75.0, 89.0] {
                let sat = angular_constraint_satisfied(&tri, alpha).unwrap();
                assert!(!prev || sat, "constraint not monotone in alpha");
                prev = sat;
            }
        }
    }

    #[test]
    fn tangent_cross_checks_against_arctangent_path() {
        let mut rng = crate::gradcheck::test_rng(11);
        for _ in 0..500 {
            let tri = crate::gradcheck::random_triplet::<f64>(&mut rng, 4);
            let g = triangle_geometry(&tri);
            if g.negative_to_center_dist == 0.0 {
                continue;
            }
            let via_angle = g.radius.atan2(g.negative_to_center_dist).tan();
            let rel = (via_angle - g.tan_angle_n_prime).abs() / g.tan_angle_n_prime.max(1e-300);
            assert!(rel < 1e-12, "tangent mismatch: rel error {rel}");
        }
    }

    #[test]
    fn similarity_transforms_preserve_decision_and_tangent() {
        let mut rng = crate::gradcheck::test_rng(13);
        for _ in 0..300 {
            let tri = crate::gradcheck::random_triplet::<f64>(&mut rng, 2);
            let (scale, rot, shift) = crate::gradcheck::random_similarity::<f64>(&mut rng, 2);
            let mapped = crate::gradcheck::apply_similarity(&tri, scale, &rot, &shift);
            let g0 = triangle_geometry(&tri);
            let g1 = triangle_geometry(&mapped);
            if g0.tan_angle_n_prime.is_finite() {
                let rel = (g0.tan_angle_n_prime - g1.tan_angle_n_prime).abs()
                    / g0.tan_angle_n_prime.max(1e-12);
                assert!(rel < 1e-9, "tangent not similarity invariant: {rel}");
            }
            for alpha in [20.0, 45.0, 70.0] {
                assert_eq!(
                    angular_constraint_satisfied(&tri, alpha).unwrap(),
                    angular_constraint_satisfied(&mapped, alpha).unwrap()
                );
            }
        }
    }
}

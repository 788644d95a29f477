//! Loss functions and their analytic gradients.
//!
//! Per-triplet hinge losses:
//!
//! - [`triplet_loss`]: `[‖a − p‖² − ‖a − n‖² + m]₊`, gradients
//!   `∂/∂n = 2(a − n)`, `∂/∂p = 2(p − a)`, `∂/∂a = 2(n − p)` when the
//!   constraint is violated, zero otherwise (including exactly at the kink).
//! - [`angular_loss`]: `[‖a − p‖² − 4 tan²α ‖n − c‖²]₊` with
//!   `c = (a + p) / 2`; gradients
//!   `∂/∂a = 2(a − p) − 2 tan²α (a + p − 2n)`,
//!   `∂/∂p = 2(p − a) − 2 tan²α (a + p − 2n)`,
//!   `∂/∂n = 4 tan²α ((a + p) − 2n)` when active.
//!
//! Batch losses over an [`NPairBatch`], all of the smooth
//! `(1/N) Σ_a log(1 + Σ_n exp(score))` shape with a max-shifted log-sum-exp
//! so that exponent overflow is impossible for finite inputs:
//!
//! - [`angular_loss_batch`]: score `f_{a,p,n} = 4 tan²α (a + p)ᵀn −
//!   2 (1 + tan²α) aᵀp`, the constant-dropped surrogate of the hinge
//!   argument (exact up to a constant for unit-norm inputs).
//! - [`npair_loss_batch`]: score `aᵀn − aᵀp`.
//! - [`combined_loss_batch`]: N-pair plus `λ` times the batch angular loss.
//! - [`triplet_loss_batch`]: the per-triplet hinge averaged over all
//!   `N (N − 2)` tuplet-expanded triplets, for triplet training under N-pair
//!   sampling.
//!
//! Batch gradients are accumulated per unique sample slot over every tuplet
//! role the sample plays, in a fixed slot order, so results are
//! bit-reproducible. [`finite_difference_gradient`] is the central-difference
//! oracle used to verify every analytic gradient.

use crate::error::{Error, Result};
use crate::geometry::{self, Triplet};
use crate::sampling::NPairBatch;
use crate::scalar::{from_f64, Scalar};
use crate::vecmath::{add_scaled, dot, squared_distance};

/// The angular margin `α`, validated to lie strictly between 0° and 90°,
/// with its squared tangent cached.
#[derive(Debug, Clone, Copy)]
pub struct AngularParams<S> {
    alpha_degrees: f64,
    tan_sq_alpha: S,
}

impl<S: Scalar> AngularParams<S> {
    pub fn new(alpha_degrees: f64) -> Result<Self> {
        let radians = geometry::validate_alpha(alpha_degrees)?;
        let tan_sq = radians.tan().powi(2);
        if !tan_sq.is_finite() || tan_sq <= 0.0 {
            return Err(Error::invalid(format!(
                "tan²(alpha) must be positive and finite, got {tan_sq}"
            )));
        }
        Ok(Self {
            alpha_degrees,
            tan_sq_alpha: from_f64(tan_sq),
        })
    }

    pub fn alpha_degrees(&self) -> f64 {
        self.alpha_degrees
    }

    pub fn tan_sq_alpha(&self) -> S {
        self.tan_sq_alpha
    }
}

/// A scalar loss value with one gradient vector per input.
///
/// For the per-triplet losses the gradients are indexed by role:
/// `0 = anchor`, `1 = positive`, `2 = negative`. For batch losses gradient
/// `i` belongs to batch slot `i`, accumulated over every tuplet role that
/// slot plays.
#[derive(Debug, Clone, PartialEq)]
pub struct LossResult<S> {
    pub value: S,
    pub gradients: Vec<Vec<S>>,
}

impl<S: Scalar> LossResult<S> {
    fn zeros(value: S, count: usize, dim: usize) -> Self {
        Self {
            value,
            gradients: vec![vec![S::zero(); dim]; count],
        }
    }
}

/// Hinge triplet loss with its analytic gradients.
pub fn triplet_loss<S: Scalar>(t: &Triplet<S>, margin: S) -> Result<LossResult<S>> {
    if margin < S::zero() {
        return Err(Error::invalid("margin must be nonnegative"));
    }
    let two = from_f64::<S>(2.0);
    let arg = squared_distance(t.anchor(), t.positive())
        - squared_distance(t.anchor(), t.negative())
        + margin;
    if arg <= S::zero() {
        return Ok(LossResult::zeros(S::zero(), 3, t.dim()));
    }
    let anchor_grad = zip3(t, |_, p, n| two * (n - p));
    let positive_grad = zip3(t, |a, p, _| two * (p - a));
    let negative_grad = zip3(t, |a, _, n| two * (a - n));
    Ok(LossResult {
        value: arg,
        gradients: vec![anchor_grad, positive_grad, negative_grad],
    })
}

/// The hinge argument of the angular loss,
/// `‖a − p‖² − 4 tan²α ‖n − (a + p)/2‖²`.
fn angular_hinge_argument<S: Scalar>(t: &Triplet<S>, params: &AngularParams<S>) -> S {
    let four = from_f64::<S>(4.0);
    let half = from_f64::<S>(0.5);
    let mut center_dist_sq = S::zero();
    for j in 0..t.dim() {
        let c = (t.anchor()[j] + t.positive()[j]) * half;
        let d = t.negative()[j] - c;
        center_dist_sq += d * d;
    }
    squared_distance(t.anchor(), t.positive()) - four * params.tan_sq_alpha * center_dist_sq
}

/// Hinge angular loss with its analytic gradients.
pub fn angular_loss<S: Scalar>(t: &Triplet<S>, params: &AngularParams<S>) -> LossResult<S> {
    let arg = angular_hinge_argument(t, params);
    if arg <= S::zero() {
        return LossResult::zeros(S::zero(), 3, t.dim());
    }
    let two = from_f64::<S>(2.0);
    let four = from_f64::<S>(4.0);
    let tsq = params.tan_sq_alpha;
    let anchor_grad = zip3(t, |a, p, n| two * (a - p) - two * tsq * (a + p - two * n));
    let positive_grad = zip3(t, |a, p, n| two * (p - a) - two * tsq * (a + p - two * n));
    let negative_grad = zip3(t, |a, p, n| four * tsq * (a + p - two * n));
    LossResult {
        value: arg,
        gradients: vec![anchor_grad, positive_grad, negative_grad],
    }
}

/// Componentwise map over the three triplet members.
fn zip3<S: Scalar>(t: &Triplet<S>, f: impl Fn(S, S, S) -> S) -> Vec<S> {
    t.anchor()
        .iter()
        .zip(t.positive())
        .zip(t.negative())
        .map(|((&a, &p), &n)| f(a, p, n))
        .collect()
}

/// The constant-dropped batch surrogate of the angular hinge argument:
/// `4 tan²α (a + p)ᵀ n − 2 (1 + tan²α) aᵀ p`.
pub fn f_apn<S: Scalar>(
    anchor: &[S],
    positive: &[S],
    negative: &[S],
    params: &AngularParams<S>,
) -> Result<S> {
    if anchor.len() != positive.len() || anchor.len() != negative.len() {
        return Err(Error::invalid(format!(
            "f_apn dimension mismatch: {} / {} / {}",
            anchor.len(),
            positive.len(),
            negative.len()
        )));
    }
    Ok(f_apn_unchecked(anchor, positive, negative, params))
}

#[inline]
fn f_apn_unchecked<S: Scalar>(
    anchor: &[S],
    positive: &[S],
    negative: &[S],
    params: &AngularParams<S>,
) -> S {
    let two = from_f64::<S>(2.0);
    let four = from_f64::<S>(4.0);
    let tsq = params.tan_sq_alpha;
    let mut sum_dot_n = S::zero();
    for j in 0..anchor.len() {
        sum_dot_n += (anchor[j] + positive[j]) * negative[j];
    }
    four * tsq * sum_dot_n - two * (S::one() + tsq) * dot(anchor, positive)
}

/// `log(1 + Σᵢ exp(scoreᵢ))` with a max shift, plus the softmax-style
/// weights `wᵢ = exp(scoreᵢ) / (1 + Σⱼ exp(scoreⱼ))`.
fn log1p_sum_exp<S: Scalar>(scores: &[S]) -> (S, Vec<S>) {
    // The implicit `1 = exp(0)` term participates in the max shift, so the
    // shifted exponents are all at most 0 and overflow cannot occur.
    let shift = scores.iter().fold(S::zero(), |m, &v| m.max(v));
    let mut weights: Vec<S> = scores.iter().map(|&v| (v - shift).exp()).collect();
    let mut denom = (-shift).exp();
    for &w in &weights {
        denom += w;
    }
    let value = shift + denom.ln();
    for w in weights.iter_mut() {
        *w /= denom;
    }
    (value, weights)
}

/// Batch angular loss: `(1/N) Σ_a log(1 + Σ_n exp(f_{a,p,n}))` over all `N`
/// anchor tuplets, with analytic gradients accumulated per batch slot.
pub fn angular_loss_batch<S: Scalar>(
    batch: &NPairBatch<S>,
    params: &AngularParams<S>,
) -> LossResult<S> {
    let n = batch.len();
    let dim = batch.dim();
    let two = from_f64::<S>(2.0);
    let four = from_f64::<S>(4.0);
    let tsq = params.tan_sq_alpha;
    let coef_neg = four * tsq;
    let coef_pair = two * (S::one() + tsq);

    let mut total = S::zero();
    let mut grads = vec![vec![S::zero(); dim]; n];
    for (a_slot, p_slot) in batch.tuplets() {
        let negatives = batch.negative_slots(a_slot);
        let xa = batch.vector(a_slot);
        let xp = batch.vector(p_slot);
        let scores: Vec<S> = negatives
            .iter()
            .map(|&n_slot| f_apn_unchecked(xa, xp, batch.vector(n_slot), params))
            .collect();
        let (term, weights) = log1p_sum_exp(&scores);
        total += term;

        // ∂f/∂a = 4 tan²α · x_n − 2 (1 + tan²α) · x_p
        // ∂f/∂p = 4 tan²α · x_n − 2 (1 + tan²α) · x_a
        // ∂f/∂n = 4 tan²α · (x_a + x_p)
        let mut weight_sum = S::zero();
        for (&n_slot, &w) in negatives.iter().zip(&weights) {
            weight_sum += w;
            let xn = batch.vector(n_slot);
            for j in 0..dim {
                let wn = w * coef_neg;
                grads[a_slot][j] += wn * xn[j];
                grads[p_slot][j] += wn * xn[j];
                grads[n_slot][j] += wn * (xa[j] + xp[j]);
            }
        }
        add_scaled(&mut grads[a_slot], -weight_sum * coef_pair, xp);
        add_scaled(&mut grads[p_slot], -weight_sum * coef_pair, xa);
    }
    finalize_batch_mean(total, grads, n)
}

/// Value of [`angular_loss_batch`] without the gradient work; identical
/// summation order, so the two agree bit for bit.
pub fn angular_loss_batch_value<S: Scalar>(batch: &NPairBatch<S>, params: &AngularParams<S>) -> S {
    let mut total = S::zero();
    for (a_slot, p_slot) in batch.tuplets() {
        let xa = batch.vector(a_slot);
        let xp = batch.vector(p_slot);
        let scores: Vec<S> = batch
            .negative_slots(a_slot)
            .into_iter()
            .map(|n_slot| f_apn_unchecked(xa, xp, batch.vector(n_slot), params))
            .collect();
        total += log1p_sum_exp(&scores).0;
    }
    total * (S::one() / from_f64::<S>(batch.len() as f64))
}

/// N-pair loss: `(1/N) Σ_a log(1 + Σ_n exp(x_aᵀx_n − x_aᵀx_p))` with
/// analytic gradients accumulated per batch slot.
pub fn npair_loss_batch<S: Scalar>(batch: &NPairBatch<S>) -> LossResult<S> {
    let n = batch.len();
    let dim = batch.dim();
    let mut total = S::zero();
    let mut grads = vec![vec![S::zero(); dim]; n];
    for (a_slot, p_slot) in batch.tuplets() {
        let negatives = batch.negative_slots(a_slot);
        let xa = batch.vector(a_slot);
        let xp = batch.vector(p_slot);
        let base = dot(xa, xp);
        let scores: Vec<S> = negatives
            .iter()
            .map(|&n_slot| dot(xa, batch.vector(n_slot)) - base)
            .collect();
        let (term, weights) = log1p_sum_exp(&scores);
        total += term;

        // ∂g/∂a = x_n − x_p, ∂g/∂p = −x_a, ∂g/∂n = x_a
        let mut weight_sum = S::zero();
        for (&n_slot, &w) in negatives.iter().zip(&weights) {
            weight_sum += w;
            add_scaled(&mut grads[a_slot], w, batch.vector(n_slot));
            add_scaled(&mut grads[n_slot], w, xa);
        }
        add_scaled(&mut grads[a_slot], -weight_sum, xp);
        add_scaled(&mut grads[p_slot], -weight_sum, xa);
    }
    finalize_batch_mean(total, grads, n)
}

/// Value of [`npair_loss_batch`] without the gradient work; identical
/// summation order, so the two agree bit for bit.
pub fn npair_loss_batch_value<S: Scalar>(batch: &NPairBatch<S>) -> S {
    let mut total = S::zero();
    for (a_slot, p_slot) in batch.tuplets() {
        let xa = batch.vector(a_slot);
        let base = dot(xa, batch.vector(p_slot));
        let scores: Vec<S> = batch
            .negative_slots(a_slot)
            .into_iter()
            .map(|n_slot| dot(xa, batch.vector(n_slot)) - base)
            .collect();
        total += log1p_sum_exp(&scores).0;
    }
    total * (S::one() / from_f64::<S>(batch.len() as f64))
}

/// Combined loss: N-pair plus `lambda` times the batch angular loss.
pub fn combined_loss_batch<S: Scalar>(
    batch: &NPairBatch<S>,
    params: &AngularParams<S>,
    lambda: S,
) -> Result<LossResult<S>> {
    if lambda < S::zero() {
        return Err(Error::invalid("lambda must be nonnegative"));
    }
    let npair = npair_loss_batch(batch);
    let angular = angular_loss_batch(batch, params);
    let mut gradients = npair.gradients;
    for (acc, ang) in gradients.iter_mut().zip(&angular.gradients) {
        add_scaled(acc, lambda, ang);
    }
    Ok(LossResult {
        value: npair.value + lambda * angular.value,
        gradients,
    })
}

/// Value of [`combined_loss_batch`] without the gradient work.
pub fn combined_loss_batch_value<S: Scalar>(
    batch: &NPairBatch<S>,
    params: &AngularParams<S>,
    lambda: S,
) -> Result<S> {
    if lambda < S::zero() {
        return Err(Error::invalid("lambda must be nonnegative"));
    }
    Ok(npair_loss_batch_value(batch) + lambda * angular_loss_batch_value(batch, params))
}

/// Value of [`triplet_loss_batch`] without the gradient work; identical
/// summation order, so the two agree bit for bit.
pub fn triplet_loss_batch_value<S: Scalar>(batch: &NPairBatch<S>, margin: S) -> Result<S> {
    if margin < S::zero() {
        return Err(Error::invalid("margin must be nonnegative"));
    }
    let n = batch.len();
    let mut total = S::zero();
    for (a_slot, p_slot) in batch.tuplets() {
        let xa = batch.vector(a_slot);
        let ap = squared_distance(xa, batch.vector(p_slot));
        for n_slot in batch.negative_slots(a_slot) {
            let arg = ap - squared_distance(xa, batch.vector(n_slot)) + margin;
            if arg > S::zero() {
                total += arg;
            }
        }
    }
    Ok(total * (S::one() / from_f64::<S>((n * (n - 2)) as f64)))
}

/// Hinge triplet loss under N-pair sampling: every tuplet `(a, p)` expands
/// into `N − 2` triplets, one per negative; the result is the mean over all
/// `N (N − 2)` of them, with gradients accumulated per batch slot.
pub fn triplet_loss_batch<S: Scalar>(batch: &NPairBatch<S>, margin: S) -> Result<LossResult<S>> {
    if margin < S::zero() {
        return Err(Error::invalid("margin must be nonnegative"));
    }
    let n = batch.len();
    let dim = batch.dim();
    let two = from_f64::<S>(2.0);
    let mut total = S::zero();
    let mut grads = vec![vec![S::zero(); dim]; n];
    for (a_slot, p_slot) in batch.tuplets() {
        let xa = batch.vector(a_slot);
        let xp = batch.vector(p_slot);
        let ap = squared_distance(xa, xp);
        for n_slot in batch.negative_slots(a_slot) {
            let xn = batch.vector(n_slot);
            let arg = ap - squared_distance(xa, xn) + margin;
            if arg <= S::zero() {
                continue;
            }
            total += arg;
            for j in 0..dim {
                grads[a_slot][j] += two * (xn[j] - xp[j]);
                grads[p_slot][j] += two * (xp[j] - xa[j]);
                grads[n_slot][j] += two * (xa[j] - xn[j]);
            }
        }
    }
    Ok(finalize_batch_mean(total, grads, n * (n - 2)))
}

fn finalize_batch_mean<S: Scalar>(
    total: S,
    mut grads: Vec<Vec<S>>,
    count: usize,
) -> LossResult<S> {
    let inv = S::one() / from_f64::<S>(count as f64);
    for g in grads.iter_mut() {
        for v in g.iter_mut() {
            *v *= inv;
        }
    }
    LossResult {
        value: total * inv,
        gradients: grads,
    }
}

/// Central finite differences `(f(x + h eᵢ) − f(x − h eᵢ)) / (2h)` for every
/// coordinate of every input vector. The oracle against which all analytic
/// gradients are checked; it shares only the loss *value* path with them.
pub fn finite_difference_gradient<S: Scalar>(
    mut loss_fn: impl FnMut(&[Vec<S>]) -> S,
    inputs: &[Vec<S>],
    step: S,
) -> Result<Vec<Vec<S>>> {
    if step <= S::zero() {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let mut work = inputs.to_vec();
    let mut grads: Vec<Vec<S>> = inputs.iter().map(|v| vec![S::zero(); v.len()]).collect();
    let half_inv = S::one() / (from_f64::<S>(2.0) * step);
    for i in 0..work.len() {
        for j in 0..work[i].len() {
            let original = work[i][j];
            work[i][j] = original + step;
            let up = loss_fn(&work);
            work[i][j] = original - step;
            let down = loss_fn(&work);
            work[i][j] = original;
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::numerical(format!(
                    "loss evaluation is not finite near input {i}, coordinate {j}"
                )));
            }
            grads[i][j] = (up - down) * half_inv;
        }
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::{max_component_error, random_batch, random_triplet, test_rng};
    use crate::sampling::LabeledDataset;

    fn tri(a: &[f64], p: &[f64], n: &[f64]) -> Triplet<f64> {
        Triplet::new(a.to_vec(), p.to_vec(), n.to_vec()).unwrap()
    }

    fn all_equal_batch(dim: usize) -> NPairBatch<f64> {
        // Four identical unit vectors split over two classes.
        let mut u = vec![0.0; dim];
        u[0] = 1.0;
        let data = LabeledDataset::new(vec![
            (u.clone(), 0),
            (u.clone(), 0),
            (u.clone(), 1),
            (u.clone(), 1),
        ])
        .unwrap();
        NPairBatch::from_dataset(&data, &[(0, 1), (2, 3)]).unwrap()
    }

    #[test]
    fn angular_params_validation() {
        assert!(AngularParams::<f64>::new(45.0).is_ok());
        for alpha in [0.0, 90.0, -5.0, 180.0] {
            assert!(AngularParams::<f64>::new(alpha).is_err());
        }
        let p = AngularParams::<f64>::new(36.0).unwrap();
        assert!((p.tan_sq_alpha() - 0.52786).abs() < 5e-6);
    }

    #[test]
    fn triplet_loss_hand_values() {
        let t = tri(&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]);
        let inactive = triplet_loss(&t, 0.1).unwrap();
        assert_eq!(inactive.value, 0.0);
        assert!(inactive.gradients.iter().flatten().all(|&g| g == 0.0));

        let active = triplet_loss(&t, 3.0).unwrap();
        assert!((active.value - 1.0).abs() < 1e-12);
        assert_eq!(active.gradients[0], vec![-2.0, -2.0]); // 2(n − p)
        assert_eq!(active.gradients[1], vec![-2.0, 2.0]); // 2(p − a)
        assert_eq!(active.gradients[2], vec![4.0, 0.0]); // 2(a − n)

        let degenerate = tri(&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0]);
        assert_eq!(triplet_loss(&degenerate, 0.0).unwrap().value, 0.0);
        assert!(triplet_loss(&t, -1.0).is_err());
    }

    #[test]
    fn angular_loss_hand_values() {
        let t = tri(&[1.0, 0.0], &[-1.0, 0.0], &[0.0, 1.0]);
        let r = angular_loss(&t, &AngularParams::new(36.0).unwrap());
        assert!((r.value - 1.88854).abs() < 5e-6);

        let t = tri(&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0]);
        let r = angular_loss(&t, &AngularParams::new(20.0).unwrap());
        assert!((r.value - 0.67526).abs() < 5e-6);
        assert!((r.gradients[2][0] - 1.58969).abs() < 5e-6);
        assert!((r.gradients[2][1] - 0.52990).abs() < 5e-6);

        let r = angular_loss(&t, &AngularParams::new(45.0).unwrap());
        assert_eq!(r.value, 0.0);
        assert!(r.gradients.iter().flatten().all(|&g| g == 0.0));
    }

    #[test]
    fn f_apn_hand_values() {
        let p45 = AngularParams::<f64>::new(45.0).unwrap();
        let v = f_apn(&[1.0, 0.0], &[0.0, 1.0], &[-1.0, 0.0], &p45).unwrap();
        assert!((v + 4.0).abs() < 1e-12);

        let u = [1.0, 0.0];
        let v = f_apn(&u, &u, &u, &p45).unwrap();
        assert!((v - 4.0).abs() < 1e-12);

        // Orthogonal anchor/positive with a tiny alpha: both terms vanish.
        let p_small = AngularParams::<f64>::new(1e-6).unwrap();
        let v = f_apn(&[1.0, 0.0], &[0.0, 1.0], &[0.3, 0.4], &p_small).unwrap();
        assert!(v.abs() < 1e-11);

        assert!(f_apn(&[1.0], &[1.0, 2.0], &[0.0], &p45).is_err());
    }

    #[test]
    fn batch_angular_all_identical_hand_value() {
        let batch = all_equal_batch(3);
        let r = angular_loss_batch(&batch, &AngularParams::new(45.0).unwrap());
        let expected = (1.0 + 2.0 * 4.0f64.exp()).ln();
        assert!((r.value - expected).abs() < 1e-12);
    }

    #[test]
    fn batch_angular_vanishes_for_separated_classes() {
        // Tight clusters along orthogonal directions and a small alpha: the
        // pair term dominates every f, which goes to a large negative
        // number, and the loss collapses to log(1) = 0.
        let data = LabeledDataset::new(vec![
            (vec![10.0, 0.0], 0),
            (vec![10.0, 0.1], 0),
            (vec![0.0, 10.0], 1),
            (vec![0.1, 10.0], 1),
        ])
        .unwrap();
        let batch = NPairBatch::from_dataset(&data, &[(0, 1), (2, 3)]).unwrap();
        let r = angular_loss_batch(&batch, &AngularParams::new(5.0).unwrap());
        assert!(r.value >= 0.0);
        assert!(r.value < 1e-6, "value {} should approach 0", r.value);
    }

    #[test]
    fn batch_losses_upper_bound_the_hinge_max() {
        let mut rng = test_rng(3);
        let params = AngularParams::new(40.0).unwrap();
        for _ in 0..200 {
            let batch = random_batch::<f64>(&mut rng, 3, 4);
            for (a_slot, p_slot) in batch.tuplets() {
                let max_f = batch
                    .negative_slots(a_slot)
                    .into_iter()
                    .map(|n| {
                        f_apn(
                            batch.vector(a_slot),
                            batch.vector(p_slot),
                            batch.vector(n),
                            &params,
                        )
                        .unwrap()
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                let scores: Vec<f64> = batch
                    .negative_slots(a_slot)
                    .into_iter()
                    .map(|n| {
                        f_apn(
                            batch.vector(a_slot),
                            batch.vector(p_slot),
                            batch.vector(n),
                            &params,
                        )
                        .unwrap()
                    })
                    .collect();
                let (term, _) = super::log1p_sum_exp(&scores);
                assert!(term >= max_f.max(0.0) - 1e-12);
            }
        }
    }

    #[test]
    fn npair_all_identical_hand_value() {
        let batch = all_equal_batch(2);
        let r = npair_loss_batch(&batch);
        assert!((r.value - 3.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn npair_vanishes_when_positives_dominate() {
        let data = LabeledDataset::new(vec![
            (vec![10.0, 0.0], 0),
            (vec![10.0, 0.1], 0),
            (vec![0.0, 10.0], 1),
            (vec![0.1, 10.0], 1),
        ])
        .unwrap();
        let batch = NPairBatch::from_dataset(&data, &[(0, 1), (2, 3)]).unwrap();
        let r = npair_loss_batch(&batch);
        assert!(r.value < 1e-6);
    }

    #[test]
    fn npair_value_invariant_to_pair_order() {
        let mut rng = test_rng(5);
        let batch = random_batch::<f64>(&mut rng, 4, 4);
        // Slots of a random batch originate from dataset positions 0..n.
        let samples: Vec<(Vec<f64>, usize)> = batch
            .vectors()
            .iter()
            .zip(batch.labels())
            .map(|(v, &l)| (v.clone(), l))
            .collect();
        let data = LabeledDataset::new(samples).unwrap();
        let forward: Vec<(usize, usize)> =
            (0..batch.num_pairs()).map(|k| (2 * k, 2 * k + 1)).collect();
        let backward: Vec<(usize, usize)> = forward.iter().rev().copied().collect();
        let v1 = npair_loss_batch(&NPairBatch::from_dataset(&data, &forward).unwrap()).value;
        let v2 = npair_loss_batch(&NPairBatch::from_dataset(&data, &backward).unwrap()).value;
        assert!((v1 - v2).abs() < 1e-12 * v1.abs().max(1.0));
    }

    #[test]
    fn combined_loss_composes_npair_and_angular() {
        let batch = all_equal_batch(2);
        let params = AngularParams::new(45.0).unwrap();
        let combined = combined_loss_batch(&batch, &params, 2.0).unwrap();
        let expected = 3.0f64.ln() + 2.0 * (1.0 + 2.0 * 4.0f64.exp()).ln();
        assert!((combined.value - expected).abs() < 1e-12);

        let zero_lambda = combined_loss_batch(&batch, &params, 0.0).unwrap();
        let npair = npair_loss_batch(&batch);
        assert_eq!(zero_lambda.value, npair.value);
        assert_eq!(zero_lambda.gradients, npair.gradients);

        assert!(combined_loss_batch(&batch, &params, -1.0).is_err());
    }

    #[test]
    fn finite_difference_matches_simple_functions() {
        // f(x) = x² at x = 3.
        let grads = finite_difference_gradient(
            |inputs: &[Vec<f64>]| inputs[0][0] * inputs[0][0],
            &[vec![3.0]],
            1e-5,
        )
        .unwrap();
        assert!((grads[0][0] - 6.0).abs() < 1e-9);

        // Constant function.
        let grads =
            finite_difference_gradient(|_: &[Vec<f64>]| 7.5, &[vec![1.0, 2.0], vec![3.0]], 1e-5)
                .unwrap();
        assert!(grads.iter().flatten().all(|&g| g == 0.0));

        assert!(finite_difference_gradient(|_: &[Vec<f64>]| 1.0, &[vec![1.0]], 0.0).is_err());
        assert!(matches!(
            finite_difference_gradient(|_: &[Vec<f64>]| f64::NAN, &[vec![1.0]], 1e-5),
            Err(Error::Numerical(_))
        ));
    }

    #[test]
    fn triplet_gradients_match_finite_differences() {
        let mut rng = test_rng(17);
        let margin = 1.0;
        let mut checked = 0;
        while checked < 100 {
            let t = random_triplet::<f64>(&mut rng, 3);
            let arg = squared_distance(t.anchor(), t.positive())
                - squared_distance(t.anchor(), t.negative())
                + margin;
            if arg.abs() < 1e-3 {
                continue;
            }
            let analytic = triplet_loss(&t, margin).unwrap();
            let inputs = [
                t.anchor().to_vec(),
                t.positive().to_vec(),
                t.negative().to_vec(),
            ];
            let fd = finite_difference_gradient(
                |xs: &[Vec<f64>]| {
                    let t = Triplet::new(xs[0].clone(), xs[1].clone(), xs[2].clone()).unwrap();
                    triplet_loss(&t, margin).unwrap().value
                },
                &inputs,
                1e-5,
            )
            .unwrap();
            assert!(max_component_error(&analytic.gradients, &fd) < 1e-5);
            checked += 1;
        }
    }

    #[test]
    fn per_triplet_gradients_sum_to_zero_and_losses_are_translation_invariant() {
        let mut rng = test_rng(23);
        let params = AngularParams::new(33.0).unwrap();
        for _ in 0..300 {
            let t = random_triplet::<f64>(&mut rng, 4);
            let shift = vec![0.37, -1.2, 0.05, 2.0];
            let shifted = Triplet::new(
                t.anchor().iter().zip(&shift).map(|(a, s)| a + s).collect(),
                t.positive().iter().zip(&shift).map(|(a, s)| a + s).collect(),
                t.negative().iter().zip(&shift).map(|(a, s)| a + s).collect(),
            )
            .unwrap();

            for (res, shifted_res) in [
                (
                    triplet_loss(&t, 0.5).unwrap(),
                    triplet_loss(&shifted, 0.5).unwrap(),
                ),
                (
                    angular_loss(&t, &params),
                    angular_loss(&shifted, &params),
                ),
            ] {
                assert!((res.value - shifted_res.value).abs() < 1e-9);
                for j in 0..4 {
                    let sum: f64 = (0..3).map(|r| res.gradients[r][j]).sum();
                    assert!(sum.abs() <= 1e-10, "gradient triple sum {sum}");
                }
            }
        }
    }

    #[test]
    fn angular_loss_scales_quadratically() {
        let mut rng = test_rng(29);
        let params = AngularParams::new(41.0).unwrap();
        for _ in 0..300 {
            let t = random_triplet::<f64>(&mut rng, 3);
            let s = 1.7;
            let scaled = Triplet::new(
                t.anchor().iter().map(|v| v * s).collect(),
                t.positive().iter().map(|v| v * s).collect(),
                t.negative().iter().map(|v| v * s).collect(),
            )
            .unwrap();
            let base = angular_loss(&t, &params).value;
            let scaled_value = angular_loss(&scaled, &params).value;
            if base > 0.0 {
                let rel = (scaled_value - s * s * base).abs() / (s * s * base);
                assert!(rel < 1e-9);
            } else {
                assert_eq!(scaled_value, 0.0);
            }
        }
    }

    #[test]
    fn constant_offset_identity_for_unit_inputs() {
        let mut rng = test_rng(31);
        for &alpha in &[20.0, 36.0, 45.0, 55.0] {
            let params = AngularParams::<f64>::new(alpha).unwrap();
            let offset = -(2.0 - 6.0 * params.tan_sq_alpha());
            for _ in 0..500 {
                let t = crate::gradcheck::random_unit_triplet::<f64>(&mut rng, 5);
                let f = f_apn(t.anchor(), t.positive(), t.negative(), &params).unwrap();
                let arg = super::angular_hinge_argument(&t, &params);
                assert!(
                    (f - arg - offset).abs() < 1e-9,
                    "offset identity violated at alpha={alpha}"
                );
            }
        }
    }

    #[test]
    fn zero_loss_means_zero_gradients() {
        let mut rng = test_rng(37);
        let params = AngularParams::new(60.0).unwrap();
        let mut seen_zero = 0;
        for _ in 0..500 {
            let t = random_triplet::<f64>(&mut rng, 2);
            for res in [triplet_loss(&t, 0.0).unwrap(), angular_loss(&t, &params)] {
                if res.value == 0.0 {
                    seen_zero += 1;
                    assert!(res.gradients.iter().flatten().all(|&g| g == 0.0));
                }
            }
        }
        assert!(seen_zero > 0, "the sweep should hit inactive hinges");
    }

    #[test]
    fn value_only_paths_agree_bitwise_with_full_losses() {
        let mut rng = test_rng(47);
        let params = AngularParams::new(37.5).unwrap();
        for _ in 0..100 {
            let batch = random_batch::<f64>(&mut rng, 3, 5);
            assert_eq!(
                angular_loss_batch_value(&batch, &params),
                angular_loss_batch(&batch, &params).value
            );
            assert_eq!(npair_loss_batch_value(&batch), npair_loss_batch(&batch).value);
            assert_eq!(
                combined_loss_batch_value(&batch, &params, 2.0).unwrap(),
                combined_loss_batch(&batch, &params, 2.0).unwrap().value
            );
            assert_eq!(
                triplet_loss_batch_value(&batch, 0.3).unwrap(),
                triplet_loss_batch(&batch, 0.3).unwrap().value
            );
        }
    }

    #[test]
    fn triplet_batch_expands_tuplets() {
        let batch = all_equal_batch(2);
        // All identical samples: every expanded triplet has arg = margin.
        let r = triplet_loss_batch(&batch, 0.25).unwrap();
        assert!((r.value - 0.25).abs() < 1e-12);
        assert!(triplet_loss_batch(&batch, -0.5).is_err());
    }
}

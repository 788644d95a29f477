//! Small dense-vector helpers shared across the crate. All functions assume
//! equal-length slices; callers validate dimensions at their boundaries.

use crate::scalar::Scalar;

#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

#[inline]
pub fn squared_norm<S: Scalar>(a: &[S]) -> S {
    dot(a, a)
}

#[inline]
pub fn norm<S: Scalar>(a: &[S]) -> S {
    squared_norm(a).sqrt()
}

#[inline]
pub fn squared_distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

#[inline]
pub fn distance<S: Scalar>(a: &[S], b: &[S]) -> S {
    squared_distance(a, b).sqrt()
}

/// Componentwise midpoint `(a + b) / 2`.
pub fn midpoint<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    debug_assert_eq!(a.len(), b.len());
    let half = crate::scalar::from_f64::<S>(0.5);
    a.iter().zip(b).map(|(&x, &y)| (x + y) * half).collect()
}

/// `acc += scale * x`.
#[inline]
pub fn add_scaled<S: Scalar>(acc: &mut [S], scale: S, x: &[S]) {
    debug_assert_eq!(acc.len(), x.len());
    for (a, &v) in acc.iter_mut().zip(x) {
        *a += scale * v;
    }
}

pub fn is_finite<S: Scalar>(a: &[S]) -> bool {
    a.iter().all(|v| v.is_finite())
}

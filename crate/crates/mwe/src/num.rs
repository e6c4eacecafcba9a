//! Scalar abstraction for the model tensors.
//!
//! All core math is generic over [`Scalar`]; training normally runs in
//! `f64` (see the [`crate::Model64`] alias) while `f32` is available for
//! memory-constrained inference.

use std::fmt::{Debug, Display};
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::Float;

/// Floating-point scalar type the embedding tensors are made of.
pub trait Scalar:
    Float
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant, panicking if it does not fit.
    fn of(x: f64) -> Self {
        Self::from(x).expect("f64 constant must be representable in the scalar type")
    }

    /// Widens to `f64` for reporting and serialization.
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).expect("scalar must widen to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dot product of two equal-length slices.
pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = F::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// Euclidean norm of a slice.
pub fn norm2<F: Scalar>(a: &[F]) -> F {
    dot(a, a).sqrt()
}

/// Cosine similarity; `None` when either vector has zero norm.
pub fn cosine<F: Scalar>(a: &[F], b: &[F]) -> Option<F> {
    let na = norm2(a);
    let nb = norm2(b);
    if na == F::zero() || nb == F::zero() {
        return None;
    }
    Some(dot(a, b) / (na * nb))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_and_norm() {
        assert_eq!(dot(&[1.0, 2.0], &[3.0, -1.0]), 1.0);
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
    }

    #[test]
    fn cosine_handles_zero_norm() {
        assert_eq!(cosine::<f64>(&[0.0, 0.0], &[1.0, 0.0]), None);
        let c = cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((c - 1.0 / 2.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn works_for_f32() {
        let c: f32 = cosine(&[1.0f32, 0.0], &[1.0, 0.0]).unwrap();
        assert!((c - 1.0).abs() < 1e-6);
    }
}

//! Floating point abstraction shared by the geometric and transport code.

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real scalar used throughout the generic core.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Machine epsilon as f64, used to pick finite difference steps.
    fn machine_eps() -> f64 {
        Self::epsilon().to_f64().unwrap_or(f64::EPSILON)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an f64 literal into the scalar type.
#[inline]
pub fn lit<S: Scalar>(v: f64) -> S {
    S::from_f64(v).expect("scalar conversion")
}

/// Converts a scalar into f64.
#[inline]
pub fn to_f64<S: Scalar>(v: S) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Derives a per-item seed from a master seed (splitmix64 mixing).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) mod vecops {
    use super::Scalar;

    #[inline]
    pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
        a.iter().zip(b).fold(S::zero(), |acc, (x, y)| acc + *x * *y)
    }

    #[inline]
    pub fn norm<S: Scalar>(a: &[S]) -> S {
        dot(a, a).sqrt()
    }

    #[inline]
    pub fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
        a.iter().zip(b).map(|(x, y)| *x - *y).collect()
    }

    #[inline]
    pub fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
        a.iter().zip(b).map(|(x, y)| *x + *y).collect()
    }

    #[inline]
    pub fn scale<S: Scalar>(a: &[S], s: S) -> Vec<S> {
        a.iter().map(|x| *x * s).collect()
    }

    /// a + s * b
    #[inline]
    pub fn axpy<S: Scalar>(a: &[S], s: S, b: &[S]) -> Vec<S> {
        a.iter().zip(b).map(|(x, y)| *x + s * *y).collect()
    }

    #[inline]
    pub fn dist<S: Scalar>(a: &[S], b: &[S]) -> S {
        a.iter()
            .zip(b)
            .fold(S::zero(), |acc, (x, y)| acc + (*x - *y) * (*x - *y))
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(7, 0);
        let b = derive_seed(7, 1);
        let c = derive_seed(8, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(7, 0));
    }

    #[test]
    fn literal_roundtrip() {
        let x: f32 = lit(0.5);
        assert_eq!(x, 0.5f32);
        assert_eq!(to_f64(x), 0.5);
    }
}

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssignOps, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Open01, StandardNormal, StandardUniform, Uniform};

/// Floating-point scalar used by all chain numerics: `f32` or `f64`.
///
/// Bundles the `num-traits` surface the samplers need plus the random draws
/// they consume, so generic code never has to spell out distribution bounds.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum<Self>
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Draw from the standard normal distribution.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw uniformly from the open interval (0, 1).
    ///
    /// Open at both ends so `ln` of the draw is always finite and negative.
    fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw uniformly from the half-open interval [0, 1).
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Draw uniformly from [lo, hi).
    fn uniform_in<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self;

    /// Lossy conversion from `f64`, for constants in generic code.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardNormal.sample(rng)
            }

            fn unit_open<R: Rng + ?Sized>(rng: &mut R) -> Self {
                Open01.sample(rng)
            }

            fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
                StandardUniform.sample(rng)
            }

            fn uniform_in<R: Rng + ?Sized>(rng: &mut R, lo: Self, hi: Self) -> Self {
                Uniform::new(lo, hi).expect("valid uniform range").sample(rng)
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::RngStream;

    #[test]
    fn draws_are_in_range() {
        let mut rng = RngStream::new(7, 0);
        for _ in 0..1000 {
            let u: f64 = Scalar::unit_open(&mut rng);
            assert!(u > 0.0 && u < 1.0);
            let v: f32 = Scalar::uniform_in(&mut rng, -1.0, 1.0);
            assert!((-1.0..1.0).contains(&v));
        }
    }
}

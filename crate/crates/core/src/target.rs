use std::fmt;
use std::sync::Arc;

use crate::{Error, Point, Result, Scalar};

type SupportFn<F> = Arc<dyn Fn(&Point<F>) -> bool + Send + Sync>;
type LogDensityFn<F> = Arc<dyn Fn(&Point<F>) -> F + Send + Sync>;

/// An unnormalized target density `f` on an open subset of `R^d`.
///
/// The support predicate defines the open set on which `f > 0`; everywhere
/// else the log-density is negative infinity. That sentinel is the only
/// off-support representation used in this crate, so ratio code never meets
/// a `0 * inf`. Both closures must be deterministic: the same input yields
/// the same output bit for bit.
#[derive(Clone)]
pub struct TargetDensity<F: Scalar> {
    dim: usize,
    support: SupportFn<F>,
    log_f: LogDensityFn<F>,
}

impl<F: Scalar> fmt::Debug for TargetDensity<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetDensity").field("dim", &self.dim).finish()
    }
}

impl<F: Scalar> TargetDensity<F> {
    /// Build a target from a support predicate and a log-density.
    ///
    /// `log_f` is only consulted on the support, so it may assume its
    /// argument satisfies the predicate.
    pub fn new(
        dim: usize,
        support: impl Fn(&Point<F>) -> bool + Send + Sync + 'static,
        log_f: impl Fn(&Point<F>) -> F + Send + Sync + 'static,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("target dimension must be at least 1"));
        }
        Ok(TargetDensity {
            dim,
            support: Arc::new(support),
            log_f: Arc::new(log_f),
        })
    }

    /// A density positive on all of `R^d`.
    pub fn unrestricted(
        dim: usize,
        log_f: impl Fn(&Point<F>) -> F + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::new(dim, |_| true, log_f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn in_support(&self, x: &Point<F>) -> bool {
        x.dim() == self.dim && (self.support)(x)
    }

    /// `log f(x)`, negative infinity exactly when `x` is outside the support.
    ///
    /// Never returns NaN. Errors only on a dimension mismatch.
    pub fn log_density(&self, x: &Point<F>) -> Result<F> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        if !(self.support)(x) {
            return Ok(F::neg_infinity());
        }
        let v = (self.log_f)(x);
        // A support bug upstream must not leak NaN into acceptance ratios.
        if v.is_nan() {
            return Err(Error::numerical(format!(
                "log-density returned NaN at {:?}",
                x.coords()
            )));
        }
        Ok(v)
    }
}

/// Standard normal on `R^dim`, normalized.
pub fn standard_normal<F: Scalar>(dim: usize) -> TargetDensity<F> {
    let half = F::from_f64_lossy(0.5);
    let log_norm = F::from_usize(dim).unwrap() * half * (F::TAU()).ln();
    TargetDensity::unrestricted(dim, move |x: &Point<F>| {
        let ss: F = x.coords().iter().map(|&c| c * c).sum();
        -half * ss - log_norm
    })
    .expect("dim >= 1")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::point;
    use approx::assert_relative_eq;

    #[test]
    fn dimension_mismatch_is_rejected() {
        let t = standard_normal::<f64>(2);
        let err = t.log_density(&point(&[0.0])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn off_support_is_negative_infinity() {
        let t = TargetDensity::new(1, |x: &Point<f64>| x.coord(0) > 0.0, |x| x.coord(0).ln())
            .unwrap();
        assert_eq!(t.log_density(&point(&[-1.0])).unwrap(), f64::NEG_INFINITY);
        assert!(!t.in_support(&point(&[-1.0])));
        assert_relative_eq!(t.log_density(&point(&[2.0])).unwrap(), 2f64.ln());
    }

    #[test]
    fn standard_normal_is_normalized_at_origin() {
        let t = standard_normal::<f64>(2);
        let expected = -(2.0 * std::f64::consts::PI).ln();
        assert_relative_eq!(t.log_density(&point(&[0.0, 0.0])).unwrap(), expected);
    }
}

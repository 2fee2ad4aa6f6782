//! Numeric traits the graph statistics are written against.
//!
//! Ratio-style statistics (E-I indices, assortativity, reputation, table
//! ratios) only need field arithmetic, so they accept any [`Scalar`],
//! including exact rationals. Iterative and path-based statistics need
//! square roots and comparisons against a tolerance, so they require
//! [`RealScalar`].

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, Num, NumCast};

/// Field-like scalar: `f32`, `f64`, or an exact rational such as `Ratio<i64>`.
pub trait Scalar: Num + FromPrimitive + Copy + PartialOrd + Debug + Send + Sync + 'static {
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    fn from_ratio_parts(num: u64, den: u64) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }
}

impl<T> Scalar for T where T: Num + FromPrimitive + Copy + PartialOrd + Debug + Send + Sync + 'static
{}

/// Floating-point scalar used by centralities and spectral routines.
pub trait RealScalar: Scalar + Float + NumCast + Sum {
    /// Convergence tolerance clamped to what the type can resolve.
    fn tolerance(requested: f64) -> Self {
        let requested = Self::from_f64(requested).unwrap_or_else(Self::epsilon);
        requested.max(Self::epsilon() * Self::from_f64(64.0).unwrap())
    }
}

impl RealScalar for f32 {}
impl RealScalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    #[test]
    fn rational_is_a_scalar() {
        let r: Ratio<i64> = Scalar::from_ratio_parts(2, 6);
        assert_eq!(r, Ratio::new(1, 3));
    }

    #[test]
    fn tolerance_clamps_for_f32() {
        assert!(f32::tolerance(1e-10) > 1e-10);
        assert_eq!(f64::tolerance(1e-10), 1e-10);
    }
}

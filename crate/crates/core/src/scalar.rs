//! Numeric abstractions shared by the scoring code.
//!
//! Similarity, embedding and metric code is written against [`Scalar`], which
//! is implemented for `f32` and `f64`. Assignment solving only needs exact
//! ordered arithmetic, so it is written against the looser [`Weight`] and also
//! runs on rationals.

use std::fmt::{Debug, Display};

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Signed, ToPrimitive};

/// Floating point type used by the similarity and metric code.
pub trait Scalar: Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static {
    /// Converts an `f64` literal, panicking only for non-representable values
    /// which cannot occur for `f32`/`f64`.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize representable in scalar type")
    }

    /// Rounds to the given number of significant decimal digits.
    fn round_sig(self, digits: usize) -> Self {
        let v = self.to_f64().unwrap_or(0.0);
        if v == 0.0 || !v.is_finite() {
            return self;
        }
        let s = format!("{:.*e}", digits.saturating_sub(1), v);
        Self::lit(s.parse::<f64>().unwrap_or(v))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Edge weight for the assignment solver: anything signed, ordered and
/// closed under addition. Covers floats and exact rationals.
pub trait Weight: Signed + Copy + PartialOrd + Debug {}

impl Weight for f32 {}
impl Weight for f64 {}
impl Weight for i64 {}
impl Weight for Ratio<i64> {}
impl Weight for Ratio<i128> {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_sig_keeps_nine_digits() {
        let v = 0.123_456_789_123_f64;
        assert_eq!(v.round_sig(9), 0.123_456_789);
        assert_eq!(0.0_f64.round_sig(9), 0.0);
        assert_eq!((-1.5_f32).round_sig(9), -1.5);
    }
}

//! Exact scalar abstraction used by the numeric kernels.
//!
//! Every kernel in [`crate::linalg`], [`crate::fm`] and [`crate::lp`] is generic
//! over [`Scalar`]; the domain types fix it to [`crate::Rat`].

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// An exact ordered field element with integer helpers.
pub trait Scalar:
    Clone + Debug + Display + Ord + Hash + Num + Signed + Send + Sync + 'static
{
    fn from_int(v: i64) -> Self;
    /// Integer value if this is integral and fits in `i64`.
    fn as_i64(&self) -> Option<i64>;
    fn is_integral(&self) -> bool;
    fn floor_s(&self) -> Self;
    fn ceil_s(&self) -> Self;
    /// Denominator of the reduced fraction, as a scalar.
    fn denom_s(&self) -> Self;
    /// Gcd of two integral values (non-negative).
    fn gcd_s(&self, other: &Self) -> Self;
    fn to_f64_lossy(&self) -> f64;
}

impl<I> Scalar for Ratio<I>
where
    I: Clone
        + Integer
        + Signed
        + FromPrimitive
        + ToPrimitive
        + Hash
        + Debug
        + Display
        + Send
        + Sync
        + 'static,
{
    fn from_int(v: i64) -> Self {
        Ratio::from_integer(I::from_i64(v).expect("i64 fits scalar integer"))
    }

    fn as_i64(&self) -> Option<i64> {
        if self.is_integer() {
            self.numer().to_i64()
        } else {
            None
        }
    }

    fn is_integral(&self) -> bool {
        self.is_integer()
    }

    fn floor_s(&self) -> Self {
        self.floor()
    }

    fn ceil_s(&self) -> Self {
        self.ceil()
    }

    fn denom_s(&self) -> Self {
        Ratio::from_integer(self.denom().clone())
    }

    fn gcd_s(&self, other: &Self) -> Self {
        debug_assert!(self.is_integer() && other.is_integer());
        Ratio::from_integer(self.numer().gcd(other.numer()))
    }

    fn to_f64_lossy(&self) -> f64 {
        let n = self.numer().to_f64().unwrap_or(f64::NAN);
        let d = self.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    }
}

/// Least common multiple of two positive integral scalars.
pub fn lcm<T: Scalar>(a: &T, b: &T) -> T {
    if a.is_zero() {
        return b.clone();
    }
    if b.is_zero() {
        return a.clone();
    }
    let g = a.gcd_s(b);
    (a.clone() / g * b.clone()).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rat;

    #[test]
    fn floor_ceil_and_gcd() {
        let x = Rat::new(7.into(), 2.into());
        assert_eq!(x.floor_s(), Rat::from_int(3));
        assert_eq!(x.ceil_s(), Rat::from_int(4));
        assert_eq!(x.denom_s(), Rat::from_int(2));
        assert_eq!(Rat::from_int(12).gcd_s(&Rat::from_int(-18)), Rat::from_int(6));
        assert_eq!(lcm(&Rat::from_int(4), &Rat::from_int(6)), Rat::from_int(12));
    }

    #[test]
    fn small_ratio_instantiation() {
        let x: Ratio<i64> = Scalar::from_int(-5);
        assert_eq!(x.as_i64(), Some(-5));
        assert!(!Ratio::new(1i64, 3).is_integral());
    }
}

//! Floating point abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar the solver is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal; every `f64` is representable (possibly rounded) in `Self`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal must convert to scalar")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize must convert to scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Power with a precomputed exponent.
///
/// Integer exponents (the shallow-water case `alpha = 1`, `gamma = 2`) go through
/// `powi`, which is both faster and exact for small powers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent<T> {
    Int(i32),
    Real(T),
}

impl<T: Scalar> Exponent<T> {
    pub fn new(e: T) -> Self {
        let r = e.round();
        if (e - r).abs() <= T::epsilon() * T::lit(8.0) && r.abs() <= T::lit(64.0) {
            Exponent::Int(r.to_i32().unwrap_or(0))
        } else {
            Exponent::Real(e)
        }
    }

    /// `x^e` for `x >= 0`; `0^e = 0` for positive exponents.
    #[inline]
    pub fn pow(self, x: T) -> T {
        match self {
            Exponent::Int(k) => x.powi(k),
            Exponent::Real(e) => x.powf(e),
        }
    }

    pub fn value(self) -> T {
        match self {
            Exponent::Int(k) => T::lit(k as f64),
            Exponent::Real(e) => e,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_exponents_use_powi() {
        assert_eq!(Exponent::new(2.0_f64), Exponent::Int(2));
        assert_eq!(Exponent::new(1.25_f64), Exponent::Real(1.25));
        assert_eq!(Exponent::new(2.0_f64).pow(3.0), 9.0);
        assert_eq!(Exponent::new(1.25_f64).pow(0.0), 0.0);
        assert_eq!(Exponent::new(2.0_f32).pow(0.0), 0.0);
    }
}

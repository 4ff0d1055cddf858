//! Scalar types the nets are evaluated in.
//!
//! Every net is evaluated sample by sample in some real field `S`. For
//! quick experiments `f64` is enough; the worked examples need far more
//! resolution than a double offers once ε is around 1e-9 (a point such as
//! `1 - dρ²` is already indistinguishable from 1), so the default scalar is
//! the MPFR-backed [`Mp`].

use std::fmt::{self, Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};
use rug::ops::Pow;
use rug::Float;

/// A real field with the elementary functions the DSL and solvers need.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Short name used in reports.
    const NAME: &'static str;

    fn from_f64(x: f64) -> Self;
    /// Parses a decimal literal at full working precision.
    fn parse_decimal(text: &str) -> Option<Self>;
    fn to_f64(&self) -> f64;

    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn powf(&self, e: &Self) -> Self;
    fn powi(&self, n: i32) -> Self;

    fn is_finite(&self) -> bool;
    fn is_integer(&self) -> bool;

    /// Relative spacing of representable numbers near 1 (half an ulp).
    fn unit_roundoff() -> f64;
    /// Pivots at or below this magnitude are treated as exact zeros.
    fn pivot_floor() -> Self;

    fn is_nan(&self) -> bool {
        self.partial_cmp(self).is_none()
    }

    fn from_i64(n: i64) -> Self {
        Self::from_f64(n as f64)
    }

    /// `ln |x|` as an `f64`; stays finite for magnitudes far outside the
    /// `f64` exponent range.
    fn ln_abs(&self) -> f64 {
        self.abs().ln().to_f64()
    }

    fn min_of(&self, other: &Self) -> Self {
        if other < self {
            other.clone()
        } else {
            self.clone()
        }
    }

    fn max_of(&self, other: &Self) -> Self {
        if other > self {
            other.clone()
        } else {
            self.clone()
        }
    }

    fn is_sign_negative(&self) -> bool {
        *self < Self::zero()
    }
}

macro_rules! impl_scalar_prim {
    ($t:ty, $name:expr, $floor:expr) => {
        impl Scalar for $t {
            const NAME: &'static str = $name;

            fn from_f64(x: f64) -> Self {
                x as $t
            }
            fn parse_decimal(text: &str) -> Option<Self> {
                text.parse().ok()
            }
            fn to_f64(&self) -> f64 {
                *self as f64
            }
            fn abs(&self) -> Self {
                <$t>::abs(*self)
            }
            fn sqrt(&self) -> Self {
                <$t>::sqrt(*self)
            }
            fn exp(&self) -> Self {
                <$t>::exp(*self)
            }
            fn ln(&self) -> Self {
                <$t>::ln(*self)
            }
            fn sin(&self) -> Self {
                <$t>::sin(*self)
            }
            fn cos(&self) -> Self {
                <$t>::cos(*self)
            }
            fn powf(&self, e: &Self) -> Self {
                <$t>::powf(*self, *e)
            }
            fn powi(&self, n: i32) -> Self {
                <$t>::powi(*self, n)
            }
            fn is_finite(&self) -> bool {
                <$t>::is_finite(*self)
            }
            fn is_integer(&self) -> bool {
                <$t>::is_finite(*self) && <$t>::fract(*self) == 0.0
            }
            fn unit_roundoff() -> f64 {
                (<$t>::EPSILON as f64) / 2.0
            }
            fn pivot_floor() -> Self {
                $floor
            }
        }
    };
}

impl_scalar_prim!(f64, "f64", 1e-300);
impl_scalar_prim!(f32, "f32", 1e-37);

/// Binary floating point with `BITS` bits of mantissa, backed by MPFR.
///
/// The precision is part of the type so that constants created through
/// [`Scalar::from_f64`] always land at the working precision.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Mp<const BITS: u32>(Float);

impl<const BITS: u32> Mp<BITS> {
    pub fn from_float(f: Float) -> Self {
        Self(Float::with_val(BITS, f))
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }
}

impl<const BITS: u32> Debug for Mp<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mp<{}>({})", BITS, self.0.to_string_radix(10, Some(24)))
    }
}

impl<const BITS: u32> Display for Mp<BITS> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(24);
        f.write_str(&self.0.to_string_radix(10, Some(digits)))
    }
}

impl<const BITS: u32> Zero for Mp<BITS> {
    fn zero() -> Self {
        Self(Float::new(BITS))
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl<const BITS: u32> One for Mp<BITS> {
    fn one() -> Self {
        Self(Float::with_val(BITS, 1))
    }
}

macro_rules! mp_binop {
    ($tr:ident, $method:ident) => {
        impl<const BITS: u32> $tr for Mp<BITS> {
            type Output = Self;
            fn $method(self, rhs: Self) -> Self {
                Self($tr::$method(self.0, &rhs.0))
            }
        }
    };
}

mp_binop!(Add, add);
mp_binop!(Sub, sub);
mp_binop!(Mul, mul);
mp_binop!(Div, div);

impl<const BITS: u32> Neg for Mp<BITS> {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl<const BITS: u32> Scalar for Mp<BITS> {
    const NAME: &'static str = "mpfr";

    fn from_f64(x: f64) -> Self {
        Self(Float::with_val(BITS, x))
    }
    fn parse_decimal(text: &str) -> Option<Self> {
        Float::parse(text)
            .ok()
            .map(|p| Self(Float::with_val(BITS, p)))
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }
    fn abs(&self) -> Self {
        Self(self.0.clone().abs())
    }
    fn sqrt(&self) -> Self {
        Self(self.0.clone().sqrt())
    }
    fn exp(&self) -> Self {
        Self(self.0.clone().exp())
    }
    fn ln(&self) -> Self {
        Self(self.0.clone().ln())
    }
    fn sin(&self) -> Self {
        Self(self.0.clone().sin())
    }
    fn cos(&self) -> Self {
        Self(self.0.clone().cos())
    }
    fn powf(&self, e: &Self) -> Self {
        Self(self.0.clone().pow(&e.0))
    }
    fn powi(&self, n: i32) -> Self {
        Self(self.0.clone().pow(n))
    }
    fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
    fn is_integer(&self) -> bool {
        self.0.is_integer()
    }
    fn unit_roundoff() -> f64 {
        2f64.powi(-(BITS as i32))
    }
    fn pivot_floor() -> Self {
        // far below anything a moderate net reaches on the default grid
        Self(Float::with_val(BITS, 1) >> 100_000u32)
    }
    fn ln_abs(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.0.clone().abs().ln().to_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Mp<256>;

    #[test]
    fn mp_resolves_what_f64_cannot() {
        let tiny = M::from_f64(1e-18);
        let x = M::one() - tiny.clone();
        let back = M::one() - x;
        assert_eq!(back, tiny);

        let x64 = 1.0f64 - 1e-18;
        assert_eq!(x64, 1.0);
    }

    #[test]
    fn ln_abs_survives_underflow() {
        let e = M::from_f64(1e-9).powi(40);
        assert_eq!(e.to_f64(), 0.0);
        let l = e.ln_abs();
        assert!((l - 40.0 * (1e-9f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn parse_decimal_keeps_precision() {
        let a = M::parse_decimal("0.1").unwrap();
        let b = M::from_f64(0.1);
        assert!(a != b);
        assert_eq!(a.to_f64(), 0.1);
    }

    #[test]
    fn integer_detection() {
        assert!(M::from_f64(3.0).is_integer());
        assert!(!M::from_f64(0.5).is_integer());
        assert!(2.0f64.is_integer());
        assert!(!f64::NAN.is_integer());
    }
}

//! Scalar types for numerical integration.
//!
//! Everything numeric in [`crate::sim`] is generic over [`Real`]. Two
//! implementations ship: plain `f64` and [`Extended`], a 640-bit binary
//! floating point number used when forward integration amplifies roundoff
//! faster than double precision can absorb.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use dashu_base::SquareRoot;
use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use dashu_int::IBig;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;

pub trait Real:
    Clone
    + fmt::Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    /// Short tag used in output records.
    const NAME: &'static str;

    fn from_f64(x: f64) -> Self;
    fn from_ratio(r: &BigRational) -> Self;
    fn to_f64(&self) -> f64;
    fn sqrt(&self) -> Self;

    fn zero() -> Self {
        Self::from_f64(0.0)
    }
    fn one() -> Self {
        Self::from_f64(1.0)
    }
    fn from_i64(n: i64) -> Self {
        Self::from_ratio(&BigRational::from_integer(BigInt::from(n)))
    }
    /// `p / q` computed in working precision.
    fn frac(p: i64, q: i64) -> Self {
        Self::from_i64(p) / Self::from_i64(q)
    }
    fn abs(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
    fn is_negative(&self) -> bool {
        *self < Self::zero()
    }
    fn signum(&self) -> i8 {
        let z = Self::zero();
        if *self > z {
            1
        } else if *self < z {
            -1
        } else {
            0
        }
    }
    fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

impl Real for f64 {
    const NAME: &'static str = "double";

    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_ratio(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
}

type Big = FBig<HalfEven, 2>;

/// Binary floating point with a fixed 640-bit mantissa.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Extended(Big);

impl Extended {
    pub const PRECISION: usize = 640;

    fn wrap(x: Big) -> Self {
        Extended(x.with_precision(Self::PRECISION).value())
    }

    fn from_bigint(n: &BigInt) -> Big {
        let digits = n.to_str_radix(16);
        let i = IBig::from_str_radix(&digits, 16).expect("hex digits from BigInt");
        Big::from(i).with_precision(Self::PRECISION).value()
    }
}

impl fmt::Debug for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

impl Add for Extended {
    type Output = Extended;
    fn add(self, rhs: Self) -> Self {
        Extended(self.0 + rhs.0)
    }
}

impl Sub for Extended {
    type Output = Extended;
    fn sub(self, rhs: Self) -> Self {
        Extended(self.0 - rhs.0)
    }
}

impl Mul for Extended {
    type Output = Extended;
    fn mul(self, rhs: Self) -> Self {
        Extended(self.0 * rhs.0)
    }
}

impl Div for Extended {
    type Output = Extended;
    fn div(self, rhs: Self) -> Self {
        Extended(self.0 / rhs.0)
    }
}

impl Neg for Extended {
    type Output = Extended;
    fn neg(self) -> Self {
        Extended(-self.0)
    }
}

impl Real for Extended {
    const NAME: &'static str = "extended";

    fn from_f64(x: f64) -> Self {
        let b = Big::try_from(x).expect("finite f64");
        Self::wrap(b)
    }
    fn from_ratio(r: &BigRational) -> Self {
        let n = Self::from_bigint(r.numer());
        let d = Self::from_bigint(r.denom());
        Extended(n / d)
    }
    fn to_f64(&self) -> f64 {
        self.0.to_f64().value()
    }
    fn sqrt(&self) -> Self {
        Extended(self.0.sqrt())
    }
}

//! Exact rational arithmetic and signed square roots of rationals.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

pub fn ratio(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

/// Exact rational value of a finite double.
pub fn from_f64(x: f64) -> Rational {
    BigRational::from_float(x).expect("finite double")
}

pub fn to_f64(q: &Rational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Exact square of a double.
pub fn square_of(x: f64) -> Rational {
    let q = from_f64(x);
    &q * &q
}

/// A real number `sign * sqrt(sq)` with `sq` a non-negative rational.
///
/// Products and quotients stay exact; equality is decided exactly.
#[derive(Clone, PartialEq, Eq)]
pub struct Surd {
    pub negative: bool,
    pub sq: Rational,
}

impl Surd {
    pub fn zero() -> Self {
        Surd { negative: false, sq: Rational::zero() }
    }

    pub fn one() -> Self {
        Surd { negative: false, sq: Rational::one() }
    }

    pub fn from_rational(q: &Rational) -> Self {
        Surd { negative: q.is_negative(), sq: q * q }
    }

    pub fn from_f64(x: f64) -> Self {
        Surd::from_rational(&from_f64(x))
    }

    /// `sqrt(q)` for a non-negative rational `q`.
    pub fn sqrt(q: &Rational) -> Self {
        assert!(!q.is_negative(), "square root of a negative rational");
        Surd { negative: false, sq: q.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.sq.is_zero()
    }

    fn normalized(mut self) -> Self {
        if self.sq.is_zero() {
            self.negative = false;
        }
        self
    }

    pub fn mul(&self, other: &Surd) -> Surd {
        Surd { negative: self.negative != other.negative, sq: &self.sq * &other.sq }.normalized()
    }

    pub fn div(&self, other: &Surd) -> Surd {
        assert!(!other.is_zero(), "division by zero surd");
        Surd { negative: self.negative != other.negative, sq: &self.sq / &other.sq }.normalized()
    }

    pub fn neg(&self) -> Surd {
        Surd { negative: !self.negative, sq: self.sq.clone() }.normalized()
    }

    pub fn to_f64(&self) -> f64 {
        let v = to_f64(&self.sq).sqrt();
        if self.negative {
            -v
        } else {
            v
        }
    }
}

impl fmt::Debug for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}sqrt({})", if self.negative { "-" } else { "" }, self.sq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surd_algebra() {
        let a = Surd::sqrt(&int(5));
        let b = Surd::sqrt(&int(17));
        let q = a.div(&b);
        assert_eq!(q.sq, ratio(5, 17));
        assert_eq!(q.mul(&b), a);
        assert!(a.neg().negative);
        assert_eq!(Surd::from_f64(-0.5).sq, ratio(1, 4));
        assert!(Surd::from_f64(-0.5).negative);
        assert!(!Surd::zero().neg().negative);
    }

    #[test]
    fn float_squares_are_exact() {
        assert_eq!(square_of(0.5), ratio(1, 4));
        assert_eq!(square_of(3.0), int(9));
    }
}

//! Exact Gaussian rationals: `re + im*I` with arbitrary-precision rational parts.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// An exact complex number with rational real and imaginary parts.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cq {
    pub re: BigRational,
    pub im: BigRational,
}

impl Cq {
    pub fn zero() -> Self {
        Cq { re: BigRational::zero(), im: BigRational::zero() }
    }

    pub fn one() -> Self {
        Cq::int(1)
    }

    pub fn i() -> Self {
        Cq { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn int(n: i64) -> Self {
        Cq { re: BigRational::from_integer(BigInt::from(n)), im: BigRational::zero() }
    }

    pub fn frac(n: i64, d: i64) -> Self {
        Cq {
            re: BigRational::new(BigInt::from(n), BigInt::from(d)),
            im: BigRational::zero(),
        }
    }

    pub fn new(re: BigRational, im: BigRational) -> Self {
        Cq { re, im }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Cq { re: self.re.clone(), im: -self.im.clone() }
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let norm = &self.re * &self.re + &self.im * &self.im;
        Some(Cq { re: &self.re / &norm, im: -(&self.im / &norm) })
    }

    pub fn pow(&self, n: i32) -> Option<Self> {
        let base = if n < 0 { self.inv()? } else { self.clone() };
        let mut acc = Cq::one();
        for _ in 0..n.unsigned_abs() {
            acc = &acc * &base;
        }
        Some(acc)
    }

    /// The integer value when this is a real integer.
    pub fn as_integer(&self) -> Option<BigInt> {
        if self.im.is_zero() && self.re.is_integer() {
            Some(self.re.to_integer())
        } else {
            None
        }
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Cq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let imag = |r: &BigRational| -> String {
            if r.is_one() {
                "I".to_string()
            } else if (-r).is_one() {
                "-I".to_string()
            } else {
                format!("{}*I", fmt_rational(r))
            }
        };
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => write!(f, "{}", fmt_rational(&self.re)),
            (true, false) => write!(f, "{}", imag(&self.im)),
            (false, false) => {
                let im = imag(&self.im.abs());
                let sign = if self.im.is_negative() { "-" } else { "+" };
                write!(f, "({} {} {})", fmt_rational(&self.re), sign, im)
            }
        }
    }
}

impl fmt::Debug for Cq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl<'a> Add<&'a Cq> for &'a Cq {
    type Output = Cq;
    fn add(self, rhs: &Cq) -> Cq {
        Cq { re: &self.re + &rhs.re, im: &self.im + &rhs.im }
    }
}

impl<'a> Sub<&'a Cq> for &'a Cq {
    type Output = Cq;
    fn sub(self, rhs: &Cq) -> Cq {
        Cq { re: &self.re - &rhs.re, im: &self.im - &rhs.im }
    }
}

impl<'a> Mul<&'a Cq> for &'a Cq {
    type Output = Cq;
    fn mul(self, rhs: &Cq) -> Cq {
        Cq {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl<'a> Div<&'a Cq> for &'a Cq {
    type Output = Cq;
    fn div(self, rhs: &Cq) -> Cq {
        self * &rhs.inv().expect("division by zero Gaussian rational")
    }
}

impl Add for Cq {
    type Output = Cq;
    fn add(self, rhs: Cq) -> Cq {
        &self + &rhs
    }
}

impl Sub for Cq {
    type Output = Cq;
    fn sub(self, rhs: Cq) -> Cq {
        &self - &rhs
    }
}

impl Mul for Cq {
    type Output = Cq;
    fn mul(self, rhs: Cq) -> Cq {
        &self * &rhs
    }
}

impl AddAssign<&Cq> for Cq {
    fn add_assign(&mut self, rhs: &Cq) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl Neg for Cq {
    type Output = Cq;
    fn neg(self) -> Cq {
        Cq { re: -self.re, im: -self.im }
    }
}

impl Neg for &Cq {
    type Output = Cq;
    fn neg(self) -> Cq {
        Cq { re: -self.re.clone(), im: -self.im.clone() }
    }
}

impl From<i64> for Cq {
    fn from(n: i64) -> Self {
        Cq::int(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_gaussian() {
        let z = Cq::new(BigRational::from_integer(3.into()), BigRational::from_integer(4.into()));
        let w = z.inv().unwrap();
        assert_eq!(&z * &w, Cq::one());
        assert!(Cq::zero().inv().is_none());
    }

    #[test]
    fn display_forms() {
        assert_eq!(Cq::frac(1, 2).to_string(), "1/2");
        assert_eq!(Cq::i().to_string(), "I");
        assert_eq!((-Cq::i()).to_string(), "-I");
        assert_eq!((&Cq::int(1) - &Cq::i()).to_string(), "(1 - I)");
        assert_eq!((&Cq::frac(-3, 4) * &Cq::i()).to_string(), "-3/4*I");
    }
}

//! Exact arithmetic in a complex Grassmann algebra with finitely many
//! generators `xi1..xiK`.
//!
//! Elements are stored as sorted maps from generator subsets (bitmasks) to
//! coefficients, never holding a zero coefficient. The coefficient type is
//! generic so the same kernel serves plain Gaussian rationals and symbolic
//! component expressions; symbolic coefficients may themselves be graded, in
//! which case their odd part picks up a sign when moved past generators.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg};

use thiserror::Error;

use crate::coeff::Cq;
use crate::func::Function;

/// Default number of generators for a run.
pub const DEFAULT_GENERATORS: usize = 8;

/// Hard upper bound imposed by the bitmask representation.
pub const MAX_GENERATORS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrassmannError {
    #[error("algebra size mismatch: {left} vs {right} generators")]
    MismatchedAlgebraSize { left: usize, right: usize },
    #[error("element has zero body and is not invertible")]
    BodilessNotInvertible,
    #[error("function argument has odd components")]
    OddArgument,
    #[error("no exact value for {0}")]
    NoExactValue(String),
    #[error("generator count {0} outside 1..={MAX_GENERATORS}")]
    BadGeneratorCount(usize),
    #[error("generator index {index} outside 1..={size}")]
    BadGeneratorIndex { index: usize, size: usize },
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn from_bit(odd: bool) -> Self {
        if odd {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    pub fn flip(self) -> Self {
        Parity::from_bit(!self.is_odd())
    }

    /// Parity of a product.
    pub fn add(self, other: Parity) -> Parity {
        Parity::from_bit(self.is_odd() ^ other.is_odd())
    }

    /// `deg(h)` as used in sign exponents.
    pub fn degree(self) -> u32 {
        self as u32
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Even => write!(f, "even"),
            Parity::Odd => write!(f, "odd"),
        }
    }
}

/// Result of grading an element that may not be homogeneous.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Grade {
    Even,
    Odd,
    Mixed,
}

impl Grade {
    pub fn parity(self) -> Option<Parity> {
        match self {
            Grade::Even => Some(Parity::Even),
            Grade::Odd => Some(Parity::Odd),
            Grade::Mixed => None,
        }
    }
}

/// Ordered subset of generator indices; bit `i` stands for generator `i+1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct GeneratorSet(u32);

impl GeneratorSet {
    pub const EMPTY: GeneratorSet = GeneratorSet(0);

    /// The singleton `{index}` with 1-based `index`.
    pub fn single(index: usize) -> Self {
        GeneratorSet(1 << (index - 1))
    }

    pub fn from_indices(indices: &[usize]) -> Self {
        GeneratorSet(indices.iter().fold(0, |m, &i| m | (1 << (i - 1))))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn parity(self) -> Parity {
        Parity::from_bit(self.len() % 2 == 1)
    }

    /// 1-based indices in increasing order.
    pub fn indices(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |i| self.0 & (1 << i) != 0).map(|i| i + 1)
    }

    pub fn max_index(self) -> usize {
        32 - self.0.leading_zeros() as usize
    }

    /// Product `xi^self * xi^other` as `(sign, mask)`, or `None` when a
    /// generator repeats.
    pub fn merge(self, other: GeneratorSet) -> Option<(bool, GeneratorSet)> {
        if self.0 & other.0 != 0 {
            return None;
        }
        // Each generator of `other` passes every larger generator of `self`.
        let mut swaps = 0u32;
        let mut rest = other.0;
        while rest != 0 {
            let j = rest.trailing_zeros();
            rest &= rest - 1;
            let above = if j >= 31 { 0 } else { self.0 & !((2u32 << j) - 1) };
            swaps += above.count_ones();
        }
        Some((swaps % 2 == 1, GeneratorSet(self.0 | other.0)))
    }
}

/// Coefficient ring for Grassmann elements.
///
/// Coefficients commute with generators up to their own grading: the odd part
/// returned by [`GradedScalar::split_parity`] anticommutes with odd generator
/// monomials.
pub trait GradedScalar: Clone + PartialEq + fmt::Debug + fmt::Display
where
    for<'a> &'a Self: Add<&'a Self, Output = Self> + Mul<&'a Self, Output = Self> + Neg<Output = Self>,
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_cq(c: Cq) -> Self;
    fn is_zero(&self) -> bool;
    /// `(even, odd)` parts of the coefficient itself.
    fn split_parity(&self) -> (Self, Self);
    fn inverse(&self) -> Option<Self>;
    /// Exact value of `f(body)`, or `None` if it cannot be expressed.
    fn apply_function(f: &Function, body: &Self) -> Option<Self>;
}

impl GradedScalar for Cq {
    fn zero() -> Self {
        Cq::zero()
    }
    fn one() -> Self {
        Cq::one()
    }
    fn from_cq(c: Cq) -> Self {
        c
    }
    fn is_zero(&self) -> bool {
        Cq::is_zero(self)
    }
    fn split_parity(&self) -> (Self, Self) {
        (self.clone(), Cq::zero())
    }
    fn inverse(&self) -> Option<Self> {
        self.inv()
    }
    fn apply_function(f: &Function, body: &Self) -> Option<Self> {
        if body.is_zero() {
            f.value_at_zero()
        } else {
            None
        }
    }
}

/// An element of the Grassmann algebra with `size` generators.
#[derive(Clone, PartialEq)]
pub struct GrassmannNumber<C = Cq> {
    size: usize,
    terms: BTreeMap<GeneratorSet, C>,
}

impl<C> GrassmannNumber<C>
where
    C: GradedScalar,
    for<'a> &'a C: Add<&'a C, Output = C> + Mul<&'a C, Output = C> + Neg<Output = C>,
{
    pub fn zero(size: usize) -> Result<Self, GrassmannError> {
        if size == 0 || size > MAX_GENERATORS {
            return Err(GrassmannError::BadGeneratorCount(size));
        }
        Ok(GrassmannNumber { size, terms: BTreeMap::new() })
    }

    pub fn scalar(size: usize, c: C) -> Result<Self, GrassmannError> {
        let mut z = Self::zero(size)?;
        z.add_term(GeneratorSet::EMPTY, c);
        Ok(z)
    }

    /// The generator `xi_index` (1-based).
    pub fn generator(size: usize, index: usize) -> Result<Self, GrassmannError> {
        Self::monomial(size, &[index], C::one())
    }

    /// `c * xi_{i1} * xi_{i2} * ...` in the order given.
    pub fn monomial(size: usize, indices: &[usize], c: C) -> Result<Self, GrassmannError> {
        let mut acc = Self::scalar(size, c)?;
        for &i in indices {
            if i == 0 || i > size {
                return Err(GrassmannError::BadGeneratorIndex { index: i, size });
            }
            let mut g = Self::zero(size)?;
            g.add_term(GeneratorSet::single(i), C::one());
            acc = acc.multiply(&g)?;
        }
        Ok(acc)
    }

    pub fn from_terms(
        size: usize,
        terms: impl IntoIterator<Item = (GeneratorSet, C)>,
    ) -> Result<Self, GrassmannError> {
        let mut z = Self::zero(size)?;
        for (mask, c) in terms {
            if mask.max_index() > size {
                return Err(GrassmannError::BadGeneratorIndex { index: mask.max_index(), size });
            }
            z.add_term(mask, c);
        }
        Ok(z)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GeneratorSet, &C)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, mask: GeneratorSet) -> C {
        self.terms.get(&mask).cloned().unwrap_or_else(C::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    fn add_term(&mut self, mask: GeneratorSet, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.remove(&mask) {
            Some(old) => {
                let sum = &old + &c;
                if !sum.is_zero() {
                    self.terms.insert(mask, sum);
                }
            }
            None => {
                self.terms.insert(mask, c);
            }
        }
    }

    fn check_size(&self, other: &Self) -> Result<(), GrassmannError> {
        if self.size != other.size {
            return Err(GrassmannError::MismatchedAlgebraSize { left: self.size, right: other.size });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.check_size(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        GrassmannNumber {
            size: self.size,
            terms: self.terms.iter().map(|(m, c)| (*m, -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = GrassmannNumber { size: self.size, terms: BTreeMap::new() };
        for (m, a) in &self.terms {
            out.add_term(*m, c * a);
        }
        out
    }

    /// Bilinear product with generator anticommutation.
    pub fn multiply(&self, other: &Self) -> Result<Self, GrassmannError> {
        self.check_size(other)?;
        let mut out = GrassmannNumber { size: self.size, terms: BTreeMap::new() };
        for (s, a) in &self.terms {
            let (a_even, a_odd) = a.split_parity();
            for (t, b) in &other.terms {
                let Some((negate, mask)) = s.merge(*t) else { continue };
                // Moving xi^t past the odd part of `a` costs (-1)^{|t|}.
                let a_moved = if t.parity().is_odd() { &a_even + &(-&a_odd) } else { a.clone() };
                let mut c = &a_moved * b;
                if negate {
                    c = -&c;
                }
                out.add_term(mask, c);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> Result<Self, GrassmannError> {
        let mut acc = Self::scalar(self.size, C::one())?;
        for _ in 0..n {
            acc = acc.multiply(self)?;
        }
        Ok(acc)
    }

    pub fn body(&self) -> C {
        self.coefficient(GeneratorSet::EMPTY)
    }

    pub fn soul(&self) -> Self {
        let mut s = self.clone();
        s.terms.remove(&GeneratorSet::EMPTY);
        s
    }

    /// Even and odd parts, counting coefficient grading.
    pub fn split_parity(&self) -> (Self, Self) {
        let mut even = GrassmannNumber { size: self.size, terms: BTreeMap::new() };
        let mut odd = even.clone();
        for (m, c) in &self.terms {
            let (ce, co) = c.split_parity();
            let (to_even, to_odd) = if m.parity().is_odd() { (co, ce) } else { (ce, co) };
            even.add_term(*m, to_even);
            odd.add_term(*m, to_odd);
        }
        (even, odd)
    }

    pub fn grade(&self) -> Grade {
        let (even, odd) = self.split_parity();
        match (even.is_zero(), odd.is_zero()) {
            (_, true) => Grade::Even,
            (true, false) => Grade::Odd,
            (false, false) => Grade::Mixed,
        }
    }

    /// Two-sided inverse by the nilpotent geometric series in `soul / body`.
    pub fn invert(&self) -> Result<Self, GrassmannError> {
        let body = self.body();
        if body.is_zero() {
            return Err(GrassmannError::BodilessNotInvertible);
        }
        let (_, body_odd) = body.split_parity();
        if !body_odd.is_zero() {
            return Err(GrassmannError::BodilessNotInvertible);
        }
        let inv_body = body.inverse().ok_or(GrassmannError::BodilessNotInvertible)?;
        // x = -soul * b^{-1};  a^{-1} = b^{-1} * sum x^n
        let x = self.soul().scale(&inv_body).neg();
        let mut sum = Self::scalar(self.size, C::one())?;
        let mut power = sum.clone();
        loop {
            power = power.multiply(&x)?;
            if power.is_zero() {
                break;
            }
            sum = sum.add(&power)?;
        }
        Ok(sum.scale(&inv_body))
    }

    /// `f(body + soul) = sum_n f^(n)(body) soul^n / n!`, truncated once the
    /// soul power vanishes.
    pub fn apply_even_function(&self, f: &Function) -> Result<Self, GrassmannError> {
        if !self.split_parity().1.is_zero() {
            return Err(GrassmannError::OddArgument);
        }
        let body = self.body();
        let soul = self.soul();
        let mut out = Self::zero(self.size)?;
        let mut power = Self::scalar(self.size, C::one())?;
        let mut factorial = Cq::one();
        let mut n: u32 = 0;
        loop {
            let (sign, g) = f.nth_derivative(n);
            let value = C::apply_function(&g, &body)
                .ok_or_else(|| GrassmannError::NoExactValue(format!("{g}({body})")))?;
            let coeff = &value * &C::from_cq(&sign / &factorial);
            out = out.add(&power.scale(&coeff))?;
            n += 1;
            power = power.multiply(&soul)?;
            if power.is_zero() {
                break;
            }
            factorial = &factorial * &Cq::int(n as i64);
        }
        Ok(out)
    }
}

impl<C> fmt::Display for GrassmannNumber<C>
where
    C: GradedScalar,
    for<'a> &'a C: Add<&'a C, Output = C> + Mul<&'a C, Output = C> + Neg<Output = C>,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (mask, c)) in self.terms.iter().enumerate() {
            let gens: Vec<String> = mask.indices().map(|i| format!("xi{i}")).collect();
            let cs = c.to_string();
            let (neg, mag) = match cs.strip_prefix('-') {
                Some(rest) if !rest.contains([' ', '+']) => (true, rest.to_string()),
                _ => (false, cs),
            };
            if n > 0 {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            } else if neg {
                write!(f, "-")?;
            }
            let unit = mag == "1";
            let coeff = if mag.contains([' ', '+']) && !mag.starts_with('(') {
                format!("({mag})")
            } else {
                mag
            };
            match (gens.is_empty(), unit) {
                (true, _) => write!(f, "{coeff}")?,
                (false, true) => write!(f, "{}", gens.join("*"))?,
                (false, false) => write!(f, "{}*{}", coeff, gens.join("*"))?,
            }
        }
        Ok(())
    }
}

impl<C> fmt::Debug for GrassmannNumber<C>
where
    C: GradedScalar,
    for<'a> &'a C: Add<&'a C, Output = C> + Mul<&'a C, Output = C> + Neg<Output = C>,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

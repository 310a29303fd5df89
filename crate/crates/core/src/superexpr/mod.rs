//! Symbolic superfield expressions with a canonical normal form.
//!
//! An expression is a finite sum of monomials with Gaussian-rational
//! coefficients. A monomial is an ordered product of atoms: plain symbols,
//! field derivatives `f_I` and function applications `exp(e)`. Atoms are kept
//! sorted; reordering odd atoms contributes the permutation sign, odd atoms
//! square to zero, and nilpotent parameters vanish at second order. Two
//! expressions are structurally equal iff their normal forms agree.
//! Trigonometric and exponential identities are applied only by
//! [`SuperExpr::is_identically_zero`].

mod components;
mod diff;
mod parse;
mod render;
mod subst;
pub mod symbol;
mod zero;

use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::coeff::Cq;
use crate::func::{Function, FunctionSymbol};
use crate::grassmann::{Grade, GrassmannError, Parity};

pub use components::{apply_to_components, expand_components, expand_function, from_components, to_explicit, to_grassmann};
pub use diff::{compose_check, Partial, SuperOperator};
pub use parse::parse_expr;
pub use symbol::{Superspace, Sym, Symbol, SymbolKind, SymbolTable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("undeclared symbol `{0}`")]
    UndeclaredSymbol(String),
    #[error("symbol `{0}` declared twice")]
    DuplicateSymbol(String),
    #[error("`{0}` is a reserved name")]
    ReservedName(String),
    #[error("component `{component}` of `{field}` has the wrong parity")]
    ComponentParity { field: String, component: String },
    #[error("function argument `{0}` is not even")]
    OddArgument(String),
    #[error("no component expansion declared for `{0}`")]
    MissingComponentExpansion(String),
    #[error("`{0}` is not invertible")]
    NotInvertible(String),
    #[error("substituting `{name}`: expected {expected} expression")]
    ParityMismatch { name: String, expected: Parity },
    #[error("superspace coordinates xp, xm, tp, tm are not declared")]
    NoSuperspace,
    #[error("unknown operator `{0}`")]
    UnknownOperator(String),
    #[error("syntax error at column {column}: {message}")]
    Syntax { column: usize, message: String },
    #[error("term `{0}` is not linear in the marker symbols")]
    NotLinear(String),
    #[error(transparent)]
    Grassmann(#[from] GrassmannError),
}

/// Derivative multi-index of a field, sorted by coordinate rank. Odd
/// coordinates appear at most once.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct DerivIndex(Vec<(Sym, u32)>);

impl DerivIndex {
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[(Sym, u32)] {
        &self.0
    }

    /// Number of odd derivatives, mod 2.
    pub fn parity(&self) -> Parity {
        let odd: u32 = self.0.iter().filter(|(c, _)| c.is_odd()).map(|(_, n)| *n).sum();
        Parity::from_bit(odd % 2 == 1)
    }

    /// Index after one more derivative in `coord`, with the sign from
    /// moving an odd derivative inside higher-ranked odd ones.
    pub fn with(&self, coord: &Sym) -> Option<(bool, DerivIndex)> {
        let mut entries = self.0.clone();
        let mut negate = false;
        if coord.is_odd() {
            let later = entries.iter().filter(|(c, _)| c.is_odd() && c.rank > coord.rank).count();
            negate = later % 2 == 1;
        }
        match entries.iter_mut().find(|(c, _)| c == coord) {
            Some(_) if coord.is_odd() => return None,
            Some((_, n)) => *n += 1,
            None => {
                entries.push((coord.clone(), 1));
                entries.sort_by_key(|(c, _)| c.rank);
            }
        }
        Some((negate, DerivIndex(entries)))
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Atom {
    /// A declared symbol, with a derivative index for fields.
    Sym { sym: Sym, index: DerivIndex },
    /// A function of an even argument.
    Func { f: Function, arg: Box<SuperExpr> },
}

impl Atom {
    pub fn symbol(sym: &Sym) -> Atom {
        Atom::Sym { sym: sym.clone(), index: DerivIndex::default() }
    }

    pub fn parity(&self) -> Parity {
        match self {
            Atom::Sym { sym, index } => sym.parity.add(index.parity()),
            Atom::Func { .. } => Parity::Even,
        }
    }

    pub fn is_odd(&self) -> bool {
        self.parity().is_odd()
    }

    /// Second power vanishes.
    fn is_nilpotent(&self) -> bool {
        match self {
            Atom::Sym { sym, .. } => self.is_odd() || sym.nilpotent,
            Atom::Func { .. } => false,
        }
    }

    fn is_invertible(&self) -> bool {
        match self {
            Atom::Sym { sym, index } => sym.invertible && index.is_empty(),
            Atom::Func { f, .. } => f.symbol == FunctionSymbol::Exp,
        }
    }

    pub fn as_symbol(&self) -> Option<&Sym> {
        match self {
            Atom::Sym { sym, index } if index.is_empty() => Some(sym),
            _ => None,
        }
    }

    /// Symbol names occurring in this atom, including inside function arguments.
    fn collect_symbols(&self, out: &mut BTreeSet<String>) {
        match self {
            Atom::Sym { sym, .. } => {
                out.insert(sym.name.clone());
            }
            Atom::Func { arg, .. } => {
                for (m, _) in arg.terms() {
                    for (a, _) in m.factors() {
                        a.collect_symbols(out);
                    }
                }
            }
        }
    }
}

/// Sorted product of atom powers.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Monomial(pub(crate) Vec<(Atom, i32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(a: Atom) -> Self {
        Monomial(vec![(a, 1)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(Atom, i32)] {
        &self.0
    }

    pub fn parity(&self) -> Parity {
        let odd = self.0.iter().filter(|(a, _)| a.is_odd()).count();
        Parity::from_bit(odd % 2 == 1)
    }

    /// Product in normal order; `None` when it vanishes, otherwise the sign
    /// flag and the merged monomial.
    pub fn multiply(&self, other: &Monomial) -> Option<(bool, Monomial)> {
        let left_odd: Vec<&Atom> = self.0.iter().filter(|(a, _)| a.is_odd()).map(|(a, _)| a).collect();
        let mut swaps = 0usize;
        for (b, _) in other.0.iter().filter(|(a, _)| a.is_odd()) {
            swaps += left_odd.len() - left_odd.partition_point(|a| *a <= b);
        }
        let mut out: Vec<(Atom, i32)> = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let take_left = j >= other.0.len() || (i < self.0.len() && self.0[i].0 < other.0[j].0);
            let take_right = i >= self.0.len() || (j < other.0.len() && other.0[j].0 < self.0[i].0);
            if take_left {
                out.push(self.0[i].clone());
                i += 1;
            } else if take_right {
                out.push(other.0[j].clone());
                j += 1;
            } else {
                let (a, k1) = &self.0[i];
                let k = k1 + other.0[j].1;
                if a.is_nilpotent() && k >= 2 {
                    return None;
                }
                if k != 0 {
                    out.push((a.clone(), k));
                }
                i += 1;
                j += 1;
            }
        }
        Some((swaps % 2 == 1, Monomial(out)))
    }
}

/// A sum of monomials in normal form.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct SuperExpr {
    terms: BTreeMap<Monomial, Cq>,
}

impl SuperExpr {
    pub fn zero() -> Self {
        SuperExpr::default()
    }

    pub fn one() -> Self {
        SuperExpr::constant(Cq::one())
    }

    pub fn constant(c: Cq) -> Self {
        SuperExpr::term(c, Monomial::one())
    }

    pub fn int(n: i64) -> Self {
        SuperExpr::constant(Cq::int(n))
    }

    pub fn i() -> Self {
        SuperExpr::constant(Cq::i())
    }

    pub fn term(c: Cq, m: Monomial) -> Self {
        let mut e = SuperExpr::zero();
        e.add_term(m, c);
        e
    }

    pub fn atom(a: Atom) -> Self {
        SuperExpr::term(Cq::one(), Monomial::atom(a))
    }

    pub fn symbol(sym: &Sym) -> Self {
        SuperExpr::atom(Atom::symbol(sym))
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Cq)>) -> Self {
        let mut e = SuperExpr::zero();
        for (m, c) in terms {
            e.add_term(m, c);
        }
        e
    }

    fn add_term(&mut self, m: Monomial, c: Cq) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += &c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Cq)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Structural zero test on the normal form.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial) -> Cq {
        self.terms.get(m).cloned().unwrap_or_else(Cq::zero)
    }

    /// The value if this is a constant.
    pub fn as_constant(&self) -> Option<Cq> {
        match self.terms.len() {
            0 => Some(Cq::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn scale(&self, c: &Cq) -> Self {
        if c.is_zero() {
            return SuperExpr::zero();
        }
        SuperExpr { terms: self.terms.iter().map(|(m, a)| (m.clone(), c * a)).collect() }
    }

    pub fn grade(&self) -> Grade {
        let mut even = false;
        let mut odd = false;
        for m in self.terms.keys() {
            match m.parity() {
                Parity::Even => even = true,
                Parity::Odd => odd = true,
            }
        }
        match (even, odd) {
            (_, false) => Grade::Even,
            (false, true) => Grade::Odd,
            (true, true) => Grade::Mixed,
        }
    }

    /// `(even, odd)` parts.
    pub fn split_parity(&self) -> (SuperExpr, SuperExpr) {
        let mut even = SuperExpr::zero();
        let mut odd = SuperExpr::zero();
        for (m, c) in &self.terms {
            match m.parity() {
                Parity::Even => even.terms.insert(m.clone(), c.clone()),
                Parity::Odd => odd.terms.insert(m.clone(), c.clone()),
            };
        }
        (even, odd)
    }

    /// Split by a predicate on monomials.
    pub fn partition(&self, pred: impl Fn(&Monomial) -> bool) -> (SuperExpr, SuperExpr) {
        let mut yes = SuperExpr::zero();
        let mut no = SuperExpr::zero();
        for (m, c) in &self.terms {
            if pred(m) {
                yes.terms.insert(m.clone(), c.clone());
            } else {
                no.terms.insert(m.clone(), c.clone());
            }
        }
        (yes, no)
    }

    /// Inverse of a nonzero constant or of a single monomial of invertible
    /// even atoms.
    pub fn inverse(&self) -> Result<SuperExpr, ExprError> {
        let not_inv = || ExprError::NotInvertible(self.to_string());
        if self.terms.len() != 1 {
            return Err(not_inv());
        }
        let (m, c) = self.terms.iter().next().expect("one term");
        let c = c.inv().ok_or_else(not_inv)?;
        let mut factors = Vec::with_capacity(m.0.len());
        for (a, k) in &m.0 {
            if !a.is_invertible() {
                return Err(not_inv());
            }
            factors.push((a.clone(), -k));
        }
        Ok(SuperExpr::term(c, Monomial(factors)))
    }

    /// Integer power; negative powers need [`SuperExpr::inverse`].
    pub fn pow(&self, n: i32) -> Result<SuperExpr, ExprError> {
        let base = if n < 0 { self.inverse()? } else { self.clone() };
        let mut acc = SuperExpr::one();
        for _ in 0..n.unsigned_abs() {
            acc = &acc * &base;
        }
        Ok(acc)
    }

    /// `f(arg)` for an even argument, in normal form.
    ///
    /// Nilpotent parameter terms of the argument are Taylor-expanded out, and
    /// `exp(c*L)` for a log parameter `L` with integer `c` becomes `s^c`.
    /// Constant arguments are evaluated where the table knows the value.
    pub fn func(f: Function, arg: &SuperExpr) -> Result<SuperExpr, ExprError> {
        if !arg.split_parity().1.is_zero() {
            return Err(ExprError::OddArgument(arg.to_string()));
        }
        let mut base = SuperExpr::zero();
        let mut nil = SuperExpr::zero();
        let mut scale = SuperExpr::one();
        for (m, c) in &arg.terms {
            let has_param = m.0.iter().any(|(a, _)| {
                matches!(a, Atom::Sym { sym, .. } if sym.kind == SymbolKind::Parameter && (sym.nilpotent || sym.is_odd()))
            });
            if has_param {
                nil.add_term(m.clone(), c.clone());
                continue;
            }
            if f.symbol == FunctionSymbol::Exp {
                if let [(Atom::Sym { sym, index }, 1)] = m.0.as_slice() {
                    if let (Some(s), true, Some(k)) = (&sym.log_base, index.is_empty(), c.as_integer()) {
                        let k: i32 = i32::try_from(k).map_err(|_| ExprError::NotInvertible(arg.to_string()))?;
                        scale = &scale * &SuperExpr::symbol(s).pow(k)?;
                        continue;
                    }
                }
            }
            base.add_term(m.clone(), c.clone());
        }
        let mut out = SuperExpr::zero();
        let mut power = SuperExpr::one();
        let mut factorial = Cq::one();
        let mut n = 0u32;
        while !power.is_zero() {
            let (sign, g) = f.nth_derivative(n);
            let value = SuperExpr::func_atom(g, &base).scale(&(&sign / &factorial));
            out = &out + &(&value * &power);
            n += 1;
            power = &power * &nil;
            factorial = &factorial * &Cq::int(n as i64);
        }
        Ok(&scale * &out)
    }

    fn func_atom(f: Function, arg: &SuperExpr) -> SuperExpr {
        if arg.is_zero() {
            if let Some(v) = f.value_at_zero() {
                return SuperExpr::constant(v);
            }
        }
        SuperExpr::atom(Atom::Func { f, arg: Box::new(arg.clone()) })
    }

    pub fn exp(arg: &SuperExpr) -> Result<SuperExpr, ExprError> {
        SuperExpr::func(Function::exp(), arg)
    }

    pub fn sin(arg: &SuperExpr) -> Result<SuperExpr, ExprError> {
        SuperExpr::func(Function::sin(), arg)
    }

    pub fn cos(arg: &SuperExpr) -> Result<SuperExpr, ExprError> {
        SuperExpr::func(Function::cos(), arg)
    }

    /// Names of all symbols occurring anywhere in the expression.
    pub fn symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            for (a, _) in &m.0 {
                a.collect_symbols(&mut out);
            }
        }
        out
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.symbols().contains(name)
    }

    /// Group terms by the sub-monomial of atoms selected by `key`. Atoms
    /// selected by `key` must sort before all others in each monomial, so
    /// splitting them off needs no reordering sign.
    pub fn group_by_leading(&self, key: impl Fn(&Atom) -> bool) -> BTreeMap<Monomial, SuperExpr> {
        let mut out: BTreeMap<Monomial, SuperExpr> = BTreeMap::new();
        for (m, c) in &self.terms {
            let split = m.0.iter().position(|(a, _)| !key(a)).unwrap_or(m.0.len());
            debug_assert!(m.0[split..].iter().all(|(a, _)| !key(a)));
            let head = Monomial(m.0[..split].to_vec());
            let tail = Monomial(m.0[split..].to_vec());
            out.entry(head).or_default().add_term(tail, c.clone());
        }
        out
    }

    /// Multiply on the left by a monomial of leading atoms.
    pub fn prepend(&self, head: &Monomial) -> SuperExpr {
        &SuperExpr::term(Cq::one(), head.clone()) * self
    }
}

impl<'a> Add<&'a SuperExpr> for &'a SuperExpr {
    type Output = SuperExpr;
    fn add(self, rhs: &SuperExpr) -> SuperExpr {
        let (mut big, small) = if self.terms.len() >= rhs.terms.len() { (self.clone(), rhs) } else { (rhs.clone(), self) };
        for (m, c) in &small.terms {
            big.add_term(m.clone(), c.clone());
        }
        big
    }
}

impl<'a> Sub<&'a SuperExpr> for &'a SuperExpr {
    type Output = SuperExpr;
    fn sub(self, rhs: &SuperExpr) -> SuperExpr {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl<'a> Mul<&'a SuperExpr> for &'a SuperExpr {
    type Output = SuperExpr;
    fn mul(self, rhs: &SuperExpr) -> SuperExpr {
        let mut out = SuperExpr::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                if let Some((negate, m)) = m1.multiply(m2) {
                    let c = c1 * c2;
                    out.add_term(m, if negate { -c } else { c });
                }
            }
        }
        out
    }
}

impl<'a> Neg for &'a SuperExpr {
    type Output = SuperExpr;
    fn neg(self) -> SuperExpr {
        SuperExpr { terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect() }
    }
}

impl Add for SuperExpr {
    type Output = SuperExpr;
    fn add(self, rhs: SuperExpr) -> SuperExpr {
        &self + &rhs
    }
}

impl Sub for SuperExpr {
    type Output = SuperExpr;
    fn sub(self, rhs: SuperExpr) -> SuperExpr {
        &self - &rhs
    }
}

impl Mul for SuperExpr {
    type Output = SuperExpr;
    fn mul(self, rhs: SuperExpr) -> SuperExpr {
        &self * &rhs
    }
}

impl Neg for SuperExpr {
    type Output = SuperExpr;
    fn neg(self) -> SuperExpr {
        -&self
    }
}

impl From<Cq> for SuperExpr {
    fn from(c: Cq) -> Self {
        SuperExpr::constant(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> SymbolTable {
        let mut t = SymbolTable::superspace();
        t.declare_field("a", Parity::Odd, &["xp"]).unwrap();
        t.declare_field("b", Parity::Odd, &["xp"]).unwrap();
        t.declare_field("u", Parity::Even, &["xp"]).unwrap();
        t
    }

    fn s(t: &SymbolTable, n: &str) -> SuperExpr {
        SuperExpr::symbol(t.get(n).unwrap())
    }

    #[test]
    fn odd_symbols_anticommute_and_square_to_zero() {
        let t = table();
        let (a, b) = (s(&t, "a"), s(&t, "b"));
        assert_eq!(&a * &b, -(&b * &a));
        assert!((&a * &a).is_zero());
        let tp = s(&t, "tp");
        assert_eq!(&(&tp * &a) * &b, &(&b * &tp) * &a);
    }

    #[test]
    fn even_powers_merge() {
        let t = table();
        let u = s(&t, "u");
        assert_eq!(&u * &u, u.pow(2).unwrap());
        assert!(u.inverse().is_err());
    }

    #[test]
    fn log_parameters_fold_into_scale() {
        let mut t = table();
        let sp = t.declare(Symbol::scale_parameter("s")).unwrap();
        let l = t.declare(Symbol::log_parameter("L", &sp)).unwrap();
        let u = s(&t, "u");
        let arg = &u + &SuperExpr::symbol(&l).scale(&Cq::int(2));
        let e = SuperExpr::exp(&arg).unwrap();
        let expected = &SuperExpr::symbol(&sp).pow(2).unwrap() * &SuperExpr::exp(&u).unwrap();
        assert_eq!(e, expected);
    }

    #[test]
    fn nilpotent_parameters_linearise_functions() {
        let mut t = table();
        let eps = t.declare(Symbol::parameter("eps", Parity::Even)).unwrap();
        let u = s(&t, "u");
        let e = SuperExpr::sin(&(&u + &SuperExpr::symbol(&eps))).unwrap();
        let expected = &SuperExpr::sin(&u).unwrap() + &(&SuperExpr::symbol(&eps) * &SuperExpr::cos(&u).unwrap());
        assert_eq!(e, expected);
    }

    #[test]
    fn functions_reject_odd_arguments() {
        let t = table();
        assert!(matches!(SuperExpr::exp(&s(&t, "a")), Err(ExprError::OddArgument(_))));
        assert_eq!(SuperExpr::exp(&SuperExpr::zero()).unwrap(), SuperExpr::one());
    }
}

//! Graded left derivations and the superspace operators built from them.

use std::fmt;

use crate::coeff::Cq;
use crate::grassmann::Parity;

use super::{Atom, ExprError, Monomial, SuperExpr, Sym, SymbolKind, SymbolTable};

/// A left derivation of parity equal to that of its symbol.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Partial {
    /// Total derivative along a coordinate; fields depending on it acquire a
    /// derivative index.
    Coordinate(Sym),
    /// Partial derivative with respect to a plain symbol, all other atoms
    /// (including derivatives of that symbol) held fixed.
    Variable(Sym),
}

impl Partial {
    pub fn parity(&self) -> Parity {
        match self {
            Partial::Coordinate(s) | Partial::Variable(s) => s.parity,
        }
    }

    fn on_atom(&self, atom: &Atom) -> SuperExpr {
        match (self, atom) {
            (Partial::Coordinate(c), Atom::Sym { sym, index }) => {
                if sym == c {
                    return SuperExpr::one();
                }
                if sym.kind != SymbolKind::Field || !sym.depends_on(&c.name) {
                    return SuperExpr::zero();
                }
                match index.with(c) {
                    None => SuperExpr::zero(),
                    Some((negate, index)) => {
                        let e = SuperExpr::atom(Atom::Sym { sym: sym.clone(), index });
                        if negate {
                            -e
                        } else {
                            e
                        }
                    }
                }
            }
            (Partial::Variable(v), Atom::Sym { sym, index }) => {
                if sym == v && index.is_empty() {
                    SuperExpr::one()
                } else {
                    SuperExpr::zero()
                }
            }
            (_, Atom::Func { f, arg }) => {
                let darg = self.apply(arg);
                if darg.is_zero() {
                    return SuperExpr::zero();
                }
                let (sign, g) = f.derivative();
                let outer = SuperExpr::func(g, arg).expect("argument already checked even");
                (&darg * &outer).scale(&sign)
            }
        }
    }

    /// Graded Leibniz rule, term by term.
    pub fn apply(&self, e: &SuperExpr) -> SuperExpr {
        let odd_op = self.parity().is_odd();
        let mut out = SuperExpr::zero();
        for (m, c) in e.terms() {
            let factors = m.factors();
            let mut prefix_odd = false;
            for (i, (atom, k)) in factors.iter().enumerate() {
                let da = self.on_atom(atom);
                if !da.is_zero() {
                    let prefix = SuperExpr::term(c.clone(), Monomial(factors[..i].to_vec()));
                    let rest_power = if *k == 1 {
                        SuperExpr::one()
                    } else {
                        SuperExpr::term(Cq::one(), Monomial(vec![(atom.clone(), k - 1)]))
                    };
                    let suffix = SuperExpr::term(Cq::one(), Monomial(factors[i + 1..].to_vec()));
                    let mut piece = &(&prefix * &da.scale(&Cq::int(*k as i64))) * &(&rest_power * &suffix);
                    if odd_op && prefix_odd {
                        piece = -piece;
                    }
                    out = &out + &piece;
                }
                if atom.is_odd() {
                    prefix_odd = !prefix_odd;
                }
            }
        }
        out
    }
}

/// Differential operators on superspace.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SuperOperator {
    /// Partial derivative in a coordinate.
    Partial(Sym),
    /// `d_theta - I*theta*d_x`.
    Covariant { theta: Sym, x: Sym },
    /// `d_theta + I*theta*d_x`.
    Conjugate { theta: Sym, x: Sym },
}

impl SuperOperator {
    /// Operator by name: `Dp`, `Dm`, `Jp`, `Jm` or `d<coordinate>`.
    pub fn parse(name: &str, table: &SymbolTable) -> Result<SuperOperator, ExprError> {
        let pair = |chiral: &str| -> Result<(Sym, Sym), ExprError> {
            let ss = table.superspace_coords().ok_or(ExprError::NoSuperspace)?;
            Ok(if chiral == "p" { (ss.tp, ss.xp) } else { (ss.tm, ss.xm) })
        };
        match name {
            "Dp" | "Dm" => {
                let (theta, x) = pair(&name[1..])?;
                Ok(SuperOperator::Covariant { theta, x })
            }
            "Jp" | "Jm" => {
                let (theta, x) = pair(&name[1..])?;
                Ok(SuperOperator::Conjugate { theta, x })
            }
            _ => name
                .strip_prefix('d')
                .and_then(|c| table.get(c))
                .filter(|s| s.kind == SymbolKind::Coordinate)
                .map(|s| SuperOperator::Partial(s.clone()))
                .ok_or_else(|| ExprError::UnknownOperator(name.to_string())),
        }
    }

    pub fn parity(&self) -> Parity {
        match self {
            SuperOperator::Partial(c) => c.parity,
            SuperOperator::Covariant { theta, .. } | SuperOperator::Conjugate { theta, .. } => theta.parity,
        }
    }

    pub fn apply(&self, e: &SuperExpr) -> SuperExpr {
        match self {
            SuperOperator::Partial(c) => Partial::Coordinate(c.clone()).apply(e),
            SuperOperator::Covariant { theta, x } | SuperOperator::Conjugate { theta, x } => {
                let dt = Partial::Coordinate(theta.clone()).apply(e);
                let dx = Partial::Coordinate(x.clone()).apply(e);
                let i = if matches!(self, SuperOperator::Covariant { .. }) { -Cq::i() } else { Cq::i() };
                &dt + &(&SuperExpr::symbol(theta) * &dx).scale(&i)
            }
        }
    }
}

impl fmt::Display for SuperOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let chirality = |x: &Sym| if x.name == "xp" { "p" } else { "m" };
        match self {
            SuperOperator::Partial(c) => write!(f, "d{}", c.name),
            SuperOperator::Covariant { x, .. } => write!(f, "D{}", chirality(x)),
            SuperOperator::Conjugate { x, .. } => write!(f, "J{}", chirality(x)),
        }
    }
}

/// Residual of `(a∘b ± b∘a)(test) - rhs(test)`, using the anticommutator
/// when both operators are odd and the commutator otherwise. `rhs` is a
/// linear combination of operators.
pub fn compose_check(
    a: &SuperOperator,
    b: &SuperOperator,
    rhs: &[(Cq, SuperOperator)],
    test: &SuperExpr,
) -> SuperExpr {
    let ab = a.apply(&b.apply(test));
    let ba = b.apply(&a.apply(test));
    let mut out = if a.parity().is_odd() && b.parity().is_odd() { &ab + &ba } else { &ab - &ba };
    for (c, op) in rhs {
        out = &out - &op.apply(test).scale(c);
    }
    out
}

//! Theta-component expansions.
//!
//! Two independent routes: [`to_grassmann`] maps an expression into the
//! Grassmann kernel with `tp = xi1`, `tm = xi2` and classical component
//! coefficients, differentiating componentwise; [`to_explicit`] rewrites
//! superfields as explicit `theta` polynomials inside the expression algebra
//! itself and Taylor-expands functions there.

use crate::coeff::Cq;
use crate::func::Function;
use crate::grassmann::{GeneratorSet, GradedScalar, GrassmannNumber};

use super::{Atom, ExprError, Partial, SuperExpr, SuperOperator, Superspace, Sym, SymbolKind, SymbolTable};

impl GradedScalar for SuperExpr {
    fn zero() -> Self {
        SuperExpr::zero()
    }
    fn one() -> Self {
        SuperExpr::one()
    }
    fn from_cq(c: Cq) -> Self {
        SuperExpr::constant(c)
    }
    fn is_zero(&self) -> bool {
        SuperExpr::is_zero(self)
    }
    fn split_parity(&self) -> (Self, Self) {
        SuperExpr::split_parity(self)
    }
    fn inverse(&self) -> Option<Self> {
        SuperExpr::inverse(self).ok()
    }
    fn apply_function(f: &Function, body: &Self) -> Option<Self> {
        SuperExpr::func(f.clone(), body).ok()
    }
}

type Components = GrassmannNumber<SuperExpr>;

fn theta_dependent(sym: &Sym, ss: &Superspace) -> bool {
    sym.kind == SymbolKind::Field && (sym.depends_on(&ss.tp.name) || sym.depends_on(&ss.tm.name))
}

fn component_symbols(sym: &Sym, table: &SymbolTable) -> Result<[Sym; 4], ExprError> {
    let names = sym.components.as_ref().ok_or_else(|| ExprError::MissingComponentExpansion(sym.name.clone()))?;
    let mut out = Vec::with_capacity(4);
    for n in names {
        out.push(table.lookup(n)?.clone());
    }
    Ok(out.try_into().expect("four components"))
}

/// Left derivative in generator `j` (1-based).
fn xi_derivative(g: &Components, j: usize) -> Result<Components, ExprError> {
    let terms = g.terms().filter_map(|(s, a)| {
        let idx: Vec<usize> = s.indices().collect();
        let pos = idx.iter().position(|&i| i == j)?;
        let rest: Vec<usize> = idx.iter().copied().filter(|&i| i != j).collect();
        let a = if pos % 2 == 1 { -a } else { a.clone() };
        Some((GeneratorSet::from_indices(&rest), a))
    });
    Ok(Components::from_terms(g.size(), terms.collect::<Vec<_>>())?)
}

fn map_coefficients(g: &Components, f: impl Fn(&SuperExpr) -> SuperExpr) -> Result<Components, ExprError> {
    let terms: Vec<_> = g.terms().map(|(s, a)| (*s, f(a))).collect();
    Ok(Components::from_terms(g.size(), terms)?)
}

fn atom_components(atom: &Atom, ss: &Superspace, table: &SymbolTable) -> Result<Components, ExprError> {
    match atom {
        Atom::Sym { sym, .. } if *sym == ss.tp => Ok(Components::generator(2, 1)?),
        Atom::Sym { sym, .. } if *sym == ss.tm => Ok(Components::generator(2, 2)?),
        Atom::Sym { sym, index } if theta_dependent(sym, ss) => {
            let [c0, c1, c2, c3] = component_symbols(sym, table)?;
            let mut g = Components::from_terms(
                2,
                [
                    (GeneratorSet::EMPTY, SuperExpr::symbol(&c0)),
                    (GeneratorSet::single(1), SuperExpr::symbol(&c1)),
                    (GeneratorSet::single(2), SuperExpr::symbol(&c2)),
                    (GeneratorSet::from_indices(&[1, 2]), SuperExpr::symbol(&c3)),
                ],
            )?;
            for (c, n) in index.entries() {
                for _ in 0..*n {
                    g = if *c == ss.tp {
                        xi_derivative(&g, 1)?
                    } else if *c == ss.tm {
                        xi_derivative(&g, 2)?
                    } else {
                        map_coefficients(&g, |a| Partial::Coordinate(c.clone()).apply(a))?
                    };
                }
            }
            Ok(g)
        }
        Atom::Sym { .. } => Ok(Components::scalar(2, SuperExpr::atom(atom.clone()))?),
        Atom::Func { f, arg } => Ok(to_grassmann(arg, table)?.apply_even_function(f)?),
    }
}

/// Expression as a two-generator Grassmann element over component fields.
pub fn to_grassmann(e: &SuperExpr, table: &SymbolTable) -> Result<Components, ExprError> {
    let ss = table.superspace_coords().ok_or(ExprError::NoSuperspace)?;
    let mut out = Components::zero(2)?;
    for (m, c) in e.terms() {
        let mut acc = Components::scalar(2, SuperExpr::constant(c.clone()))?;
        for (a, k) in m.factors() {
            let g = atom_components(a, &ss, table)?;
            let g = if *k < 0 { g.invert()? } else { g };
            acc = acc.multiply(&g.pow(k.unsigned_abs())?)?;
        }
        out = out.add(&acc)?;
    }
    Ok(out)
}

/// A superspace operator acting on a two-generator expansion: `tp`, `tm`
/// become generator derivatives, even coordinates act on the coefficients.
pub fn apply_to_components(op: &SuperOperator, g: &Components, table: &SymbolTable) -> Result<Components, ExprError> {
    let ss = table.superspace_coords().ok_or(ExprError::NoSuperspace)?;
    let partial = |c: &Sym, g: &Components| -> Result<Components, ExprError> {
        if *c == ss.tp {
            xi_derivative(g, 1)
        } else if *c == ss.tm {
            xi_derivative(g, 2)
        } else {
            map_coefficients(g, |a| Partial::Coordinate(c.clone()).apply(a))
        }
    };
    match op {
        SuperOperator::Partial(c) => partial(c, g),
        SuperOperator::Covariant { theta, x } | SuperOperator::Conjugate { theta, x } => {
            let idx = if *theta == ss.tp { 1 } else { 2 };
            let i = if matches!(op, SuperOperator::Covariant { .. }) { -Cq::i() } else { Cq::i() };
            let shifted = Components::generator(2, idx)?.multiply(&partial(x, g)?)?;
            Ok(partial(theta, g)?.add(&shifted.scale(&SuperExpr::constant(i)))?)
        }
    }
}

/// The four coefficients of `1, tp, tm, tp*tm`.
pub fn expand_components(e: &SuperExpr, table: &SymbolTable) -> Result<[SuperExpr; 4], ExprError> {
    let g = to_grassmann(e, table)?;
    Ok([
        g.coefficient(GeneratorSet::EMPTY),
        g.coefficient(GeneratorSet::single(1)),
        g.coefficient(GeneratorSet::single(2)),
        g.coefficient(GeneratorSet::from_indices(&[1, 2])),
    ])
}

/// `c0 + tp*c1 + tm*c2 + tp*tm*c3`.
pub fn from_components(c: &[SuperExpr; 4], table: &SymbolTable) -> Result<SuperExpr, ExprError> {
    let ss = table.superspace_coords().ok_or(ExprError::NoSuperspace)?;
    let tp = SuperExpr::symbol(&ss.tp);
    let tm = SuperExpr::symbol(&ss.tm);
    Ok(&(&c[0] + &(&tp * &c[1])) + &(&(&tm * &c[2]) + &(&(&tp * &tm) * &c[3])))
}

fn has_theta(e: &SuperExpr, ss: &Superspace) -> bool {
    let m = e.symbols();
    m.contains(&ss.tp.name) || m.contains(&ss.tm.name)
}

/// `f(a0 + n) = sum_k f^(k)(a0) n^k / k!` with `a0` the theta-free part.
fn theta_taylor(f: &Function, arg: &SuperExpr, ss: &Superspace) -> Result<SuperExpr, ExprError> {
    let (nil, base) = arg.partition(|m| {
        m.factors().iter().any(|(a, _)| matches!(a, Atom::Sym { sym, .. } if *sym == ss.tp || *sym == ss.tm))
    });
    let mut out = SuperExpr::zero();
    let mut power = SuperExpr::one();
    let mut factorial = Cq::one();
    let mut k = 0u32;
    while !power.is_zero() {
        let (sign, g) = f.nth_derivative(k);
        out = &out + &(&SuperExpr::func(g, &base)? * &power).scale(&(&sign / &factorial));
        k += 1;
        power = &power * &nil;
        factorial = &factorial * &Cq::int(k as i64);
    }
    Ok(out)
}

/// Rewrite superfields as explicit theta polynomials in their components.
pub fn to_explicit(e: &SuperExpr, table: &SymbolTable) -> Result<SuperExpr, ExprError> {
    let ss = table.superspace_coords().ok_or(ExprError::NoSuperspace)?;
    e.map_atoms(&mut |a| match a {
        Atom::Sym { sym, index } if theta_dependent(sym, &ss) => {
            let comps = component_symbols(sym, table)?.map(|c| SuperExpr::symbol(&c));
            let mut x = from_components(&comps, table)?;
            for (c, n) in index.entries() {
                for _ in 0..*n {
                    x = Partial::Coordinate(c.clone()).apply(&x);
                }
            }
            Ok(Some(x))
        }
        Atom::Sym { .. } => Ok(None),
        Atom::Func { f, arg } => {
            let arg = to_explicit(arg, table)?;
            if has_theta(&arg, &ss) {
                Ok(Some(theta_taylor(f, &arg, &ss)?))
            } else {
                Ok(Some(SuperExpr::func(f.clone(), &arg)?))
            }
        }
    })
}

/// Theta expansion of `f(e)` for an even expression `e`.
pub fn expand_function(f: &Function, e: &SuperExpr, table: &SymbolTable) -> Result<SuperExpr, ExprError> {
    let ss = table.superspace_coords().ok_or(ExprError::NoSuperspace)?;
    if !e.split_parity().1.is_zero() {
        return Err(ExprError::OddArgument(e.to_string()));
    }
    theta_taylor(f, &to_explicit(e, table)?, &ss)
}

//! Zero recognition modulo exponential and trigonometric identities.

use crate::coeff::Cq;
use crate::func::{Function, FunctionSymbol};

use super::{Atom, ExprError, Monomial, SuperExpr};

impl SuperExpr {
    /// Rewrite `sin` and `cos` through `exp` and merge the exponentials of
    /// each monomial into one. Structural equality after this rewrite decides
    /// equality modulo the identities of `exp`, `sin` and `cos`.
    pub fn exp_normal_form(&self) -> SuperExpr {
        let rewritten = self
            .map_atoms(&mut |a| match a {
                Atom::Func { f, arg } => {
                    let arg = arg.exp_normal_form();
                    Ok(Some(trig_to_exp(f, &arg)?))
                }
                Atom::Sym { .. } => Ok(None),
            })
            .expect("rewriting preserves even arguments");
        merge_exponentials(&rewritten)
    }

    /// Exact zero test: structural zero after [`SuperExpr::exp_normal_form`].
    pub fn is_identically_zero(&self) -> bool {
        self.is_zero() || self.exp_normal_form().is_zero()
    }
}

fn trig_to_exp(f: &Function, arg: &SuperExpr) -> Result<SuperExpr, ExprError> {
    let i_arg = arg.scale(&Cq::i());
    match f.symbol {
        FunctionSymbol::Sin => {
            let d = &SuperExpr::exp(&i_arg)? - &SuperExpr::exp(&-&i_arg)?;
            Ok(d.scale(&(Cq::int(2) * Cq::i()).inv().expect("nonzero")))
        }
        FunctionSymbol::Cos => {
            let s = &SuperExpr::exp(&i_arg)? + &SuperExpr::exp(&-&i_arg)?;
            Ok(s.scale(&Cq::frac(1, 2)))
        }
        _ => SuperExpr::func(f.clone(), arg),
    }
}

fn merge_exponentials(e: &SuperExpr) -> SuperExpr {
    let mut out = SuperExpr::zero();
    for (m, c) in e.terms() {
        let mut exponent = SuperExpr::zero();
        let mut rest = Vec::new();
        for (a, k) in m.factors() {
            match a {
                Atom::Func { f, arg } if f.symbol == FunctionSymbol::Exp => {
                    exponent = &exponent + &arg.scale(&Cq::int(*k as i64));
                }
                _ => rest.push((a.clone(), *k)),
            }
        }
        let merged = SuperExpr::exp(&exponent).expect("sum of even arguments");
        out = &out + &(&SuperExpr::term(c.clone(), Monomial(rest)) * &merged);
    }
    out
}

#[cfg(test)]
mod tests {
    use crate::grassmann::Parity;
    use crate::superexpr::{parse_expr, SymbolTable};

    fn table() -> SymbolTable {
        let mut t = SymbolTable::superspace();
        t.declare_field("u", Parity::Even, &["xp", "xm"]).unwrap();
        t.declare_field("v", Parity::Even, &["xp", "xm"]).unwrap();
        t
    }

    #[test]
    fn pythagoras_and_addition_formulas() {
        let t = table();
        for src in [
            "sin(u)^2 + cos(u)^2 - 1",
            "sin(u + v) - sin(u)*cos(v) - cos(u)*sin(v)",
            "exp(u)*exp(-u) - 1",
            "sin(2*u) - 2*sin(u)*cos(u)",
            "exp(u + v) - exp(u)*exp(v)",
        ] {
            let e = parse_expr(src, &t).unwrap();
            assert!(!e.is_zero(), "{src} should not be a structural zero");
            assert!(e.is_identically_zero(), "{src}");
        }
        assert!(!parse_expr("sin(u)^2 - cos(u)^2", &t).unwrap().is_identically_zero());
    }
}

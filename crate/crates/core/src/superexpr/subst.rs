//! Atom-wise rewriting and symbol substitution.

use std::collections::BTreeMap;

use crate::grassmann::Grade;

use super::{Atom, ExprError, Partial, SuperExpr};

impl SuperExpr {
    /// Rebuild the expression with every atom replaced by `f(atom)`.
    /// Function arguments are rewritten first and the function reapplied.
    pub fn map_atoms<F>(&self, f: &mut F) -> Result<SuperExpr, ExprError>
    where
        F: FnMut(&Atom) -> Result<Option<SuperExpr>, ExprError>,
    {
        let mut out = SuperExpr::zero();
        for (m, c) in self.terms() {
            let mut acc = SuperExpr::constant(c.clone());
            for (a, k) in m.factors() {
                let replaced = match f(a)? {
                    Some(r) => r,
                    None => match a {
                        Atom::Func { f: func, arg } => SuperExpr::func(func.clone(), &arg.map_atoms(f)?)?,
                        Atom::Sym { .. } => SuperExpr::atom(a.clone()),
                    },
                };
                acc = &acc * &replaced.pow(*k)?;
                if acc.is_zero() {
                    break;
                }
            }
            out = &out + &acc;
        }
        Ok(out)
    }

    /// Replace symbols by expressions. A field atom carrying a derivative
    /// index is replaced by the corresponding derivative of its image.
    /// Each image must have the parity of the symbol it replaces.
    pub fn substitute(&self, map: &BTreeMap<String, SuperExpr>) -> Result<SuperExpr, ExprError> {
        for (name, e) in map {
            if let Some(sym) = self.find_symbol(name) {
                let ok = match e.grade() {
                    Grade::Even => !sym.is_odd() || e.is_zero(),
                    Grade::Odd => sym.is_odd(),
                    Grade::Mixed => false,
                };
                if !ok {
                    return Err(ExprError::ParityMismatch { name: name.clone(), expected: sym.parity });
                }
            }
        }
        self.map_atoms(&mut |a| match a {
            Atom::Sym { sym, index } => match map.get(&sym.name) {
                None => Ok(None),
                Some(image) => {
                    let mut e = image.clone();
                    for (c, n) in index.entries() {
                        for _ in 0..*n {
                            e = Partial::Coordinate(c.clone()).apply(&e);
                        }
                    }
                    Ok(Some(e))
                }
            },
            Atom::Func { .. } => Ok(None),
        })
    }

    /// Split an expression linear in marker symbols into `Σ c_k·m_k`, with
    /// each coefficient written to the left of its marker. Every term must
    /// contain exactly one marker, to the first power.
    pub fn split_by_marker(&self, is_marker: impl Fn(&super::Sym) -> bool) -> Result<Vec<(super::Sym, SuperExpr)>, ExprError> {
        let mut out: BTreeMap<super::Sym, SuperExpr> = BTreeMap::new();
        for (m, c) in self.terms() {
            let factors = m.factors();
            let markers: Vec<usize> = factors
                .iter()
                .enumerate()
                .filter(|(_, (a, _))| matches!(a, Atom::Sym { sym, .. } if is_marker(sym)))
                .map(|(i, _)| i)
                .collect();
            let [pos] = markers.as_slice() else {
                return Err(ExprError::NotLinear(SuperExpr::term(c.clone(), m.clone()).to_string()));
            };
            let (atom, k) = &factors[*pos];
            let Atom::Sym { sym, index } = atom else { unreachable!() };
            if *k != 1 || !index.is_empty() {
                return Err(ExprError::NotLinear(SuperExpr::term(c.clone(), m.clone()).to_string()));
            }
            let mut rest = factors[..*pos].to_vec();
            rest.extend_from_slice(&factors[pos + 1..]);
            let after_odd = factors[pos + 1..].iter().filter(|(a, _)| a.is_odd()).count() % 2 == 1;
            let c = if sym.is_odd() && after_odd { -c.clone() } else { c.clone() };
            let e = out.entry(sym.clone()).or_default();
            *e = &*e + &SuperExpr::term(c, super::Monomial(rest));
        }
        Ok(out.into_iter().filter(|(_, c)| !c.is_zero()).collect())
    }

    fn find_symbol(&self, name: &str) -> Option<super::Sym> {
        fn walk(e: &SuperExpr, name: &str) -> Option<super::Sym> {
            for (m, _) in e.terms() {
                for (a, _) in m.factors() {
                    match a {
                        Atom::Sym { sym, .. } if sym.name == name => return Some(sym.clone()),
                        Atom::Func { arg, .. } => {
                            if let Some(s) = walk(arg, name) {
                                return Some(s);
                            }
                        }
                        _ => {}
                    }
                }
            }
            None
        }
        walk(self, name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::Parity;
    use crate::superexpr::{parse_expr, SymbolTable};

    #[test]
    fn substitution_carries_derivatives() {
        let mut t = SymbolTable::superspace();
        t.declare_field("u", Parity::Even, &["xp", "xm"]).unwrap();
        t.declare_field("v", Parity::Even, &["xp", "xm"]).unwrap();
        t.declare_field("H", Parity::Odd, &["xp", "xm", "tp", "tm"]).unwrap();
        let e = parse_expr("dxp(u) + exp(u)", &t).unwrap();
        let map = BTreeMap::from([("u".to_string(), parse_expr("v^2", &t).unwrap())]);
        let got = e.substitute(&map).unwrap();
        assert_eq!(got, parse_expr("2*v*dxp(v) + exp(v^2)", &t).unwrap());

        let bad = BTreeMap::from([("u".to_string(), parse_expr("H", &t).unwrap())]);
        assert!(matches!(e.substitute(&bad), Err(ExprError::ParityMismatch { .. })));
    }

    #[test]
    fn marker_split_moves_markers_right() {
        let mut t = SymbolTable::superspace();
        t.declare_field("R", Parity::Odd, &["xp", "xm", "tp", "tm"]).unwrap();
        t.declare_field("Q", Parity::Even, &["xp", "xm", "tp", "tm"]).unwrap();
        t.declare(crate::superexpr::Symbol::constant("dR", Parity::Odd)).unwrap();
        t.declare(crate::superexpr::Symbol::constant("dQ", Parity::Even)).unwrap();
        let e = parse_expr("R*dR + tp*Q*dR - 2*Q*dQ", &t).unwrap();
        let parts = e.split_by_marker(|s| s.name.starts_with('d')).unwrap();
        let get = |n: &str| parts.iter().find(|(s, _)| s.name == n).unwrap().1.clone();
        assert_eq!(get("dR"), parse_expr("R + tp*Q", &t).unwrap());
        assert_eq!(get("dQ"), parse_expr("-2*Q", &t).unwrap());
        assert!(parse_expr("Q", &t).unwrap().split_by_marker(|s| s.name.starts_with('d')).is_err());
    }
}

use std::collections::BTreeMap;

use crate::coeff::Cq;
use crate::grassmann::Parity;
use crate::linalg::{SpanBasis, SparseVec};
use crate::report::Check;
use crate::superexpr::{Atom, Monomial, Partial, SuperExpr, SuperOperator, Sym, Symbol, SymbolKind, SymbolTable};

use super::field::SuperVectorField;
use super::AlgError;

/// How a generator is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlowKind {
    /// Diagonal affine even field `X^y = a·y + b`, integer `a`; group
    /// parameter `s` with `y ↦ s^a·y + b(s^a − 1)/a`, or `y ↦ y + b·log s`.
    Scaling,
    /// Odd field; `y ↦ y + η·X^y` is the whole flow since `η² = 0`.
    OddShift,
    /// Any other even field, to first order: `y ↦ y + ε·X^y` with `ε² = 0`.
    Infinitesimal,
}

/// A symbol given as a function of another: `alias = exp(base)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Alias {
    pub alias: Sym,
    pub base: Sym,
}

/// Rewrite a field acting on an alias `U = exp(u)` as one acting on `u`.
pub fn resolve_aliases(x: &SuperVectorField, aliases: &[Alias]) -> Result<SuperVectorField, AlgError> {
    let mut out = x.clone();
    for a in aliases {
        let exp_u = SuperExpr::exp(&SuperExpr::symbol(&a.base))?;
        let map = BTreeMap::from([(a.alias.name.clone(), exp_u.clone())]);
        let mut comps: BTreeMap<Sym, SuperExpr> = BTreeMap::new();
        for (t, c) in out.components() {
            let c = c.substitute(&map)?;
            if *t == a.alias {
                let inv = SuperExpr::exp(&-&SuperExpr::symbol(&a.base))?;
                let e = comps.entry(a.base.clone()).or_default();
                *e = &*e + &(&c * &inv);
            } else {
                let e = comps.entry(t.clone()).or_default();
                *e = &*e + &c;
            }
        }
        let comps = comps.into_iter().map(|(t, c)| (t, c.exp_normal_form()));
        out = SuperVectorField::new(out.parity(), comps)?;
    }
    Ok(out)
}

type Matrix = Vec<Vec<SuperExpr>>;

fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(SuperExpr::zero(), |acc, k| &acc + &(&a[i][k] * &b[k][j])))
                .collect()
        })
        .collect()
}

fn mat_is_zero(a: &Matrix) -> bool {
    a.iter().flatten().all(SuperExpr::is_zero)
}

fn is_nilpotent_part(m: &Monomial) -> bool {
    m.factors().iter().any(|(a, _)| {
        matches!(a, Atom::Sym { sym, .. } if sym.kind == SymbolKind::Parameter && (sym.nilpotent || sym.is_odd()))
    })
}

/// Read `X^y = a·y + b` with integer `a` and constant `b`.
fn affine_diagonal(target: &Sym, c: &SuperExpr) -> Option<(i32, Cq)> {
    let mut a = 0i32;
    let mut b = Cq::zero();
    for (m, k) in c.terms() {
        match m.factors() {
            [] => b = k.clone(),
            [(Atom::Sym { sym, index }, 1)] if sym == target && index.is_empty() => {
                a = i32::try_from(k.as_integer()?).ok()?;
            }
            _ => return None,
        }
    }
    Some((a, b))
}

/// The one-parameter flow of a vector field, acting on expressions by
/// change of variables.
#[derive(Clone, Debug)]
pub struct Flow {
    pub kind: FlowKind,
    pub parameter: Sym,
    /// `log s` for scaling flows.
    pub log_parameter: Option<Sym>,
    coordinates: Vec<Sym>,
    images: BTreeMap<Sym, SuperExpr>,
    /// `∂̃_b = Σ_a inverse[b][a] ∂_a`.
    inverse: Matrix,
}

impl Flow {
    pub fn new(x: &SuperVectorField, parameter: &str, coordinates: &[Sym]) -> Result<Flow, AlgError> {
        let mut images = BTreeMap::new();
        let scaling: Option<Vec<(Sym, i32, Cq)>> = if x.parity().is_odd() {
            None
        } else {
            x.components().map(|(t, c)| affine_diagonal(t, c).map(|(a, b)| (t.clone(), a, b))).collect()
        };
        let (kind, param, log) = if let Some(diag) = scaling {
            let s = Symbol::scale_parameter(parameter);
            let l = Symbol::log_parameter(&format!("log{parameter}"), &s);
            let se = SuperExpr::symbol(&s);
            for (t, a, b) in diag {
                let y = SuperExpr::symbol(&t);
                let image = if a == 0 {
                    &y + &SuperExpr::symbol(&l).scale(&b)
                } else {
                    let sa = se.pow(a)?;
                    let shift = (&sa - &SuperExpr::one()).scale(&(&b / &Cq::int(a as i64)));
                    &(&sa * &y) + &shift
                };
                images.insert(t, image);
            }
            (FlowKind::Scaling, s, Some(l))
        } else {
            let (kind, p) = if x.parity().is_odd() {
                (FlowKind::OddShift, Symbol::parameter(parameter, Parity::Odd))
            } else {
                (FlowKind::Infinitesimal, Symbol::parameter(parameter, Parity::Even))
            };
            let pe = SuperExpr::symbol(&p);
            for (t, c) in x.components() {
                images.insert(t.clone(), &SuperExpr::symbol(t) + &(&pe * c));
            }
            (kind, p, None)
        };
        for (t, image) in &images {
            if t.kind == SymbolKind::Coordinate {
                if let Some(bad) = image.symbols().into_iter().find(|n| !coordinates.iter().any(|c| &c.name == n) && *n != param.name && Some(n) != log.as_ref().map(|l| &l.name)) {
                    return Err(AlgError::UnsupportedGeneratorShape(format!("image of {} depends on {bad}", t.name)));
                }
            }
        }
        let mut flow = Flow { kind, parameter: param, log_parameter: log, coordinates: coordinates.to_vec(), images, inverse: Vec::new() };
        flow.inverse = flow.inverse_jacobian()?;
        Ok(flow)
    }

    pub fn image(&self, target: &Sym) -> SuperExpr {
        self.images.get(target).cloned().unwrap_or_else(|| SuperExpr::symbol(target))
    }

    /// `M⁻¹` for `M_ab = ∂_a x̃^b`, as `Σ_k (−D⁻¹N)^k D⁻¹` with `D` the
    /// parameter-invertible diagonal and `N` nilpotent.
    fn inverse_jacobian(&self) -> Result<Matrix, AlgError> {
        let n = self.coordinates.len();
        let mut d_inv = vec![vec![SuperExpr::zero(); n]; n];
        let mut nil = vec![vec![SuperExpr::zero(); n]; n];
        for (a, ca) in self.coordinates.iter().enumerate() {
            for (b, cb) in self.coordinates.iter().enumerate() {
                let m = Partial::Variable(ca.clone()).apply(&self.image(cb));
                let (nilpart, base) = m.partition(is_nilpotent_part);
                nil[a][b] = nilpart;
                if a == b {
                    d_inv[a][b] = base.inverse().map_err(|_| AlgError::UnsupportedGeneratorShape(format!("flow of {} is not invertible", ca.name)))?;
                } else if !base.is_zero() {
                    return Err(AlgError::UnsupportedGeneratorShape(format!("coordinates {} and {} mix", ca.name, cb.name)));
                }
            }
        }
        let step: Matrix = mat_mul(&d_inv, &nil).into_iter().map(|r| r.into_iter().map(|e| -e).collect()).collect();
        let mut term = d_inv.clone();
        let mut sum = d_inv;
        for _ in 0..=2 * n + 2 {
            term = mat_mul(&step, &term);
            if mat_is_zero(&term) {
                return Ok(sum);
            }
            for (r, t) in sum.iter_mut().zip(&term) {
                for (e, x) in r.iter_mut().zip(t) {
                    *e = &*e + x;
                }
            }
        }
        Err(AlgError::UnsupportedGeneratorShape("jacobian correction is not nilpotent".into()))
    }

    fn coordinate_index(&self, c: &Sym) -> Option<usize> {
        self.coordinates.iter().position(|x| x == c)
    }

    /// The derivative along the new coordinate `c`, in old variables.
    pub fn partial(&self, c: &Sym, f: &SuperExpr) -> SuperExpr {
        let Some(b) = self.coordinate_index(c) else { return SuperExpr::zero() };
        let mut out = SuperExpr::zero();
        for (a, ca) in self.coordinates.iter().enumerate() {
            let k = &self.inverse[b][a];
            if k.is_zero() {
                continue;
            }
            out = &out + &(k * &Partial::Coordinate(ca.clone()).apply(f));
        }
        out
    }

    /// An expression in the new variables, rewritten in the old ones.
    pub fn transform(&self, e: &SuperExpr) -> Result<SuperExpr, AlgError> {
        let out = e.map_atoms(&mut |a| match a {
            Atom::Sym { sym, index } if sym.kind == SymbolKind::Coordinate => {
                Ok(Some(self.images.get(sym).cloned().unwrap_or_else(|| SuperExpr::atom(a.clone()))))
            }
            Atom::Sym { sym, index } if sym.kind == SymbolKind::Field => {
                if index.is_empty() && !self.images.contains_key(sym) && !self.moves_coordinates() {
                    return Ok(None);
                }
                let mut v = self.image(sym);
                for (c, n) in index.entries() {
                    for _ in 0..*n {
                        v = self.partial(c, &v);
                    }
                }
                Ok(Some(v))
            }
            _ => Ok(None),
        })?;
        Ok(out.exp_normal_form())
    }

    fn moves_coordinates(&self) -> bool {
        self.images.keys().any(|t| t.kind == SymbolKind::Coordinate)
    }

    /// Coefficients of an operator over coordinate partials.
    fn operator_coefficients(op: &SuperOperator) -> Vec<(Sym, SuperExpr)> {
        match op {
            SuperOperator::Partial(c) => vec![(c.clone(), SuperExpr::one())],
            SuperOperator::Covariant { theta, x } => {
                vec![(theta.clone(), SuperExpr::one()), (x.clone(), (&SuperExpr::i() * &SuperExpr::symbol(theta)).scale(&-Cq::one()))]
            }
            SuperOperator::Conjugate { theta, x } => {
                vec![(theta.clone(), SuperExpr::one()), (x.clone(), &SuperExpr::i() * &SuperExpr::symbol(theta))]
            }
        }
    }

    /// The factor `κ` with `op` in new coordinates equal to `κ·op`.
    pub fn operator_factor(&self, op: &SuperOperator) -> Result<SuperExpr, AlgError> {
        let old = Self::operator_coefficients(op);
        let mut new: Vec<SuperExpr> = vec![SuperExpr::zero(); self.coordinates.len()];
        for (b, c) in &old {
            let bi = self.coordinate_index(b).ok_or_else(|| AlgError::NotATarget(b.name.clone()))?;
            let c = self.transform(c)?;
            for (a, slot) in new.iter_mut().enumerate() {
                *slot = &*slot + &(&c * &self.inverse[bi][a]);
            }
        }
        let (lead, _) = &old[0];
        let kappa = new[self.coordinate_index(lead).expect("checked above")].exp_normal_form();
        for (a, ca) in self.coordinates.iter().enumerate() {
            let o = old.iter().find(|(c, _)| c == ca).map(|(_, e)| e.clone()).unwrap_or_default();
            if !(&new[a] - &(&kappa * &o)).is_identically_zero() {
                return Err(AlgError::UnsupportedGeneratorShape(format!("{op} does not transform by a factor")));
            }
        }
        Ok(kappa)
    }
}

fn is_parameter(a: &Atom) -> bool {
    matches!(a, Atom::Sym { sym, .. } if sym.kind == SymbolKind::Parameter)
}

fn coordinates_of(e: &SuperExpr) -> SparseVec<Monomial> {
    e.exp_normal_form().terms().map(|(m, c)| (m.clone(), c.clone())).collect()
}

/// Per-equation result of an invariance check.
#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceOutcome {
    pub kind: FlowKind,
    /// `(equation, leftover)`; an empty leftover means the transformed
    /// equation lies in the span of the originals.
    pub equations: Vec<(String, SuperExpr)>,
}

impl InvarianceOutcome {
    pub fn passed(&self) -> bool {
        self.equations.iter().all(|(_, l)| l.is_zero())
    }

    pub fn to_check(&self, system: &str, generator: &str) -> Check {
        let kind = match self.kind {
            FlowKind::Scaling => "exact scaling flow",
            FlowKind::OddShift => "exact odd flow",
            FlowKind::Infinitesimal => "first-order flow",
        };
        let bad: Vec<String> =
            self.equations.iter().filter(|(_, l)| !l.is_zero()).map(|(n, l)| format!("{n}: {l}")).collect();
        let c = Check::new("invariance", format!("{generator} on {system}"), bad.is_empty(), kind);
        if bad.is_empty() {
            c
        } else {
            c.with_payload(bad.join("; "))
        }
    }
}

/// Invariance of one equation system under many generators.
pub struct InvarianceChecker {
    names: Vec<String>,
    equations: Vec<SuperExpr>,
    coordinates: Vec<Sym>,
    aliases: Vec<Alias>,
    /// Span of the equations themselves.
    exact: SpanBasis<Monomial>,
    /// Span of the equations times coordinate monomials of degree ≤ 2.
    widened: SpanBasis<Monomial>,
}

impl InvarianceChecker {
    pub fn new(names: &[String], equations: &[SuperExpr], table: &SymbolTable, aliases: &[Alias]) -> Self {
        let coordinates = table.coordinates();
        let even: Vec<SuperExpr> =
            coordinates.iter().filter(|c| !c.is_odd()).map(SuperExpr::symbol).collect();
        let mut multipliers = vec![SuperExpr::one()];
        multipliers.extend(even.iter().cloned());
        for (i, a) in even.iter().enumerate() {
            for b in &even[i..] {
                multipliers.push(a * b);
            }
        }
        let mut exact = SpanBasis::new();
        let mut widened = SpanBasis::new();
        for e in equations {
            exact.insert(&coordinates_of(e));
            for m in &multipliers {
                widened.insert(&coordinates_of(&(m * e)));
            }
        }
        InvarianceChecker {
            names: names.to_vec(),
            equations: equations.to_vec(),
            coordinates,
            aliases: aliases.to_vec(),
            exact,
            widened,
        }
    }

    pub fn check(&self, x: &SuperVectorField) -> Result<InvarianceOutcome, AlgError> {
        let x = resolve_aliases(x, &self.aliases)?;
        let flow = Flow::new(&x, "s", &self.coordinates)?;
        let span = match flow.kind {
            FlowKind::Infinitesimal => &self.widened,
            _ => &self.exact,
        };
        let mut equations = Vec::new();
        for (name, e) in self.names.iter().zip(&self.equations) {
            let t = flow.transform(e)?;
            let mut leftover = SuperExpr::zero();
            for (head, group) in t.group_by_leading(is_parameter) {
                let red = span.reduce(&coordinates_of(&group));
                if !red.is_member() {
                    let rest = SuperExpr::from_terms(red.residual);
                    leftover = &leftover + &rest.prepend(&head);
                }
            }
            equations.push((name.clone(), leftover));
        }
        Ok(InvarianceOutcome { kind: flow.kind, equations })
    }
}

/// Check one generator against an equation system.
pub fn flow_invariance_check(
    names: &[String],
    equations: &[SuperExpr],
    x: &SuperVectorField,
    table: &SymbolTable,
    aliases: &[Alias],
) -> Result<InvarianceOutcome, AlgError> {
    InvarianceChecker::new(names, equations, table, aliases).check(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superexpr::parse_expr;
    use crate::symalg::parse_field;

    fn sine_gordon() -> (SymbolTable, Vec<String>, Vec<SuperExpr>) {
        let mut t = SymbolTable::superspace();
        t.declare_superfield("Phi", Parity::Even, &["xp", "xm", "tp", "tm"], ["p0", "p1", "p2", "p3"]).unwrap();
        let e = parse_expr("Dp(Dm(Phi)) - I*sin(Phi)", &t).unwrap();
        (t, vec!["sG".into()], vec![e])
    }

    fn classical() -> (SymbolTable, Vec<String>, Vec<SuperExpr>, Vec<Alias>) {
        let mut t = SymbolTable::new();
        t.declare_coordinate("z", Parity::Even).unwrap();
        t.declare_coordinate("zb", Parity::Even).unwrap();
        for f in ["H", "Q", "Qb", "u"] {
            t.declare_field(f, Parity::Even, &["z", "zb"]).unwrap();
        }
        let big_u = t.declare(Symbol::field("U", Parity::Even, &["z", "zb"])).unwrap();
        let aliases = vec![Alias { alias: big_u, base: t.lookup("u").unwrap().clone() }];
        let eqs = [
            "dzb(dz(u)) + 1/2*H^2*exp(u) - 2*Q*Qb*exp(-u)",
            "dz(Qb) - 1/2*exp(u)*dzb(H)",
            "dzb(Q) - 1/2*exp(u)*dz(H)",
        ];
        let eqs = eqs.iter().map(|s| parse_expr(s, &t).unwrap()).collect();
        (t, vec!["gauss".into(), "codazzi1".into(), "codazzi2".into()], eqs, aliases)
    }

    #[test]
    fn sine_gordon_symmetries() {
        let (t, names, eqs) = sine_gordon();
        let checker = InvarianceChecker::new(&names, &eqs, &t, &[]);
        for (src, kind) in [
            ("2*xp*dxp - 2*xm*dxm + tp*dtp - tm*dtm", FlowKind::Scaling),
            ("dtp + I*tp*dxp", FlowKind::OddShift),
            ("dxp", FlowKind::Scaling),
        ] {
            let out = checker.check(&parse_field(src, &t).unwrap()).unwrap();
            assert_eq!(out.kind, kind);
            assert!(out.passed(), "{src}: {:?}", out.equations);
        }
        let broken = checker.check(&parse_field("xp*dxp", &t).unwrap()).unwrap();
        assert!(!broken.passed());
    }

    #[test]
    fn scaling_flow_rescales_operators() {
        let (t, ..) = sine_gordon();
        let k = parse_field("2*xp*dxp - 2*xm*dxm + tp*dtp - tm*dtm", &t).unwrap();
        let flow = Flow::new(&k, "mu", &t.coordinates()).unwrap();
        let dp = SuperOperator::parse("Dp", &t).unwrap();
        let dm = SuperOperator::parse("Dm", &t).unwrap();
        let mu = SuperExpr::symbol(&flow.parameter);
        assert_eq!(flow.operator_factor(&dp).unwrap(), mu.pow(-1).unwrap());
        assert_eq!(flow.operator_factor(&dm).unwrap(), mu);
        let j = parse_field("dtp + I*tp*dxp", &t).unwrap();
        let odd = Flow::new(&j, "eta", &t.coordinates()).unwrap();
        assert_eq!(odd.operator_factor(&dp).unwrap(), SuperExpr::one());
    }

    #[test]
    fn classical_generators() {
        let (t, names, eqs, aliases) = classical();
        let checker = InvarianceChecker::new(&names, &eqs, &t, &aliases);
        for src in [
            "dz",
            "z*dz - 2*Q*dQ - U*dU",
            "z^2*dz - 4*z*Q*dQ - 2*z*U*dU",
            "zb^2*dzb - 4*zb*Qb*dQb - 2*zb*U*dU",
            "-H*dH + Q*dQ + Qb*dQb + 2*U*dU",
        ] {
            let out = checker.check(&parse_field(src, &t).unwrap()).unwrap();
            assert!(out.passed(), "{src}: {:?}", out.equations);
        }
        let out = checker.check(&parse_field("H*dH", &t).unwrap()).unwrap();
        assert!(!out.passed());
    }

    #[test]
    fn alias_resolution() {
        let (t, _, _, aliases) = classical();
        let x = parse_field("z*dz - U*dU", &t).unwrap();
        let r = resolve_aliases(&x, &aliases).unwrap();
        assert_eq!(r, parse_field("z*dz - du", &t).unwrap());
    }

    #[test]
    fn coordinate_images_must_be_coordinates() {
        let (t, ..) = classical();
        let x = parse_field("Q*dz", &t).unwrap();
        assert!(matches!(Flow::new(&x, "e", &t.coordinates()), Err(AlgError::UnsupportedGeneratorShape(_))));
    }
}

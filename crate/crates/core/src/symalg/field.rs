use std::collections::BTreeMap;
use std::fmt;

use crate::coeff::Cq;
use crate::grassmann::Parity;
use crate::linalg::SparseVec;
use crate::superexpr::{parse_expr, Monomial, Partial, SuperExpr, Sym, Symbol, SymbolKind, SymbolTable};

use super::AlgError;

/// `Σ_v a_v ∂_v` over coordinates and fields, homogeneous of one parity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperVectorField {
    components: BTreeMap<Sym, SuperExpr>,
    parity: Parity,
}

fn is_target(s: &Sym) -> bool {
    matches!(s.kind, SymbolKind::Coordinate | SymbolKind::Field)
}

impl SuperVectorField {
    pub fn zero(parity: Parity) -> Self {
        SuperVectorField { components: BTreeMap::new(), parity }
    }

    /// Builds a field of the given parity; each coefficient must have parity
    /// `parity + |target|`.
    pub fn new(parity: Parity, components: impl IntoIterator<Item = (Sym, SuperExpr)>) -> Result<Self, AlgError> {
        let mut f = SuperVectorField::zero(parity);
        for (t, c) in components {
            if !is_target(&t) {
                return Err(AlgError::NotATarget(t.name.clone()));
            }
            let expected = parity.add(t.parity);
            if !c.is_zero() && c.grade().parity() != Some(expected) {
                return Err(AlgError::MixedParity { target: t.name.clone(), parity });
            }
            let e = f.components.entry(t).or_default();
            *e = &*e + &c;
        }
        f.components.retain(|_, c| !c.is_zero());
        Ok(f)
    }

    /// Parity read off the first component; the zero field is even.
    pub fn infer(components: Vec<(Sym, SuperExpr)>) -> Result<Self, AlgError> {
        let parity = components
            .iter()
            .find(|(_, c)| !c.is_zero())
            .map(|(t, c)| c.grade().parity().map(|p| p.add(t.parity)).ok_or_else(|| AlgError::MixedParity { target: t.name.clone(), parity: Parity::Even }))
            .transpose()?
            .unwrap_or(Parity::Even);
        SuperVectorField::new(parity, components)
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn is_zero(&self) -> bool {
        self.components.is_empty()
    }

    pub fn components(&self) -> impl Iterator<Item = (&Sym, &SuperExpr)> {
        self.components.iter()
    }

    pub fn component(&self, target: &str) -> Option<&SuperExpr> {
        self.components.iter().find(|(t, _)| t.name == target).map(|(_, c)| c)
    }

    /// `X(e) = Σ a_v ∂_v e`, with `∂_v` the plain partial in `v`.
    pub fn apply(&self, e: &SuperExpr) -> SuperExpr {
        let mut out = SuperExpr::zero();
        for (t, c) in &self.components {
            let d = Partial::Variable(t.clone()).apply(e);
            if !d.is_zero() {
                out = &out + &(c * &d);
            }
        }
        out
    }

    pub fn add(&self, other: &SuperVectorField) -> SuperVectorField {
        let mut out = self.clone();
        for (t, c) in &other.components {
            let e = out.components.entry(t.clone()).or_default();
            *e = &*e + c;
        }
        out.components.retain(|_, c| !c.is_zero());
        if self.is_zero() {
            out.parity = other.parity;
        }
        out
    }

    pub fn scale(&self, k: &Cq) -> SuperVectorField {
        let mut out = self.clone();
        for c in out.components.values_mut() {
            *c = c.scale(k);
        }
        out.components.retain(|_, c| !c.is_zero());
        out
    }

    pub fn sub(&self, other: &SuperVectorField) -> SuperVectorField {
        self.add(&other.scale(&-Cq::one()))
    }

    /// Keep the components selected by `keep`.
    pub fn restrict(&self, keep: impl Fn(&Sym) -> bool) -> SuperVectorField {
        SuperVectorField {
            components: self.components.iter().filter(|(t, _)| keep(t)).map(|(t, c)| (t.clone(), c.clone())).collect(),
            parity: self.parity,
        }
    }

    pub fn map_coefficients(&self, mut f: impl FnMut(&SuperExpr) -> Result<SuperExpr, AlgError>) -> Result<SuperVectorField, AlgError> {
        let comps = self.components.iter().map(|(t, c)| Ok((t.clone(), f(c)?))).collect::<Result<Vec<_>, AlgError>>()?;
        SuperVectorField::new(self.parity, comps)
    }

    /// Coordinates over the basis of `(target, monomial)` pairs.
    pub fn coordinates(&self) -> SparseVec<(Sym, Monomial)> {
        let mut v = SparseVec::new();
        for (t, c) in &self.components {
            for (m, k) in c.exp_normal_form().terms() {
                v.insert((t.clone(), m.clone()), k.clone());
            }
        }
        v
    }
}

/// Graded bracket `XY - (-1)^{|X||Y|} YX`, read off its action on targets.
pub fn bracket(x: &SuperVectorField, y: &SuperVectorField) -> SuperVectorField {
    let sign = if x.parity.is_odd() && y.parity.is_odd() { Cq::one() } else { -Cq::one() };
    let mut targets: Vec<Sym> = x.components.keys().chain(y.components.keys()).cloned().collect();
    targets.sort();
    targets.dedup();
    let mut out = SuperVectorField::zero(x.parity.add(y.parity));
    for t in targets {
        let zero = SuperExpr::zero();
        let yv = y.components.get(&t).unwrap_or(&zero);
        let xv = x.components.get(&t).unwrap_or(&zero);
        let c = &x.apply(yv) + &y.apply(xv).scale(&sign);
        if !c.is_zero() {
            out.components.insert(t, c);
        }
    }
    out
}

/// Table extended by marker constants `d<name>` for every coordinate and field.
fn marker_table(table: &SymbolTable) -> Result<(SymbolTable, BTreeMap<String, Sym>), AlgError> {
    let mut scratch = table.clone();
    let mut markers = BTreeMap::new();
    for s in table.iter().filter(|s| is_target(s)) {
        let name = format!("d{}", s.name);
        scratch.declare(Symbol::constant(&name, s.parity))?;
        markers.insert(name, s.clone());
    }
    Ok((scratch, markers))
}

/// Parse `a*dv + b*dw + ...`: every term carries exactly one marker `d<v>`
/// to its right.
pub fn parse_field(src: &str, table: &SymbolTable) -> Result<SuperVectorField, AlgError> {
    let (scratch, markers) = marker_table(table)?;
    let e = parse_expr(src, &scratch)?;
    let parts = e.split_by_marker(|s| s.kind == SymbolKind::Constant && markers.contains_key(&s.name))?;
    let comps = parts.into_iter().map(|(m, c)| (markers[&m.name].clone(), c)).collect();
    SuperVectorField::infer(comps)
}

impl fmt::Display for SuperVectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (t, c) in &self.components {
            for (m, k) in c.terms() {
                let term = SuperExpr::term(k.clone(), m.clone()).to_string();
                let (neg, body) = match term.strip_prefix('-') {
                    Some(rest) => (true, rest.to_string()),
                    None => (false, term),
                };
                let piece = if body == "1" { format!("d{}", t.name) } else { format!("{body}*d{}", t.name) };
                match (first, neg) {
                    (true, false) => write!(f, "{piece}")?,
                    (true, true) => write!(f, "-{piece}")?,
                    (false, false) => write!(f, " + {piece}")?,
                    (false, true) => write!(f, " - {piece}")?,
                }
                first = false;
            }
        }
        Ok(())
    }
}

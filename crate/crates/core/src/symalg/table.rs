use std::collections::BTreeSet;
use std::fmt;

use crate::coeff::Cq;
use crate::grassmann::Parity;
use crate::linalg::SpanBasis;
use crate::report::Check;
use crate::superexpr::{parse_expr, Atom, SuperExpr, Sym, Symbol, SymbolKind, SymbolTable};

use super::field::{bracket, SuperVectorField};
use super::AlgError;

/// Where a generator or table row comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Origin {
    /// Stated in the source presentation.
    Stated,
    /// Computed and frozen; no table was stated.
    Derived,
    /// Added to close a stated presentation.
    Completion,
}

impl Origin {
    pub fn keyword(self) -> Option<&'static str> {
        match self {
            Origin::Stated => None,
            Origin::Derived => Some("derived"),
            Origin::Completion => Some("completion"),
        }
    }

    /// Strip a leading origin keyword.
    pub fn split(line: &str) -> (Origin, &str) {
        for (kw, o) in [("derived", Origin::Derived), ("completion", Origin::Completion)] {
            if let Some(rest) = line.strip_prefix(kw) {
                if rest.starts_with(char::is_whitespace) {
                    return (o, rest.trim_start());
                }
            }
        }
        (Origin::Stated, line)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    pub name: String,
    pub field: SuperVectorField,
    pub origin: Origin,
}

/// A claimed bracket `[left, right] = Σ c_k·g_k` (anticommutator for two
/// odd generators).
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub left: String,
    pub right: String,
    pub expected: Vec<(String, Cq)>,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraPresentation {
    pub basis: Vec<Generator>,
    pub table: Vec<TableRow>,
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl AlgebraPresentation {
    pub fn new(basis: Vec<Generator>, table: Vec<TableRow>) -> Result<Self, AlgError> {
        let mut names = BTreeSet::new();
        for g in &basis {
            if !names.insert(g.name.clone()) {
                return Err(AlgError::DuplicateGenerator(g.name.clone()));
            }
        }
        let alg = AlgebraPresentation { basis, table: Vec::new() };
        let mut pairs = BTreeSet::new();
        for row in &table {
            for n in [&row.left, &row.right].into_iter().chain(row.expected.iter().map(|(n, _)| n)) {
                if !names.contains(n) {
                    return Err(AlgError::UnknownGenerator(n.clone()));
                }
            }
            if !pairs.insert(pair_key(&row.left, &row.right)) {
                return Err(AlgError::DuplicateRow(row.left.clone(), row.right.clone()));
            }
        }
        Ok(AlgebraPresentation { table, ..alg })
    }

    pub fn generator(&self, name: &str) -> Option<&Generator> {
        self.basis.iter().find(|g| g.name == name)
    }

    pub fn fields(&self) -> Vec<SuperVectorField> {
        self.basis.iter().map(|g| g.field.clone()).collect()
    }

    fn field(&self, name: &str) -> Result<&SuperVectorField, AlgError> {
        self.generator(name).map(|g| &g.field).ok_or_else(|| AlgError::UnknownGenerator(name.to_string()))
    }

    fn marker_table(&self) -> Result<SymbolTable, AlgError> {
        let mut t = SymbolTable::new();
        for g in &self.basis {
            t.declare(Symbol::constant(&g.name, g.field.parity()))?;
        }
        Ok(t)
    }

    /// Parse `[a, b] = comb` or `{a, b} = comb`, optionally prefixed by an
    /// origin keyword.
    pub fn parse_row(&self, line: &str) -> Result<TableRow, AlgError> {
        let (origin, rest) = Origin::split(line.trim());
        let bad = || AlgError::Expr(crate::superexpr::ExprError::Syntax { column: 1, message: format!("expected `[a, b] = ...` in `{line}`") });
        let (open, close) = match rest.chars().next() {
            Some('[') => ('[', ']'),
            Some('{') => ('{', '}'),
            _ => return Err(bad()),
        };
        let end = rest.find(close).ok_or_else(bad)?;
        let (left, right) = rest[1..end].split_once(',').ok_or_else(bad)?;
        let (left, right) = (left.trim().to_string(), right.trim().to_string());
        let rhs = rest[end + 1..].trim().strip_prefix('=').ok_or_else(bad)?;
        let anti = self.field(&left)?.parity().is_odd() && self.field(&right)?.parity().is_odd();
        if anti != (open == '{') {
            return Err(AlgError::BracketKind(left, right));
        }
        let e = parse_expr(rhs, &self.marker_table()?)?;
        let mut expected = Vec::new();
        for (m, c) in e.split_by_marker(|_| true)? {
            let k = c.as_constant().ok_or_else(|| AlgError::NonConstantCoefficient(c.to_string()))?;
            expected.push((m.name.clone(), k));
        }
        Ok(TableRow { left, right, expected, origin })
    }

    pub fn render_row(&self, row: &TableRow) -> String {
        let anti = [&row.left, &row.right].iter().all(|n| self.generator(n).map(|g| g.field.parity().is_odd()).unwrap_or(false));
        let (open, close) = if anti { ('{', '}') } else { ('[', ']') };
        let prefix = row.origin.keyword().map(|k| format!("{k} ")).unwrap_or_default();
        format!("{prefix}{open}{}, {}{close} = {}", row.left, row.right, self.render_combination(&row.expected))
    }

    pub fn render_combination(&self, comb: &[(String, Cq)]) -> String {
        let e = comb.iter().fold(SuperExpr::zero(), |acc, (n, c)| {
            let p = self.generator(n).map(|g| g.field.parity()).unwrap_or(Parity::Even);
            &acc + &SuperExpr::symbol(&Symbol::constant(n, p)).scale(c)
        });
        e.to_string()
    }

    pub fn combination(&self, comb: &[(String, Cq)]) -> Result<SuperVectorField, AlgError> {
        let mut out: Option<SuperVectorField> = None;
        for (n, c) in comb {
            let f = self.field(n)?.scale(c);
            out = Some(match out {
                None => f,
                Some(acc) => acc.add(&f),
            });
        }
        Ok(out.unwrap_or_else(|| SuperVectorField::zero(Parity::Even)))
    }

    /// Coefficients of `x` in the basis, if it lies in the span.
    pub fn decompose(&self, x: &SuperVectorField) -> Option<Vec<(String, Cq)>> {
        let mut span = SpanBasis::new();
        for g in &self.basis {
            span.insert(&g.field.coordinates());
        }
        let red = span.reduce(&x.coordinates());
        red.is_member().then(|| red.combo.into_iter().map(|(j, c)| (self.basis[j].name.clone(), c)).collect())
    }

    /// Pairs `(i, j)`, `i <= j`, whose bracket is not trivially zero.
    fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.basis.len();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i..n {
                if i < j || self.basis[i].field.parity().is_odd() {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

fn describe(alg: &AlgebraPresentation, x: &SuperVectorField) -> String {
    match alg.decompose(x) {
        Some(c) => alg.render_combination(&c),
        None => format!("outside the span: {x}"),
    }
}

/// Recompute every claimed bracket and check that every unlisted pair
/// brackets to zero.
pub fn verify_table(alg: &AlgebraPresentation) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut covered = BTreeSet::new();
    for row in &alg.table {
        covered.insert(pair_key(&row.left, &row.right));
        let (Ok(a), Ok(b), Ok(expected)) = (alg.field(&row.left), alg.field(&row.right), alg.combination(&row.expected)) else {
            checks.push(Check::new("table", alg.render_row(row), false, "unknown generator"));
            continue;
        };
        let got = bracket(a, b);
        let ok = got.sub(&expected).coordinates().is_empty();
        let origin = match row.origin {
            Origin::Stated => "stated",
            Origin::Derived => "derived",
            Origin::Completion => "completion",
        };
        let mut c = Check::new("table", alg.render_row(row).trim_start_matches(|c: char| c.is_alphabetic() || c == ' ').to_string(), ok, origin);
        if !ok {
            c = c.with_payload(format!("computed {}", describe(alg, &got)));
        }
        checks.push(c);
    }
    let mut bad = Vec::new();
    let mut count = 0;
    for (i, j) in alg.pairs() {
        let (a, b) = (&alg.basis[i], &alg.basis[j]);
        if covered.contains(&pair_key(&a.name, &b.name)) {
            continue;
        }
        count += 1;
        let got = bracket(&a.field, &b.field);
        if !got.is_zero() {
            bad.push(format!("[{}, {}] = {}", a.name, b.name, describe(alg, &got)));
        }
    }
    let mut c = Check::new("table", "unlisted brackets vanish", bad.is_empty(), format!("{count} pairs"));
    if !bad.is_empty() {
        c = c.with_payload(bad.join("; "));
    }
    checks.push(c);
    checks
}

/// The nonzero brackets of a basis, each expressed in the basis.
pub fn derive_table(alg: &AlgebraPresentation) -> Result<Vec<TableRow>, AlgError> {
    let mut rows = Vec::new();
    for (i, j) in alg.pairs() {
        let (a, b) = (&alg.basis[i], &alg.basis[j]);
        let got = bracket(&a.field, &b.field);
        if got.is_zero() {
            continue;
        }
        let expected = alg.decompose(&got).ok_or_else(|| AlgError::NotClosed(a.name.clone(), b.name.clone(), got.to_string()))?;
        rows.push(TableRow { left: a.name.clone(), right: b.name.clone(), expected, origin: Origin::Derived });
    }
    Ok(rows)
}

/// The coordinates and fields retained by the projection.
#[derive(Clone, Debug, PartialEq)]
pub struct OmegaSet {
    pub field: SuperVectorField,
}

impl OmegaSet {
    pub fn new(field: SuperVectorField) -> Self {
        OmegaSet { field }
    }

    pub fn retained(&self) -> Vec<&Sym> {
        self.field.components().map(|(t, _)| t).collect()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.field.component(name).is_some()
    }
}

fn collect_syms(e: &SuperExpr, out: &mut Vec<Sym>) {
    for (m, _) in e.terms() {
        for (a, _) in m.factors() {
            match a {
                Atom::Sym { sym, .. } => out.push(sym.clone()),
                Atom::Func { arg, .. } => collect_syms(arg, out),
            }
        }
    }
}

/// Restrict to the components along retained targets.
pub fn project(x: &SuperVectorField, omega: &OmegaSet) -> Result<SuperVectorField, AlgError> {
    let kept = x.restrict(|t| omega.contains(&t.name));
    for (t, c) in kept.components() {
        let mut syms = Vec::new();
        collect_syms(c, &mut syms);
        if let Some(s) = syms
            .iter()
            .find(|s| matches!(s.kind, SymbolKind::Coordinate | SymbolKind::Field) && !omega.contains(&s.name))
        {
            return Err(AlgError::NonProjectable { target: t.name.clone(), symbol: s.name.clone() });
        }
    }
    Ok(kept)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpanRelation {
    Equal,
    /// The span of `smaller` is strictly contained in the other.
    ProperSubset { smaller: Side },
    Incomparable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpanComparison {
    pub relation: SpanRelation,
    /// Indices of the first list outside the span of the second.
    pub first_outside: Vec<usize>,
    /// Indices of the second list outside the span of the first.
    pub second_outside: Vec<usize>,
}

fn outside(xs: &[SuperVectorField], ys: &[SuperVectorField]) -> Vec<usize> {
    let mut span = SpanBasis::new();
    for y in ys {
        span.insert(&y.coordinates());
    }
    xs.iter().enumerate().filter(|(_, x)| !span.reduce(&x.coordinates()).is_member()).map(|(i, _)| i).collect()
}

pub fn span_compare(a: &[SuperVectorField], b: &[SuperVectorField]) -> SpanComparison {
    let first_outside = outside(a, b);
    let second_outside = outside(b, a);
    let relation = match (first_outside.is_empty(), second_outside.is_empty()) {
        (true, true) => SpanRelation::Equal,
        (true, false) => SpanRelation::ProperSubset { smaller: Side::First },
        (false, true) => SpanRelation::ProperSubset { smaller: Side::Second },
        (false, false) => SpanRelation::Incomparable,
    };
    SpanComparison { relation, first_outside, second_outside }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    NotIntegrable,
    CandidateIntegrable,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::NotIntegrable => "NotIntegrable",
            Verdict::CandidateIntegrable => "CandidateIntegrable",
            Verdict::Inconclusive => "Inconclusive",
        };
        write!(f, "{s}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub comparison: SpanComparison,
    /// Nonlinear-side generators outside the projected linear-side span.
    pub witnesses: Vec<String>,
    pub projected: Vec<(String, SuperVectorField)>,
}

/// Compare the nonlinear-side algebra with the projection of the
/// linear-side algebra.
pub fn classify(nonlinear: &AlgebraPresentation, linear: &AlgebraPresentation, omega: &OmegaSet) -> Result<Classification, AlgError> {
    let projected = linear
        .basis
        .iter()
        .map(|g| Ok((g.name.clone(), project(&g.field, omega)?)))
        .collect::<Result<Vec<_>, AlgError>>()?;
    let proj_fields: Vec<SuperVectorField> = projected.iter().map(|(_, f)| f.clone()).collect();
    let comparison = span_compare(&nonlinear.fields(), &proj_fields);
    let verdict = match comparison.relation {
        SpanRelation::Equal => Verdict::NotIntegrable,
        SpanRelation::ProperSubset { smaller: Side::Second } => Verdict::CandidateIntegrable,
        _ => Verdict::Inconclusive,
    };
    let witnesses = comparison.first_outside.iter().map(|&i| nonlinear.basis[i].name.clone()).collect();
    Ok(Classification { verdict, comparison, witnesses, projected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symalg::parse_field;

    fn table() -> SymbolTable {
        let mut t = SymbolTable::new();
        t.declare_coordinate("z", Parity::Even).unwrap();
        for f in ["Q", "U", "F1", "F2"] {
            t.declare_field(f, Parity::Even, &["z"]).unwrap();
        }
        t
    }

    fn alg(t: &SymbolTable, gens: &[(&str, &str)], rows: &[&str]) -> AlgebraPresentation {
        let basis = gens
            .iter()
            .map(|(n, s)| Generator { name: n.to_string(), field: parse_field(s, t).unwrap(), origin: Origin::Stated })
            .collect();
        let a = AlgebraPresentation::new(basis, vec![]).unwrap();
        let table = rows.iter().map(|r| a.parse_row(r).unwrap()).collect();
        AlgebraPresentation::new(a.basis, table).unwrap()
    }

    const GENS: [(&str, &str); 6] = [
        ("e1", "dz"),
        ("e3", "z*dz - 2*Q*dQ - U*dU"),
        ("e5", "z^2*dz - 4*z*Q*dQ - 2*z*U*dU"),
        ("T1", "dF1"),
        ("T2", "dF2"),
        ("R12", "F1*dF2 - F2*dF1"),
    ];

    #[test]
    fn table_verification_detects_corruption() {
        let t = table();
        let partial = alg(&t, &GENS, &["[e1, e3] = e1", "[e1, e5] = 2*e3", "[e3, e5] = e5"]);
        let checks = verify_table(&partial);
        let failing: Vec<_> = checks.iter().filter(|c| !c.passed()).collect();
        assert_eq!(failing.len(), 1, "{checks:?}");
        assert!(failing[0].payload.as_deref().unwrap().contains("[T1, R12] = T2"));

        let rows = derive_table(&partial).unwrap();
        assert_eq!(rows.len(), 5);
        let full = AlgebraPresentation::new(partial.basis.clone(), rows).unwrap();
        assert!(verify_table(&full).iter().all(Check::passed));
        let rendered: Vec<String> = full.table.iter().map(|r| full.render_row(r)).collect();
        assert!(rendered.contains(&"derived [T2, R12] = -T1".to_string()), "{rendered:?}");
        let reparsed: Vec<TableRow> = rendered.iter().map(|r| full.parse_row(r).unwrap()).collect();
        assert_eq!(reparsed, full.table);

        let bad = alg(&t, &GENS, &["[e1, e3] = 2*e1"]);
        assert!(verify_table(&bad).iter().any(|c| !c.passed() && c.name.starts_with("[e1, e3]")));
        assert!(matches!(partial.parse_row("{e1, e3} = e1"), Err(AlgError::BracketKind(..))));
        let closed = alg(&t, &GENS[..3], &[]);
        let extra = Generator { name: "X".into(), field: parse_field("z^3*dz", &t).unwrap(), origin: Origin::Stated };
        let open = AlgebraPresentation::new([closed.basis, vec![extra]].concat(), vec![]).unwrap();
        assert!(matches!(derive_table(&open), Err(AlgError::NotClosed(..))));
    }

    #[test]
    fn projection_and_spans() {
        let t = table();
        let omega = OmegaSet::new(parse_field("z*dz + Q*dQ + U*dU", &t).unwrap());
        let hat = parse_field("z*dz - 2*Q*dQ - U*dU + F1*dF1", &t).unwrap();
        let e3 = parse_field("z*dz - 2*Q*dQ - U*dU", &t).unwrap();
        assert_eq!(project(&hat, &omega).unwrap(), e3);
        assert_eq!(project(&project(&hat, &omega).unwrap(), &omega).unwrap(), e3);
        assert!(project(&parse_field("dF1", &t).unwrap(), &omega).unwrap().is_zero());
        let bad = parse_field("F1*dQ", &t).unwrap();
        assert!(matches!(project(&bad, &omega), Err(AlgError::NonProjectable { .. })));

        let a = vec![parse_field("dz", &t).unwrap(), e3.clone()];
        let b = vec![e3.scale(&Cq::int(3)), parse_field("2*dz", &t).unwrap()];
        assert_eq!(span_compare(&a, &b).relation, SpanRelation::Equal);
        let c = vec![e3.clone()];
        let cmp = span_compare(&a, &c);
        assert_eq!(cmp.relation, SpanRelation::ProperSubset { smaller: Side::Second });
        assert_eq!(cmp.first_outside, vec![0]);
    }
}

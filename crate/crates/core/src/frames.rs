//! Graded 3×3 matrices over [`SuperExpr`], linear problems and their
//! zero-curvature residuals, and certificate-based reduction of residuals to
//! equation systems.
//!
//! A matrix acting on a frame `Ω = (Ω₁, Ω₂, Ω₃)` with component parities
//! `p` has entry parities `p_i + p_j + s`, where the shift `s` is the parity
//! of the derivative operator it represents. This covers every block pattern
//! used by the moving-frame equations.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::grassmann::{Grade, Parity};
use crate::linalg::{SparseVec, SpanBasis};
use crate::superexpr::{ExprError, Monomial, SuperExpr, SuperOperator};

pub const DIM: usize = 3;

pub type Entries = [[SuperExpr; DIM]; DIM];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("entry ({row},{col}) is not {expected}: {found}")]
    EntryParity { row: usize, col: usize, expected: Parity, found: String },
    #[error("equation `{0}` is not homogeneous")]
    EquationParity(String),
    #[error("unknown equation `{0}`")]
    UnknownEquation(String),
    #[error("entry ({row},{col}) is not certified; leftover {leftover}")]
    CertificateMismatch { row: usize, col: usize, leftover: String },
    #[error("matrices act on differently graded frames")]
    FrameMismatch,
}

fn homogeneous_as(e: &SuperExpr, p: Parity) -> bool {
    e.is_zero() || e.grade().parity() == Some(p)
}

/// A 3×3 matrix with a block parity pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperMatrix {
    entries: Entries,
    frame: [Parity; DIM],
    shift: Parity,
}

impl SuperMatrix {
    /// Checks every entry against the pattern `frame[i] + frame[j] + shift`.
    pub fn new(entries: Entries, frame: [Parity; DIM], shift: Parity) -> Result<Self, FrameError> {
        let m = SuperMatrix { entries, frame, shift };
        m.check_parity()?;
        Ok(m)
    }

    pub fn zero(frame: [Parity; DIM], shift: Parity) -> Self {
        SuperMatrix { entries: Default::default(), frame, shift }
    }

    pub fn entry(&self, i: usize, j: usize) -> &SuperExpr {
        &self.entries[i][j]
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn frame(&self) -> [Parity; DIM] {
        self.frame
    }

    pub fn shift(&self) -> Parity {
        self.shift
    }

    pub fn pattern(&self, i: usize, j: usize) -> Parity {
        self.frame[i].add(self.frame[j]).add(self.shift)
    }

    pub fn check_parity(&self) -> Result<(), FrameError> {
        for i in 0..DIM {
            for j in 0..DIM {
                let p = self.pattern(i, j);
                if !homogeneous_as(&self.entries[i][j], p) {
                    return Err(FrameError::EntryParity {
                        row: i + 1,
                        col: j + 1,
                        expected: p,
                        found: self.entries[i][j].to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(SuperExpr::is_zero)
    }

    /// Entrywise map; the result keeps the frame and takes the given shift.
    pub fn try_map<F>(&self, shift: Parity, mut f: F) -> Result<SuperMatrix, FrameError>
    where
        F: FnMut(&SuperExpr) -> Result<SuperExpr, ExprError>,
    {
        let mut out = SuperMatrix::zero(self.frame, shift);
        for i in 0..DIM {
            for j in 0..DIM {
                out.entries[i][j] = f(&self.entries[i][j])?;
            }
        }
        out.check_parity()?;
        Ok(out)
    }

    pub fn apply(&self, op: &SuperOperator) -> SuperMatrix {
        let mut out = SuperMatrix::zero(self.frame, self.shift.add(op.parity()));
        for i in 0..DIM {
            for j in 0..DIM {
                out.entries[i][j] = op.apply(&self.entries[i][j]);
            }
        }
        out
    }

    pub fn mul(&self, other: &SuperMatrix) -> Result<SuperMatrix, FrameError> {
        if self.frame != other.frame {
            return Err(FrameError::FrameMismatch);
        }
        let mut out = SuperMatrix::zero(self.frame, self.shift.add(other.shift));
        for i in 0..DIM {
            for j in 0..DIM {
                let mut acc = SuperExpr::zero();
                for k in 0..DIM {
                    acc = &acc + &(&self.entries[i][k] * &other.entries[k][j]);
                }
                out.entries[i][j] = acc;
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &SuperMatrix) -> Result<SuperMatrix, FrameError> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SuperMatrix) -> Result<SuperMatrix, FrameError> {
        self.combine(other, |a, b| a - b)
    }

    fn combine(&self, other: &SuperMatrix, f: impl Fn(&SuperExpr, &SuperExpr) -> SuperExpr) -> Result<SuperMatrix, FrameError> {
        if self.frame != other.frame {
            return Err(FrameError::FrameMismatch);
        }
        let mut out = SuperMatrix::zero(self.frame, self.shift);
        for i in 0..DIM {
            for j in 0..DIM {
                out.entries[i][j] = f(&self.entries[i][j], &other.entries[i][j]);
            }
        }
        out.check_parity()?;
        Ok(out)
    }

    pub fn scale_rows_cols(&self, row: &[SuperExpr; DIM], col: &[SuperExpr; DIM]) -> SuperMatrix {
        let mut out = self.clone();
        for i in 0..DIM {
            for j in 0..DIM {
                out.entries[i][j] = &(&row[i] * &self.entries[i][j]) * &col[j];
            }
        }
        out
    }

    /// `E M` with `E = sign * diag(1, 1, -1)`.
    fn e_times(&self, sign: i64) -> SuperMatrix {
        let d = [SuperExpr::int(sign), SuperExpr::int(sign), SuperExpr::int(-sign)];
        self.scale_rows_cols(&d, &[SuperExpr::one(), SuperExpr::one(), SuperExpr::one()])
    }
}

impl fmt::Display for SuperMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, row) in self.entries.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            let cells: Vec<String> = row.iter().map(|e| e.to_string()).collect();
            write!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

/// Residual formula of the compatibility condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZccForm {
    /// `d2 M1 - d1 M2 + [M1, M2]` for `d1 Ω = M1 Ω`, `d2 Ω = M2 Ω`.
    Classical,
    /// `D+ M- + D- M+ - {E M+, E M-}` with `E = sign * diag(1,1,-1)`.
    BosonicWithE { sign: i64 },
    /// `D+ M- + D- M+ - {M+, M-}`.
    Fermionic,
}

impl fmt::Display for ZccForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZccForm::Classical => write!(f, "classical"),
            ZccForm::BosonicWithE { sign } if *sign < 0 => write!(f, "bosonic-E-"),
            ZccForm::BosonicWithE { .. } => write!(f, "bosonic-E+"),
            ZccForm::Fermionic => write!(f, "fermionic"),
        }
    }
}

/// The pair `op₊ Ω = M₊ Ω`, `op₋ Ω = M₋ Ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProblem {
    pub plus: SuperMatrix,
    pub minus: SuperMatrix,
    pub ops: [SuperOperator; 2],
    pub form: ZccForm,
    /// Concrete frames, one triple per frame copy, used to spell the problem
    /// out as scalar equations.
    pub frames: Vec<[SuperExpr; DIM]>,
}

impl LinearProblem {
    pub fn with_form(&self, form: ZccForm) -> LinearProblem {
        LinearProblem { form, ..self.clone() }
    }

    /// Row equations `op(Ω_a) - Σ_b M_ab Ω_b` for every frame copy.
    pub fn equations(&self) -> Result<EquationSystem, FrameError> {
        let mut names = Vec::new();
        let mut eqs = Vec::new();
        for (k, frame) in self.frames.iter().enumerate() {
            for (tag, op, m) in [("p", &self.ops[0], &self.plus), ("m", &self.ops[1], &self.minus)] {
                for a in 0..DIM {
                    let mut e = op.apply(&frame[a]);
                    for b in 0..DIM {
                        e = &e - &(m.entry(a, b) * &frame[b]);
                    }
                    names.push(format!("lin{}{}{}", k + 1, tag, a + 1));
                    eqs.push(e);
                }
            }
        }
        EquationSystem::new(names, eqs)
    }
}

/// Zero-curvature residual of a linear problem, entries in exponential
/// normal form.
pub fn compute_zcc(lp: &LinearProblem) -> SuperMatrix {
    let mut r = raw_zcc(lp);
    for e in r.entries.iter_mut().flatten() {
        *e = e.exp_normal_form();
    }
    r
}

fn raw_zcc(lp: &LinearProblem) -> SuperMatrix {
    let [d1, d2] = &lp.ops;
    let (p, m) = (&lp.plus, &lp.minus);
    let fail = "linear problem matrices share a frame";
    match lp.form {
        ZccForm::Classical => {
            let lhs = p.apply(d2).sub(&m.apply(d1)).expect(fail);
            let comm = p.mul(m).and_then(|a| a.sub(&m.mul(p).expect(fail))).expect(fail);
            lhs.add(&comm).expect(fail)
        }
        ZccForm::BosonicWithE { sign } => {
            let lhs = m.apply(d1).add(&p.apply(d2)).expect(fail);
            let ep = p.e_times(sign);
            let em = m.e_times(sign);
            let anti = ep.mul(&em).and_then(|a| a.add(&em.mul(&ep).expect(fail))).expect(fail);
            lhs.sub(&anti).expect(fail)
        }
        ZccForm::Fermionic => {
            let lhs = m.apply(d1).add(&p.apply(d2)).expect(fail);
            let anti = p.mul(m).and_then(|a| a.add(&m.mul(p).expect(fail))).expect(fail);
            lhs.sub(&anti).expect(fail)
        }
    }
}

/// Substitute symbols in both matrices and the frames.
pub fn substitute(lp: &LinearProblem, bindings: &BTreeMap<String, SuperExpr>) -> Result<LinearProblem, FrameError> {
    let plus = lp.plus.try_map(lp.plus.shift(), |e| e.substitute(bindings))?;
    let minus = lp.minus.try_map(lp.minus.shift(), |e| e.substitute(bindings))?;
    let frames = lp
        .frames
        .iter()
        .map(|f| -> Result<[SuperExpr; DIM], ExprError> {
            Ok([f[0].substitute(bindings)?, f[1].substitute(bindings)?, f[2].substitute(bindings)?])
        })
        .collect::<Result<_, _>>()?;
    Ok(LinearProblem { plus, minus, frames, ..lp.clone() })
}

/// Named equations, each read as `expr = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct EquationSystem {
    names: Vec<String>,
    equations: Vec<SuperExpr>,
}

impl EquationSystem {
    pub fn new(names: Vec<String>, equations: Vec<SuperExpr>) -> Result<Self, FrameError> {
        assert_eq!(names.len(), equations.len(), "one name per equation");
        for (n, e) in names.iter().zip(&equations) {
            if e.grade() == Grade::Mixed {
                return Err(FrameError::EquationParity(n.clone()));
            }
        }
        Ok(EquationSystem { names, equations })
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn equations(&self) -> &[SuperExpr] {
        &self.equations
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &SuperExpr)> {
        self.names.iter().zip(&self.equations)
    }

    pub fn get(&self, name: &str) -> Option<&SuperExpr> {
        self.names.iter().position(|n| n == name).map(|i| &self.equations[i])
    }
}

/// Per residual entry (0-based), the multipliers `c_k` of `Σ c_k·eq_k`.
/// Entries not listed are certified against the empty combination.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReductionCertificate {
    pub entries: BTreeMap<(usize, usize), Vec<(String, SuperExpr)>>,
}

impl ReductionCertificate {
    pub fn combination(&self, sys: &EquationSystem, i: usize, j: usize) -> Result<SuperExpr, FrameError> {
        let mut acc = SuperExpr::zero();
        for (name, c) in self.entries.get(&(i, j)).into_iter().flatten() {
            let eq = sys.get(name).ok_or_else(|| FrameError::UnknownEquation(name.clone()))?;
            acc = &acc + &(c * eq);
        }
        Ok(acc)
    }
}

/// Result of checking one residual entry.
#[derive(Clone, Debug, PartialEq)]
pub struct EntryOutcome {
    pub row: usize,
    pub col: usize,
    /// Residual minus the certified combination, in exponential normal form.
    pub leftover: SuperExpr,
}

impl EntryOutcome {
    pub fn passed(&self) -> bool {
        self.leftover.is_zero()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertificateOutcome {
    pub entries: Vec<EntryOutcome>,
}

impl CertificateOutcome {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(EntryOutcome::passed)
    }

    /// The first failing entry as an error.
    pub fn into_result(self) -> Result<(), FrameError> {
        match self.entries.into_iter().find(|e| !e.passed()) {
            None => Ok(()),
            Some(e) => Err(FrameError::CertificateMismatch { row: e.row + 1, col: e.col + 1, leftover: e.leftover.to_string() }),
        }
    }
}

pub fn verify_certificate(
    residual: &SuperMatrix,
    sys: &EquationSystem,
    cert: &ReductionCertificate,
) -> Result<CertificateOutcome, FrameError> {
    let mut entries = Vec::new();
    for i in 0..DIM {
        for j in 0..DIM {
            let comb = cert.combination(sys, i, j)?;
            let leftover = (residual.entry(i, j) - &comb).exp_normal_form();
            entries.push(EntryOutcome { row: i, col: j, leftover });
        }
    }
    Ok(CertificateOutcome { entries })
}

fn coordinates(e: &SuperExpr) -> SparseVec<Monomial> {
    e.exp_normal_form().terms().map(|(m, c)| (m.clone(), c.clone())).collect()
}

fn from_coordinates(v: &SparseVec<Monomial>) -> SuperExpr {
    SuperExpr::from_terms(v.iter().map(|(m, c)| (m.clone(), c.clone())))
}

/// Best combination `Σ_{k,b} c·b·eq_k` (constant `c`, `b` from `multipliers`)
/// approximating `target`, with the leftover after elimination. The leftover
/// is zero iff `target` lies in the span.
pub fn find_combination(
    target: &SuperExpr,
    sys: &EquationSystem,
    multipliers: &[SuperExpr],
) -> (Vec<(String, SuperExpr)>, SuperExpr) {
    let mut basis = SpanBasis::new();
    let mut labels = Vec::new();
    for (name, eq) in sys.iter() {
        for b in multipliers {
            basis.insert(&coordinates(&(b * eq)));
            labels.push((name.clone(), b.clone()));
        }
    }
    let red = basis.reduce(&coordinates(target));
    let mut comb: BTreeMap<String, SuperExpr> = BTreeMap::new();
    for (j, c) in &red.combo {
        let (name, b) = &labels[*j];
        let e = comb.entry(name.clone()).or_default();
        *e = &*e + &b.scale(c);
    }
    let order: Vec<(String, SuperExpr)> =
        sys.names().iter().filter_map(|n| comb.remove(n).map(|c| (n.clone(), c))).filter(|(_, c)| !c.is_zero()).collect();
    (order, from_coordinates(&red.residual))
}

/// Search a certificate entry by entry; entries that are not reachable keep
/// their best partial combination.
pub fn find_certificate(
    residual: &SuperMatrix,
    sys: &EquationSystem,
    multipliers: &[SuperExpr],
) -> (ReductionCertificate, Vec<((usize, usize), SuperExpr)>) {
    let mut cert = ReductionCertificate::default();
    let mut leftovers = Vec::new();
    for i in 0..DIM {
        for j in 0..DIM {
            let target = residual.entry(i, j);
            if target.is_identically_zero() {
                continue;
            }
            let (comb, left) = find_combination(target, sys, multipliers);
            if !comb.is_empty() {
                cert.entries.insert((i, j), comb);
            }
            if !left.is_zero() {
                leftovers.push(((i, j), left));
            }
        }
    }
    (cert, leftovers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superexpr::{parse_expr, SymbolTable};

    fn sg_table() -> SymbolTable {
        let mut t = SymbolTable::superspace();
        t.declare_superfield("Phi", Parity::Even, &["xp", "xm", "tp", "tm"], ["p0", "p1", "p2", "p3"]).unwrap();
        t
    }

    fn matrix(t: &SymbolTable, rows: [[&str; 3]; 3], frame: [Parity; 3], shift: Parity) -> SuperMatrix {
        let entries = rows.map(|r| r.map(|s| parse_expr(s, t).unwrap()));
        SuperMatrix::new(entries, frame, shift).unwrap()
    }

    const SG_FRAME: [Parity; 3] = [Parity::Even, Parity::Even, Parity::Odd];

    fn sine_gordon(t: &SymbolTable) -> LinearProblem {
        let plus = matrix(
            t,
            [
                ["0", "0", "1/2*I*exp(I*Phi)"],
                ["0", "0", "-1/2*I*exp(-I*Phi)"],
                ["-1/2*exp(-I*Phi)", "1/2*exp(I*Phi)", "0"],
            ],
            SG_FRAME,
            Parity::Odd,
        );
        let minus = matrix(t, [["I*Dm(Phi)", "0", "-I"], ["0", "-I*Dm(Phi)", "I"], ["-1", "1", "0"]], SG_FRAME, Parity::Odd);
        LinearProblem {
            plus,
            minus,
            ops: [SuperOperator::parse("Dp", t).unwrap(), SuperOperator::parse("Dm", t).unwrap()],
            form: ZccForm::BosonicWithE { sign: 1 },
            frames: vec![],
        }
    }

    #[test]
    fn zero_matrices_have_zero_residual() {
        let t = sg_table();
        for form in [ZccForm::Classical, ZccForm::BosonicWithE { sign: -1 }, ZccForm::Fermionic] {
            let z = SuperMatrix::zero(SG_FRAME, Parity::Odd);
            let lp = LinearProblem {
                plus: z.clone(),
                minus: z,
                ops: [SuperOperator::parse("Dp", &t).unwrap(), SuperOperator::parse("Dm", &t).unwrap()],
                form,
                frames: vec![],
            };
            assert!(compute_zcc(&lp).is_zero());
        }
    }

    #[test]
    fn sine_gordon_residual_is_the_field_equation() {
        let t = sg_table();
        let eq = parse_expr("Dp(Dm(Phi)) - I*sin(Phi)", &t).unwrap();
        let sys = EquationSystem::new(vec!["sg".into()], vec![eq]).unwrap();
        for sign in [1, -1] {
            let lp = sine_gordon(&t).with_form(ZccForm::BosonicWithE { sign });
            let r = compute_zcc(&lp);
            r.check_parity().unwrap();
            let (cert, left) = find_certificate(&r, &sys, &[SuperExpr::one()]);
            assert!(left.is_empty(), "{left:?}");
            assert_eq!(cert.entries.len(), 2);
            assert!(verify_certificate(&r, &sys, &cert).unwrap().passed());
            // wrong system
            let other = EquationSystem::new(vec!["x".into()], vec![parse_expr("Dp(Phi)", &t).unwrap()]).unwrap();
            let renamed = ReductionCertificate {
                entries: cert.entries.iter().map(|(k, v)| (*k, v.iter().map(|(_, c)| ("x".to_string(), c.clone())).collect())).collect(),
            };
            let out = verify_certificate(&r, &other, &renamed).unwrap();
            assert!(matches!(out.into_result(), Err(FrameError::CertificateMismatch { .. })));
        }
    }

    #[test]
    fn rejects_wrong_entry_parity() {
        let t = sg_table();
        let entries: Entries = [["Phi", "0", "0"], ["0", "0", "0"], ["0", "0", "0"]].map(|r| r.map(|s| parse_expr(s, &t).unwrap()));
        assert!(matches!(SuperMatrix::new(entries, SG_FRAME, Parity::Odd), Err(FrameError::EntryParity { row: 1, col: 1, .. })));
    }

    #[test]
    fn substitution_checks_parity() {
        let mut t = sg_table();
        t.declare_field("H", Parity::Odd, &["xp", "xm", "tp", "tm"]).unwrap();
        let lp = sine_gordon(&t);
        let same = substitute(&lp, &BTreeMap::from([("Phi".to_string(), parse_expr("Phi", &t).unwrap())])).unwrap();
        assert_eq!(same, lp);
        let bad = BTreeMap::from([("Phi".to_string(), parse_expr("H", &t).unwrap())]);
        assert!(matches!(substitute(&lp, &bad), Err(FrameError::Expr(ExprError::ParityMismatch { .. }))));
    }
}

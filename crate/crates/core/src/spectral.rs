//! Spectral parameters: insertion into a linear problem along a symmetry of
//! the nonlinear system that the linear problem lacks, verification of the
//! parametrized compatibility condition, and a bounded search for a gauge
//! transformation that would remove the parameter again.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::coeff::Cq;
use crate::frames::{compute_zcc, verify_certificate, EquationSystem, FrameError, LinearProblem, ReductionCertificate, SuperMatrix, DIM};
use crate::grassmann::Parity;
use crate::linalg::{solve, SparseVec};
use crate::report::Check;
use crate::superexpr::{ExprError, Monomial, Partial, SuperExpr, SuperOperator, Sym, SymbolTable};
use crate::symalg::{resolve_aliases, span_compare, Alias, AlgError, Flow, FlowKind, SuperVectorField};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpectralError {
    #[error(transparent)]
    Alg(#[from] AlgError),
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("{0} is a symmetry of the linear problem; the parameter would be trivial")]
    NotInL4(String),
    #[error("{0} does not integrate to a {1} parameter flow")]
    WrongKind(String, ParameterKind),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParameterKind {
    /// Multiplicative even parameter `μ`, with `λ = μ²`.
    Even,
    /// Additive odd parameter.
    Odd,
}

impl fmt::Display for ParameterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParameterKind::Even => "even",
            ParameterKind::Odd => "odd",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParametrizedLinearProblem {
    pub base: LinearProblem,
    pub family: LinearProblem,
    pub parameter: Sym,
    pub kind: ParameterKind,
}

impl ParametrizedLinearProblem {
    /// Family at the identity value of the parameter (`μ = 1`, odd parameter 0).
    pub fn at_identity(&self) -> Result<LinearProblem, SpectralError> {
        let v = match self.kind {
            ParameterKind::Even => SuperExpr::one(),
            ParameterKind::Odd => SuperExpr::zero(),
        };
        let b = BTreeMap::from([(self.parameter.name.clone(), v)]);
        Ok(crate::frames::substitute(&self.family, &b)?)
    }
}

fn map_matrix(m: &SuperMatrix, mut f: impl FnMut(&SuperExpr) -> Result<SuperExpr, SpectralError>) -> Result<SuperMatrix, SpectralError> {
    let mut err = None;
    let out = m.try_map(m.shift(), |e| match f(e) {
        Ok(v) => Ok(v),
        Err(x) => {
            err = Some(x);
            Ok(SuperExpr::zero())
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

const FLOW_PARAMETER: &str = "flow_s";

/// Insert a parameter along `x`, refused when `x` lies in the span of the
/// projected linear-problem symmetries.
///
/// Even kind: the scaling flow of `x` with group parameter `s`, each operator
/// picking up a factor `κ_r`; the family is `κ_r⁻¹·M_r` in the new variables
/// with `s = μ⁻¹`. Odd kind: the shift flow of an odd `x`, with the flow
/// parameter renamed to `parameter`.
pub fn insert_parameter(
    lp: &LinearProblem,
    name: &str,
    x: &SuperVectorField,
    projected_linear: &[SuperVectorField],
    kind: ParameterKind,
    parameter: &Sym,
    table: &SymbolTable,
    aliases: &[Alias],
) -> Result<ParametrizedLinearProblem, SpectralError> {
    if span_compare(std::slice::from_ref(x), projected_linear).first_outside.is_empty() {
        return Err(SpectralError::NotInL4(name.to_string()));
    }
    let x = resolve_aliases(x, aliases)?;
    let flow = Flow::new(&x, FLOW_PARAMETER, &table.coordinates())?;
    let expected = match kind {
        ParameterKind::Even => FlowKind::Scaling,
        ParameterKind::Odd => FlowKind::OddShift,
    };
    if flow.kind != expected {
        return Err(SpectralError::WrongKind(name.to_string(), kind));
    }
    let rename = match kind {
        ParameterKind::Even => SuperExpr::symbol(parameter).pow(-1)?,
        ParameterKind::Odd => SuperExpr::symbol(parameter),
    };
    let bind = BTreeMap::from([(FLOW_PARAMETER.to_string(), rename)]);
    let mut mats = Vec::new();
    for (m, op) in [(&lp.plus, &lp.ops[0]), (&lp.minus, &lp.ops[1])] {
        let kappa_inv = flow.operator_factor(op)?.inverse()?;
        mats.push(map_matrix(m, |e| {
            let t = &kappa_inv * &flow.transform(e)?;
            Ok(t.substitute(&bind)?.exp_normal_form())
        })?);
    }
    let minus = mats.pop().expect("two matrices");
    let plus = mats.pop().expect("two matrices");
    let family = LinearProblem { plus, minus, ..lp.clone() };
    Ok(ParametrizedLinearProblem { base: lp.clone(), family, parameter: parameter.clone(), kind })
}

fn matrices_equal(a: &SuperMatrix, b: &SuperMatrix) -> bool {
    (0..DIM).all(|i| (0..DIM).all(|j| (a.entry(i, j) - b.entry(i, j)).is_identically_zero()))
}

/// Certificate checks for the family residual, a check that the certificate
/// does not mention the parameter, and the degeneration to the base problem.
pub fn verify_family(plp: &ParametrizedLinearProblem, sys: &EquationSystem, cert: &ReductionCertificate) -> Result<Vec<Check>, SpectralError> {
    let mut checks = Vec::new();
    let residual = compute_zcc(&plp.family);
    let outcome = verify_certificate(&residual, sys, cert)?;
    for e in &outcome.entries {
        let c = Check::new("spectral", format!("family ({},{})", e.row + 1, e.col + 1), e.passed(), "certificate");
        checks.push(if e.passed() { c } else { c.with_payload(e.leftover.to_string()) });
    }
    let p = &plp.parameter.name;
    let free = cert.entries.values().flatten().all(|(_, c)| !c.mentions(p));
    checks.push(Check::new("spectral", "reduction is parameter-free", free, format!("no {p} in multipliers")));
    let id = plp.at_identity()?;
    let ok = matrices_equal(&id.plus, &plp.base.plus) && matrices_equal(&id.minus, &plp.base.minus);
    let at = match plp.kind {
        ParameterKind::Even => format!("{p} = 1"),
        ParameterKind::Odd => format!("{p} = 0"),
    };
    checks.push(Check::new("spectral", "identity degeneration", ok, at));
    Ok(checks)
}

/// Unknown gauge matrix entries `Σ t·μ^k`, `|k| < degree`, for an even
/// parameter; `t + t'·λ` for an odd parameter `λ`. Degree 0 has no unknowns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GaugeAnsatz {
    pub degree: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GaugeOutcome {
    NoGaugeWithinAnsatz { unknowns: usize },
    /// The generator `T` (even parameter) or the correction `g − 1` (odd).
    GaugeFound(Vec<Vec<SuperExpr>>),
}

type Matrix = [[SuperExpr; DIM]; DIM];

fn unit(i: usize, j: usize, v: SuperExpr) -> Matrix {
    let mut m: Matrix = Default::default();
    m[i][j] = v;
    m
}

fn mmul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out: Matrix = Default::default();
    for i in 0..DIM {
        for j in 0..DIM {
            out[i][j] = (0..DIM).fold(SuperExpr::zero(), |acc, k| &acc + &(&a[i][k] * &b[k][j]));
        }
    }
    out
}

fn msub(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = a.clone();
    for i in 0..DIM {
        for j in 0..DIM {
            out[i][j] = &a[i][j] - &b[i][j];
        }
    }
    out
}

fn apply_op(op: &SuperOperator, a: &Matrix) -> Matrix {
    a.clone().map(|r| r.map(|e| op.apply(&e)))
}

/// Entries `(i, j)` multiplied by `(−1)^{p_i + p_j}` when `op` is odd.
fn twist(op: &SuperOperator, frame: [Parity; DIM], a: &Matrix) -> Matrix {
    let mut out = a.clone();
    if op.parity().is_odd() {
        for i in 0..DIM {
            for j in 0..DIM {
                if frame[i].add(frame[j]).is_odd() {
                    out[i][j] = -&out[i][j];
                }
            }
        }
    }
    out
}

fn flatten(r: usize, a: &Matrix) -> SparseVec<(usize, usize, usize, Monomial)> {
    let mut v = SparseVec::new();
    for i in 0..DIM {
        for j in 0..DIM {
            for (m, c) in a[i][j].exp_normal_form().terms() {
                v.insert((r, i, j, m.clone()), c.clone());
            }
        }
    }
    v
}

fn add_into(acc: &mut SparseVec<(usize, usize, usize, Monomial)>, v: SparseVec<(usize, usize, usize, Monomial)>) {
    for (k, c) in v {
        let e = acc.entry(k.clone()).or_insert_with(Cq::zero);
        *e += &c;
        if e.is_zero() {
            acc.remove(&k);
        }
    }
}

/// Search a gauge matrix within the ansatz.
///
/// Even parameter `μ`: solve `μ∂_μ M_r = D_r T + T̂ M_r − M_r T` for `T`,
/// the infinitesimal form of a μ-dependent gauge. Odd parameter `λ`: solve
/// `M_r(λ) g = D_r g + ĝ M_r(0)` for `g = 1 + G`, the exact gauge relation,
/// which is linear in `G`. Hats denote the twist by operator parity.
pub fn gauge_falsifier(plp: &ParametrizedLinearProblem, ansatz: GaugeAnsatz) -> Result<GaugeOutcome, SpectralError> {
    let frame = plp.family.plus.frame();
    let fam = [&plp.family.plus, &plp.family.minus];
    let base = plp.at_identity()?;
    let base = [&base.plus, &base.minus];
    let p = SuperExpr::symbol(&plp.parameter);
    let mut basis: Vec<Matrix> = Vec::new();
    let d = ansatz.degree as i32;
    for i in 0..DIM {
        for j in 0..DIM {
            let even_slot = frame[i].add(frame[j]) == Parity::Even;
            match plp.kind {
                ParameterKind::Even if even_slot => {
                    for k in (1 - d)..d {
                        basis.push(unit(i, j, p.pow(k)?));
                    }
                }
                ParameterKind::Odd if d > 0 => {
                    basis.push(unit(i, j, if even_slot { SuperExpr::one() } else { p.clone() }));
                }
                _ => {}
            }
        }
    }
    if basis.is_empty() {
        return Ok(GaugeOutcome::NoGaugeWithinAnsatz { unknowns: 0 });
    }
    let mut columns = vec![SparseVec::new(); basis.len()];
    let mut target = SparseVec::new();
    for r in 0..2 {
        let op = &plp.family.ops[r];
        let m: Matrix = fam[r].entries().clone();
        let m0: Matrix = base[r].entries().clone();
        match plp.kind {
            ParameterKind::Even => {
                let dm = m.clone().map(|row| row.map(|e| &p * &Partial::Variable(plp.parameter.clone()).apply(&e)));
                add_into(&mut target, flatten(r, &dm));
                for (u, b) in basis.iter().enumerate() {
                    let rhs = msub(&add(&apply_op(op, b), &mmul(&twist(op, frame, b), &m)), &mmul(&m, b));
                    add_into(&mut columns[u], flatten(r, &rhs));
                }
            }
            ParameterKind::Odd => {
                // M(λ)(1 + G) − D G − (1 + Ĝ) M(0) = 0
                add_into(&mut target, flatten(r, &msub(&m0, &m)));
                for (u, b) in basis.iter().enumerate() {
                    let lhs = msub(&msub(&mmul(&m, b), &apply_op(op, b)), &mmul(&twist(op, frame, b), &m0));
                    add_into(&mut columns[u], flatten(r, &lhs));
                }
            }
        }
    }
    match solve(&columns, &target) {
        Err(_) => Ok(GaugeOutcome::NoGaugeWithinAnsatz { unknowns: basis.len() }),
        Ok(coeffs) => {
            let mut t: Matrix = Default::default();
            for (c, b) in coeffs.iter().zip(&basis) {
                for i in 0..DIM {
                    for j in 0..DIM {
                        t[i][j] = &t[i][j] + &b[i][j].scale(c);
                    }
                }
            }
            Ok(GaugeOutcome::GaugeFound(t.iter().map(|r| r.to_vec()).collect()))
        }
    }
}

fn add(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = a.clone();
    for i in 0..DIM {
        for j in 0..DIM {
            out[i][j] = &a[i][j] + &b[i][j];
        }
    }
    out
}

/// A family that is gauge-trivial by construction: `G M_r G⁻¹` with
/// `G = diag(μ^{w_i})`.
pub fn control_family(lp: &LinearProblem, weights: [i32; DIM], mu: &Sym) -> Result<ParametrizedLinearProblem, SpectralError> {
    let m = SuperExpr::symbol(mu);
    let row: [SuperExpr; DIM] = [m.pow(weights[0])?, m.pow(weights[1])?, m.pow(weights[2])?];
    let col: [SuperExpr; DIM] = [m.pow(-weights[0])?, m.pow(-weights[1])?, m.pow(-weights[2])?];
    let family = LinearProblem { plus: lp.plus.scale_rows_cols(&row, &col), minus: lp.minus.scale_rows_cols(&row, &col), ..lp.clone() };
    Ok(ParametrizedLinearProblem { base: lp.clone(), family, parameter: mu.clone(), kind: ParameterKind::Even })
}

impl GaugeOutcome {
    pub fn to_check(&self, family: &str, ansatz: GaugeAnsatz, expect_gauge: bool) -> Check {
        let (found, detail) = match self {
            GaugeOutcome::NoGaugeWithinAnsatz { unknowns } => {
                (false, format!("no gauge within degree-{} ansatz ({unknowns} unknowns)", ansatz.degree))
            }
            GaugeOutcome::GaugeFound(_) => (true, format!("gauge found within degree-{} ansatz", ansatz.degree)),
        };
        let c = Check::new("spectral", format!("gauge falsifier, {family}"), found == expect_gauge, detail);
        match self {
            GaugeOutcome::GaugeFound(t) => c.with_payload(
                t.iter().map(|r| format!("[{}]", r.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", "))).collect::<Vec<_>>().join(" "),
            ),
            _ => c,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{find_certificate, ZccForm};
    use crate::superexpr::{parse_expr, Symbol};
    use crate::symalg::parse_field;

    const FRAME: [Parity; DIM] = [Parity::Even, Parity::Even, Parity::Odd];

    fn table() -> SymbolTable {
        let mut t = SymbolTable::superspace();
        t.declare_superfield("Phi", Parity::Even, &["xp", "xm", "tp", "tm"], ["p0", "p1", "p2", "p3"]).unwrap();
        t.declare(Symbol::invertible_constant("mu")).unwrap();
        t.declare(Symbol::constant("lb", Parity::Odd)).unwrap();
        t
    }

    fn matrix(t: &SymbolTable, rows: [[&str; 3]; 3]) -> SuperMatrix {
        SuperMatrix::new(rows.map(|r| r.map(|s| parse_expr(s, t).unwrap())), FRAME, Parity::Odd).unwrap()
    }

    fn sine_gordon(t: &SymbolTable) -> LinearProblem {
        LinearProblem {
            plus: matrix(t, [["0", "0", "1/2*I*exp(I*Phi)"], ["0", "0", "-1/2*I*exp(-I*Phi)"], ["-1/2*exp(-I*Phi)", "1/2*exp(I*Phi)", "0"]]),
            minus: matrix(t, [["I*Dm(Phi)", "0", "-I"], ["0", "-I*Dm(Phi)", "I"], ["-1", "1", "0"]]),
            ops: [SuperOperator::parse("Dp", t).unwrap(), SuperOperator::parse("Dm", t).unwrap()],
            form: ZccForm::BosonicWithE { sign: 1 },
            frames: vec![],
        }
    }

    fn projected(t: &SymbolTable) -> Vec<SuperVectorField> {
        ["dxp", "dxm", "dtp + I*tp*dxp", "dtm + I*tm*dxm"].iter().map(|s| parse_field(s, t).unwrap()).collect()
    }

    fn insert(t: &SymbolTable, lp: &LinearProblem, mu: &str) -> ParametrizedLinearProblem {
        let k = parse_field("2*xp*dxp - 2*xm*dxm + tp*dtp - tm*dtm", t).unwrap();
        insert_parameter(lp, "K", &k, &projected(t), ParameterKind::Even, t.lookup(mu).unwrap(), t, &[]).unwrap()
    }

    #[test]
    fn dilation_inserts_the_spectral_parameter() {
        let t = table();
        let lp = sine_gordon(&t);
        let plp = insert(&t, &lp, "mu");
        let bp = matrix(&t, [["0", "0", "1/2*I*mu^-1*exp(I*Phi)"], ["0", "0", "-1/2*I*mu^-1*exp(-I*Phi)"], ["-1/2*mu^-1*exp(-I*Phi)", "1/2*mu^-1*exp(I*Phi)", "0"]]);
        let bm = matrix(&t, [["I*Dm(Phi)", "0", "-I*mu"], ["0", "-I*Dm(Phi)", "I*mu"], ["-mu", "mu", "0"]]);
        assert!(matrices_equal(&plp.family.plus, &bp), "{}", plp.family.plus);
        assert!(matrices_equal(&plp.family.minus, &bm), "{}", plp.family.minus);

        let sys = EquationSystem::new(vec!["sg".into()], vec![parse_expr("Dp(Dm(Phi)) - I*sin(Phi)", &t).unwrap()]).unwrap();
        let (cert, left) = find_certificate(&compute_zcc(&plp.family), &sys, &[SuperExpr::one()]);
        assert!(left.is_empty());
        assert!(verify_family(&plp, &sys, &cert).unwrap().iter().all(Check::passed));
    }

    #[test]
    fn insertion_group_law() {
        let mut t = table();
        t.declare(Symbol::invertible_constant("m1")).unwrap();
        t.declare(Symbol::invertible_constant("m2")).unwrap();
        let lp = sine_gordon(&t);
        let twice = insert(&t, &insert(&t, &lp, "m1").family, "m2");
        let once = insert(&t, &lp, "mu");
        let prod = BTreeMap::from([("mu".to_string(), parse_expr("m1*m2", &t).unwrap())]);
        let once = crate::frames::substitute(&once.family, &prod).unwrap();
        assert!(matrices_equal(&twice.family.plus, &once.plus));
        assert!(matrices_equal(&twice.family.minus, &once.minus));
    }

    #[test]
    fn symmetries_of_the_linear_problem_are_refused() {
        let t = table();
        let lp = sine_gordon(&t);
        let p = parse_field("dxp", &t).unwrap();
        let err = insert_parameter(&lp, "P+", &p, &projected(&t), ParameterKind::Even, t.lookup("mu").unwrap(), &t, &[]);
        assert_eq!(err, Err(SpectralError::NotInL4("P+".into())));
    }

    #[test]
    fn gauge_falsifier_separates_trivial_families() {
        let t = table();
        let lp = sine_gordon(&t);
        let plp = insert(&t, &lp, "mu");
        for d in [0, 1, 2, 3] {
            let out = gauge_falsifier(&plp, GaugeAnsatz { degree: d }).unwrap();
            assert!(matches!(out, GaugeOutcome::NoGaugeWithinAnsatz { .. }), "degree {d}");
        }
        let control = control_family(&lp, [1, 0, -1], t.lookup("mu").unwrap()).unwrap();
        let GaugeOutcome::GaugeFound(g) = gauge_falsifier(&control, GaugeAnsatz { degree: 2 }).unwrap() else { panic!("no gauge") };
        // conjugating back with the generator removes the parameter
        let tg: Matrix = [0, 1, 2].map(|i| [0, 1, 2].map(|j| g[i][j].clone()));
        for (r, m) in [&control.family.plus, &control.family.minus].into_iter().enumerate() {
            let op = &control.family.ops[r];
            let m: Matrix = m.entries().clone();
            let dm = m.clone().map(|row| row.map(|e| &SuperExpr::symbol(&control.parameter) * &Partial::Variable(control.parameter.clone()).apply(&e)));
            let rhs = msub(&add(&apply_op(op, &tg), &mmul(&twist(op, FRAME, &tg), &m)), &mmul(&m, &tg));
            assert!(msub(&dm, &rhs).iter().flatten().all(SuperExpr::is_identically_zero));
        }
        assert_eq!(gauge_falsifier(&control, GaugeAnsatz { degree: 0 }).unwrap(), GaugeOutcome::NoGaugeWithinAnsatz { unknowns: 0 });
    }

    #[test]
    fn odd_shift_insertion() {
        let mut t = SymbolTable::superspace();
        t.declare_field("H", Parity::Odd, &["xp", "xm", "tp", "tm"]).unwrap();
        t.declare(Symbol::constant("lb", Parity::Odd)).unwrap();
        let frame = [Parity::Even; 3];
        let m = |rows: [[&str; 3]; 3]| SuperMatrix::new(rows.map(|r| r.map(|s| parse_expr(s, &t).unwrap())), frame, Parity::Odd).unwrap();
        let lp = LinearProblem {
            plus: m([["0", "0", "H"], ["0", "0", "0"], ["H", "0", "0"]]),
            minus: m([["0", "H", "0"], ["0", "0", "0"], ["0", "0", "0"]]),
            ops: [SuperOperator::parse("Dp", &t).unwrap(), SuperOperator::parse("Dm", &t).unwrap()],
            form: ZccForm::Fermionic,
            frames: vec![],
        };
        let w = parse_field("dH", &t).unwrap();
        let plp = insert_parameter(&lp, "W", &w, &[], ParameterKind::Odd, t.lookup("lb").unwrap(), &t, &[]).unwrap();
        assert!(matrices_equal(&plp.family.plus, &m([["0", "0", "H + lb"], ["0", "0", "0"], ["H + lb", "0", "0"]])));
        assert!(matrices_equal(&plp.at_identity().unwrap().minus, &lp.minus));
        assert!(matches!(
            insert_parameter(&lp, "W", &w, &[], ParameterKind::Even, t.lookup("lb").unwrap(), &t, &[]),
            Err(SpectralError::WrongKind(..))
        ));
    }
}

//! Scenario files and the verification driver.
//!
//! A scenario bundles a nonlinear equation system, its linear problem, the
//! symmetry algebras of both, the projection set `ω`, reduction certificates
//! and an optional spectral insertion. The file format is sectioned plain
//! text with one declaration per line; `#` starts a comment.
//!
//! ```text
//! [scenario]
//! name = susy-sine-gordon
//!
//! [symbols]
//! superspace
//! superfield Phi even components p0 p1 p2 p3
//! field f even on xp, xm
//! constant mu even invertible
//! alias U = exp(u)
//!
//! [equations]
//! sg: Dp(Dm(Phi)) - I*sin(Phi)
//!
//! [linear-problem]
//! form = bosonic-E+
//! operators = Dp, Dm
//! frame-parity = even, even, odd
//! plus.1 = [0, 0, 1/2*I*exp(I*Phi)]
//! minus.1 = [I*Dm(Phi), 0, -I]
//! frame = [psi11, psi21, f31]
//!
//! [algebra:nonlinear]
//! K: 2*xp*dxp - 2*xm*dxm + tp*dtp - tm*dtm
//! derived [P_p, K] = 2*P_p
//!
//! [algebra:linear]
//! ...
//!
//! [omega]
//! omega = xp*dxp + xm*dxm + tp*dtp + tm*dtm + Phi*dPhi
//! verdict = CandidateIntegrable
//! witnesses = K
//!
//! [certificates]
//! bosonic-E+ (1,1) = I*sg
//!
//! [spectral]
//! generator = K
//! kind = even
//! parameter = mu
//! gauge-degree = 2
//! control-weights = 1, 0, -1
//! expect.plus.1 = [0, 0, 1/2*I*mu^-1*exp(I*Phi)]
//! (1,1) = I*sg
//! ```
//!
//! Certificate indices are 1-based in files.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::coeff::Cq;
use crate::frames::{
    compute_zcc, verify_certificate, EquationSystem, FrameError, LinearProblem, ReductionCertificate, SuperMatrix, ZccForm,
    DIM,
};
use crate::grassmann::{GeneratorSet, GrassmannNumber, Parity};
use crate::report::{Check, VerificationReport};
use crate::spectral::{
    control_family, gauge_falsifier, insert_parameter, verify_family, GaugeAnsatz, ParameterKind,
    SpectralError,
};
use crate::superexpr::{
    apply_to_components, parse_expr, to_grassmann, ExprError, SuperExpr, SuperOperator, Sym, Symbol, SymbolKind,
    SymbolTable,
};
use crate::symalg::{
    classify, parse_field, Alias, AlgError, AlgebraPresentation, Generator, InvarianceChecker, OmegaSet, Origin,
    SpanRelation, SuperVectorField, Verdict,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: parity error: {message}")]
    Parity { line: usize, message: String },
    #[error("line {line}: undeclared symbol `{name}`")]
    UndeclaredSymbol { line: usize, name: String },
    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },
}

/// Position of a piece of text inside the file, for error reporting.
#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    column: usize,
}

impl Pos {
    fn shifted(self, by: usize) -> Pos {
        Pos { line: self.line, column: self.column + by }
    }

    fn syntax(self, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Syntax { line: self.line, column: self.column, message: message.into() }
    }

    fn invalid(self, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Invalid { line: self.line, message: message.into() }
    }

    fn expr(self, e: ExprError) -> ScenarioError {
        match e {
            ExprError::Syntax { column, message } => {
                ScenarioError::Syntax { line: self.line, column: self.column + column - 1, message }
            }
            ExprError::UndeclaredSymbol(name) => ScenarioError::UndeclaredSymbol { line: self.line, name },
            e @ (ExprError::ComponentParity { .. } | ExprError::ParityMismatch { .. } | ExprError::OddArgument(_)) => {
                ScenarioError::Parity { line: self.line, message: e.to_string() }
            }
            e => self.invalid(e.to_string()),
        }
    }

    fn alg(self, e: AlgError) -> ScenarioError {
        match e {
            AlgError::Expr(e) => self.expr(e),
            e @ AlgError::MixedParity { .. } => ScenarioError::Parity { line: self.line, message: e.to_string() },
            e => self.invalid(e.to_string()),
        }
    }

    fn frame(self, e: FrameError) -> ScenarioError {
        match e {
            FrameError::Expr(e) => self.expr(e),
            e @ (FrameError::EntryParity { .. } | FrameError::EquationParity(_)) => {
                ScenarioError::Parity { line: self.line, message: e.to_string() }
            }
            e => self.invalid(e.to_string()),
        }
    }
}

/// One line of the `[symbols]` section.
#[derive(Clone, Debug, PartialEq)]
pub enum Declaration {
    /// `xp, xm` even and `tp, tm` odd.
    Superspace,
    Coordinate { name: String, parity: Parity },
    /// Depends on the listed coordinates, all declared ones by default.
    Field { name: String, parity: Parity, on: Option<Vec<String>> },
    /// Field on all of superspace with a named component expansion.
    Superfield { name: String, parity: Parity, components: [String; 4] },
    Constant { name: String, parity: Parity, invertible: bool },
    /// `alias = exp(base)`.
    Alias { name: String, base: String },
}

fn parity_word(p: Parity) -> &'static str {
    if p.is_odd() {
        "odd"
    } else {
        "even"
    }
}

impl Declaration {
    fn render(&self) -> String {
        match self {
            Declaration::Superspace => "superspace".into(),
            Declaration::Coordinate { name, parity } => format!("coordinate {name} {}", parity_word(*parity)),
            Declaration::Field { name, parity, on } => match on {
                None => format!("field {name} {}", parity_word(*parity)),
                Some(cs) => format!("field {name} {} on {}", parity_word(*parity), cs.join(", ")),
            },
            Declaration::Superfield { name, parity, components } => {
                format!("superfield {name} {} components {}", parity_word(*parity), components.join(" "))
            }
            Declaration::Constant { name, parity, invertible } => {
                let inv = if *invertible { " invertible" } else { "" };
                format!("constant {name} {}{inv}", parity_word(*parity))
            }
            Declaration::Alias { name, base } => format!("alias {name} = exp({base})"),
        }
    }
}

/// The linear problem together with every residual form it is checked in.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSpec {
    /// Carries the first form.
    pub problem: LinearProblem,
    pub forms: Vec<ZccForm>,
}

/// Expected outcome of the classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectedClassification {
    pub verdict: Verdict,
    pub witnesses: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralSpec {
    pub generator: String,
    pub kind: ParameterKind,
    pub parameter: String,
    pub gauge_degree: Option<u32>,
    pub control_weights: Option<[i32; DIM]>,
    pub expected_plus: Option<SuperMatrix>,
    pub expected_minus: Option<SuperMatrix>,
    /// Reduction of the family residual to the nonlinear system.
    pub certificate: ReductionCertificate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub declarations: Vec<Declaration>,
    pub table: SymbolTable,
    pub aliases: Vec<Alias>,
    pub system: EquationSystem,
    pub linear: LinearSpec,
    pub nonlinear_algebra: AlgebraPresentation,
    pub linear_algebra: AlgebraPresentation,
    pub omega: OmegaSet,
    pub expected: Option<ExpectedClassification>,
    /// One certificate per residual form, keyed by the form's name.
    pub certificates: BTreeMap<String, ReductionCertificate>,
    pub spectral: Option<SpectralSpec>,
}

const BUILTIN: &[(&str, &str)] = &[
    ("classical-gc", include_str!("../scenarios/classical-gc.scn")),
    ("bosonic-susy-gc", include_str!("../scenarios/bosonic-susy-gc.scn")),
    ("fermionic-susy-gc", include_str!("../scenarios/fermionic-susy-gc.scn")),
    ("susy-sine-gordon", include_str!("../scenarios/susy-sine-gordon.scn")),
];

/// Names of the scenarios shipped with the crate.
pub fn builtin_names() -> Vec<&'static str> {
    BUILTIN.iter().map(|(n, _)| *n).collect()
}

/// Source text of a built-in scenario.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load_builtin(name: &str) -> Result<Scenario, ScenarioError> {
    let src = builtin_source(name).ok_or_else(|| ScenarioError::UnknownScenario(name.to_string()))?;
    parse_scenario(src)
}

/// A built-in name, or a path to a `.scn` file.
pub fn load(name_or_path: &str) -> Result<Scenario, ScenarioError> {
    if let Some(src) = builtin_source(name_or_path) {
        return parse_scenario(src);
    }
    if name_or_path.ends_with(".scn") {
        let src = std::fs::read_to_string(name_or_path)
            .map_err(|e| ScenarioError::Io { path: name_or_path.to_string(), message: e.to_string() })?;
        return parse_scenario(&src);
    }
    Err(ScenarioError::UnknownScenario(name_or_path.to_string()))
}

// ---------------------------------------------------------------- parsing

struct Line<'a> {
    pos: Pos,
    text: &'a str,
}

fn sections(src: &str) -> Result<Vec<(Line<'_>, Vec<Line<'_>>)>, ScenarioError> {
    let mut out: Vec<(Line, Vec<Line>)> = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let text = body.trim();
        if text.is_empty() {
            continue;
        }
        let column = body.len() - body.trim_start().len() + 1;
        let line = Line { pos: Pos { line: i + 1, column }, text };
        let is_header = text.starts_with('[')
            && text.ends_with(']')
            && text[1..text.len() - 1].chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == ':');
        if is_header {
            out.push((line, Vec::new()));
        } else {
            match out.last_mut() {
                Some((_, lines)) => lines.push(line),
                None => return Err(line.pos.syntax("expected a section header")),
            }
        }
    }
    Ok(out)
}

/// Split at the first occurrence of `sep`, returning both sides trimmed
/// with the column offset of the right side.
fn split_once<'a>(line: &Line<'a>, sep: char) -> Result<(&'a str, &'a str, Pos), ScenarioError> {
    let (l, r) = line.text.split_once(sep).ok_or_else(|| line.pos.syntax(format!("expected `{sep}`")))?;
    let off = l.len() + sep.len_utf8();
    let lead = r.len() - r.trim_start().len();
    Ok((l.trim(), r.trim(), line.pos.shifted(off + lead)))
}

/// Split a comma list at top level (outside parentheses), with offsets.
fn split_top(s: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push((start, &s[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((start, &s[start..]));
    out.into_iter()
        .map(|(o, p)| {
            let lead = p.len() - p.trim_start().len();
            (o + lead, p.trim())
        })
        .collect()
}

fn parse_parity(word: &str, pos: Pos) -> Result<Parity, ScenarioError> {
    match word {
        "even" => Ok(Parity::Even),
        "odd" => Ok(Parity::Odd),
        _ => Err(pos.syntax(format!("expected `even` or `odd`, found `{word}`"))),
    }
}

fn parse_form(word: &str, pos: Pos) -> Result<ZccForm, ScenarioError> {
    match word {
        "classical" => Ok(ZccForm::Classical),
        "bosonic-E+" => Ok(ZccForm::BosonicWithE { sign: 1 }),
        "bosonic-E-" => Ok(ZccForm::BosonicWithE { sign: -1 }),
        "fermionic" => Ok(ZccForm::Fermionic),
        _ => Err(pos.syntax(format!("unknown residual form `{word}`"))),
    }
}

fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_alphabetic() || c == '_') && cs.all(|c| c.is_alphanumeric() || c == '_')
}

fn expr(src: &str, pos: Pos, table: &SymbolTable) -> Result<SuperExpr, ScenarioError> {
    parse_expr(src, table).map_err(|e| pos.expr(e))
}

fn field(src: &str, pos: Pos, table: &SymbolTable) -> Result<SuperVectorField, ScenarioError> {
    parse_field(src, table).map_err(|e| pos.alg(e))
}

/// `[a, b, c]` as three expressions.
fn row3(src: &str, pos: Pos, table: &SymbolTable) -> Result<[SuperExpr; DIM], ScenarioError> {
    let inner = src
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| pos.syntax("expected `[a, b, c]`"))?;
    let parts = split_top(inner);
    if parts.len() != DIM {
        return Err(pos.syntax(format!("expected {DIM} entries, found {}", parts.len())));
    }
    let mut out: [SuperExpr; DIM] = Default::default();
    for (k, (off, p)) in parts.into_iter().enumerate() {
        out[k] = expr(p, pos.shifted(1 + off), table)?;
    }
    Ok(out)
}

fn parse_symbols(lines: &[Line], table: &mut SymbolTable) -> Result<(Vec<Declaration>, Vec<Alias>), ScenarioError> {
    let mut decls = Vec::new();
    let mut aliases = Vec::new();
    for line in lines {
        let pos = line.pos;
        let words: Vec<&str> = line.text.split_whitespace().collect();
        let name_of = |k: usize| -> Result<String, ScenarioError> {
            let w = words.get(k).ok_or_else(|| pos.syntax("missing name"))?;
            if !is_identifier(w) {
                return Err(pos.syntax(format!("`{w}` is not an identifier")));
            }
            Ok(w.to_string())
        };
        let parity_of = |k: usize| -> Result<Parity, ScenarioError> {
            parse_parity(words.get(k).copied().unwrap_or(""), pos)
        };
        let decl = match words[0] {
            "superspace" if words.len() == 1 => Declaration::Superspace,
            "coordinate" if words.len() == 3 => Declaration::Coordinate { name: name_of(1)?, parity: parity_of(2)? },
            "field" => {
                let on = match words.get(3) {
                    None => None,
                    Some(&"on") => {
                        let rest = line.text.split_once(" on ").map_or("", |(_, r)| r);
                        Some(rest.split(',').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect())
                    }
                    Some(w) => return Err(pos.syntax(format!("unexpected `{w}`"))),
                };
                Declaration::Field { name: name_of(1)?, parity: parity_of(2)?, on }
            }
            "superfield" => {
                let name = name_of(1)?;
                let components = match words.get(3) {
                    None => [0, 1, 2, 3].map(|k| format!("{name}_{k}")),
                    Some(&"components") if words.len() == 8 => {
                        for w in &words[4..] {
                            if !is_identifier(w) {
                                return Err(pos.syntax(format!("`{w}` is not an identifier")));
                            }
                        }
                        [4, 5, 6, 7].map(|k| words[k].to_string())
                    }
                    Some(_) => return Err(pos.syntax("expected `components a b c d`")),
                };
                Declaration::Superfield { name, parity: parity_of(2)?, components }
            }
            "constant" => {
                let invertible = match words.get(3) {
                    None => false,
                    Some(&"invertible") if words.len() == 4 => true,
                    Some(w) => return Err(pos.syntax(format!("unexpected `{w}`"))),
                };
                Declaration::Constant { name: name_of(1)?, parity: parity_of(2)?, invertible }
            }
            "alias" => {
                let (l, r, rpos) = split_once(line, '=')?;
                let name = l.trim_start_matches("alias").trim().to_string();
                let base = r
                    .strip_prefix("exp(")
                    .and_then(|s| s.strip_suffix(')'))
                    .map(str::trim)
                    .ok_or_else(|| rpos.syntax("expected `exp(name)`"))?;
                if !is_identifier(&name) || !is_identifier(base) {
                    return Err(pos.syntax("expected `alias U = exp(u)`"));
                }
                Declaration::Alias { name, base: base.to_string() }
            }
            w => return Err(pos.syntax(format!("unknown declaration `{w}`"))),
        };
        declare(&decl, table, &mut aliases).map_err(|e| pos.expr(e))?;
        decls.push(decl);
    }
    Ok((decls, aliases))
}

fn declare(decl: &Declaration, table: &mut SymbolTable, aliases: &mut Vec<Alias>) -> Result<(), ExprError> {
    let all_coords: Vec<String> = table.coordinates().iter().map(|c| c.name.clone()).collect();
    let refs = |v: &[String]| -> Vec<String> { v.to_vec() };
    match decl {
        Declaration::Superspace => {
            for (n, p) in [("xp", Parity::Even), ("xm", Parity::Even), ("tp", Parity::Odd), ("tm", Parity::Odd)] {
                table.declare_coordinate(n, p)?;
            }
        }
        Declaration::Coordinate { name, parity } => {
            table.declare_coordinate(name, *parity)?;
        }
        Declaration::Field { name, parity, on } => {
            let deps = on.clone().unwrap_or_else(|| refs(&all_coords));
            let deps: Vec<&str> = deps.iter().map(String::as_str).collect();
            table.declare_field(name, *parity, &deps)?;
        }
        Declaration::Superfield { name, parity, components } => {
            table.superspace_coords().ok_or(ExprError::NoSuperspace)?;
            let deps: Vec<&str> = all_coords.iter().map(String::as_str).collect();
            let comps = [0, 1, 2, 3].map(|k| components[k].as_str());
            table.declare_superfield(name, *parity, &deps, comps)?;
        }
        Declaration::Constant { name, parity, invertible } => {
            let sym = match (invertible, parity) {
                (true, Parity::Even) => Symbol::invertible_constant(name),
                (true, Parity::Odd) => {
                    return Err(ExprError::ParityMismatch { name: name.clone(), expected: Parity::Even })
                }
                (false, p) => Symbol::constant(name, *p),
            };
            table.declare(sym)?;
        }
        Declaration::Alias { name, base } => {
            let b = table.lookup(base)?.clone();
            if b.kind != SymbolKind::Field || b.is_odd() {
                return Err(ExprError::ParityMismatch { name: base.clone(), expected: Parity::Even });
            }
            let deps: Vec<&str> = b.depends_on.iter().map(String::as_str).collect();
            let alias = table.declare_field(name, Parity::Even, &deps)?;
            aliases.push(Alias { alias, base: b });
        }
    }
    Ok(())
}

fn parse_equations(lines: &[Line], table: &SymbolTable) -> Result<EquationSystem, ScenarioError> {
    let mut names: Vec<String> = Vec::new();
    let mut eqs = Vec::new();
    let mut first = None;
    for line in lines {
        let (name, body, bpos) = split_once(line, ':')?;
        if !is_identifier(name) {
            return Err(line.pos.syntax(format!("`{name}` is not an equation name")));
        }
        if names.iter().any(|n| n == name) || table.contains(name) {
            return Err(line.pos.invalid(format!("equation name `{name}` is already taken")));
        }
        first.get_or_insert(line.pos);
        let e = expr(body, bpos, table)?;
        if e.grade() == crate::grassmann::Grade::Mixed {
            return Err(ScenarioError::Parity { line: line.pos.line, message: format!("equation `{name}` is not homogeneous") });
        }
        names.push(name.to_string());
        eqs.push(e);
    }
    EquationSystem::new(names, eqs).map_err(|e| first.unwrap_or(Pos { line: 0, column: 1 }).frame(e))
}

fn key_values<'a>(lines: &'a [Line<'a>]) -> Result<Vec<(&'a str, &'a str, Pos, Pos)>, ScenarioError> {
    lines
        .iter()
        .map(|l| {
            let (k, v, vpos) = split_once(l, '=')?;
            Ok((k, v, vpos, l.pos))
        })
        .collect()
}

fn matrix(rows: &[Option<([SuperExpr; DIM], Pos)>; DIM], frame: [Parity; DIM], shift: Parity, at: Pos, what: &str) -> Result<SuperMatrix, ScenarioError> {
    let mut entries: [[SuperExpr; DIM]; DIM] = Default::default();
    for (i, r) in rows.iter().enumerate() {
        let (r, _) = r.as_ref().ok_or_else(|| at.invalid(format!("missing {what}.{}", i + 1)))?;
        entries[i] = r.clone();
    }
    let at = rows.iter().flatten().map(|(_, p)| *p).next().unwrap_or(at);
    SuperMatrix::new(entries, frame, shift).map_err(|e| at.frame(e))
}

fn row_key(key: &str, prefix: &str) -> Option<usize> {
    let k: usize = key.strip_prefix(prefix)?.strip_prefix('.')?.parse().ok()?;
    (1..=DIM).contains(&k).then_some(k - 1)
}

fn parse_linear(lines: &[Line], header: Pos, table: &SymbolTable) -> Result<LinearSpec, ScenarioError> {
    let mut forms = Vec::new();
    let mut ops: Option<[SuperOperator; 2]> = None;
    let mut frame: Option<[Parity; DIM]> = None;
    let mut plus: [Option<([SuperExpr; DIM], Pos)>; DIM] = Default::default();
    let mut minus: [Option<([SuperExpr; DIM], Pos)>; DIM] = Default::default();
    let mut frames = Vec::new();
    for (k, v, vpos, pos) in key_values(lines)? {
        match k {
            "form" => {
                for (off, w) in split_top(v) {
                    forms.push(parse_form(w, vpos.shifted(off))?);
                }
            }
            "operators" => {
                let parts = split_top(v);
                if parts.len() != 2 {
                    return Err(vpos.syntax("expected two operators"));
                }
                let op = |(off, w): (usize, &str)| {
                    SuperOperator::parse(w, table).map_err(|e| match e {
                        ExprError::UnknownOperator(_) => vpos.shifted(off).syntax(format!("unknown operator `{w}`")),
                        e => vpos.shifted(off).expr(e),
                    })
                };
                ops = Some([op(parts[0])?, op(parts[1])?]);
            }
            "frame-parity" => {
                let parts = split_top(v);
                if parts.len() != DIM {
                    return Err(vpos.syntax(format!("expected {DIM} parities")));
                }
                let mut f = [Parity::Even; DIM];
                for (i, (off, w)) in parts.into_iter().enumerate() {
                    f[i] = parse_parity(w, vpos.shifted(off))?;
                }
                frame = Some(f);
            }
            "frame" => frames.push(row3(v, vpos, table)?),
            _ => {
                if let Some(i) = row_key(k, "plus") {
                    plus[i] = Some((row3(v, vpos, table)?, pos));
                } else if let Some(i) = row_key(k, "minus") {
                    minus[i] = Some((row3(v, vpos, table)?, pos));
                } else {
                    return Err(pos.syntax(format!("unknown key `{k}`")));
                }
            }
        }
    }
    let ops = ops.ok_or_else(|| header.invalid("missing `operators`"))?;
    let frame = frame.ok_or_else(|| header.invalid("missing `frame-parity`"))?;
    let form = *forms.first().ok_or_else(|| header.invalid("missing `form`"))?;
    let plus = matrix(&plus, frame, ops[0].parity(), header, "plus")?;
    let minus = matrix(&minus, frame, ops[1].parity(), header, "minus")?;
    let problem = LinearProblem { plus, minus, ops, form, frames };
    problem.equations().map_err(|e| header.frame(e))?;
    Ok(LinearSpec { problem, forms })
}

fn parse_algebra(lines: &[Line], table: &SymbolTable) -> Result<AlgebraPresentation, ScenarioError> {
    let mut basis = Vec::new();
    let mut rows = Vec::new();
    for line in lines {
        let (origin, rest) = Origin::split(line.text);
        if rest.starts_with('[') || rest.starts_with('{') {
            rows.push(line);
            continue;
        }
        let (name, body) = rest.split_once(':').ok_or_else(|| line.pos.syntax("expected `name: field`"))?;
        let name = name.trim();
        if !is_identifier(name) {
            return Err(line.pos.syntax(format!("`{name}` is not a generator name")));
        }
        let bpos = line.pos.shifted(line.text.len() - body.trim_start().len());
        let f = field(body.trim(), bpos, table)?;
        basis.push((line.pos, Generator { name: name.to_string(), field: f, origin }));
    }
    let first = basis.first().map(|(p, _)| *p);
    let gens: Vec<Generator> = basis.into_iter().map(|(_, g)| g).collect();
    let alg = AlgebraPresentation::new(gens, vec![]).map_err(|e| first.unwrap_or(Pos { line: 0, column: 1 }).alg(e))?;
    let mut table_rows = Vec::new();
    for line in &rows {
        table_rows.push(alg.parse_row(line.text).map_err(|e| line.pos.alg(e))?);
    }
    let at = rows.first().map(|l| l.pos).unwrap_or(Pos { line: 0, column: 1 });
    AlgebraPresentation::new(alg.basis, table_rows).map_err(|e| at.alg(e))
}

/// Table with one constant per equation, for parsing combinations.
fn marker_table(table: &SymbolTable, sys: &EquationSystem) -> Result<SymbolTable, ExprError> {
    let mut t = table.clone();
    for (n, e) in sys.iter() {
        let p = e.grade().parity().unwrap_or(Parity::Even);
        t.declare(Symbol::constant(n, p))?;
    }
    Ok(t)
}

type Combination = Vec<(String, SuperExpr)>;

/// `(i,j) = Σ c·eq` with 1-based indices.
fn parse_cert_line(
    text: &str,
    pos: Pos,
    markers: &SymbolTable,
    sys: &EquationSystem,
) -> Result<((usize, usize), Combination), ScenarioError> {
    let close = text.find(')').ok_or_else(|| pos.syntax("expected `(i,j) = ...`"))?;
    let idx = text.strip_prefix('(').map(|s| &s[..close - 1]).ok_or_else(|| pos.syntax("expected `(i,j)`"))?;
    let (i, j) = idx.split_once(',').ok_or_else(|| pos.syntax("expected `(i,j)`"))?;
    let parse_ix = |s: &str| -> Result<usize, ScenarioError> {
        let k: usize = s.trim().parse().map_err(|_| pos.syntax(format!("bad index `{s}`")))?;
        if (1..=DIM).contains(&k) {
            Ok(k - 1)
        } else {
            Err(pos.syntax(format!("index {k} out of range")))
        }
    };
    let (i, j) = (parse_ix(i)?, parse_ix(j)?);
    let rest = &text[close + 1..];
    let body = rest.trim_start().strip_prefix('=').ok_or_else(|| pos.syntax("expected `=`"))?;
    let bpos = pos.shifted(text.len() - body.trim_start().len());
    let e = expr(body.trim(), bpos, markers)?;
    let parts = e.split_by_marker(|s| s.kind == SymbolKind::Constant && sys.get(&s.name).is_some()).map_err(|e| bpos.expr(e))?;
    let mut by_name: BTreeMap<String, SuperExpr> = parts.into_iter().map(|(m, c)| (m.name.clone(), c)).collect();
    let comb = sys.names().iter().filter_map(|n| by_name.remove(n).map(|c| (n.clone(), c))).collect();
    Ok(((i, j), comb))
}

fn parse_certificates(
    lines: &[Line],
    markers: &SymbolTable,
    sys: &EquationSystem,
    forms: &[ZccForm],
) -> Result<BTreeMap<String, ReductionCertificate>, ScenarioError> {
    let mut out: BTreeMap<String, ReductionCertificate> = BTreeMap::new();
    for line in lines {
        let (form, rest) = line.text.split_once(char::is_whitespace).ok_or_else(|| line.pos.syntax("expected `<form> (i,j) = ...`"))?;
        let form = parse_form(form, line.pos)?;
        if !forms.contains(&form) {
            return Err(line.pos.invalid(format!("form `{form}` is not declared by the linear problem")));
        }
        let rpos = line.pos.shifted(line.text.len() - rest.trim_start().len());
        let (key, comb) = parse_cert_line(rest.trim(), rpos, markers, sys)?;
        let cert = out.entry(form.to_string()).or_default();
        if cert.entries.insert(key, comb).is_some() {
            return Err(line.pos.invalid(format!("entry ({},{}) certified twice", key.0 + 1, key.1 + 1)));
        }
    }
    Ok(out)
}

fn parse_omega(lines: &[Line], table: &SymbolTable, header: Pos) -> Result<(OmegaSet, Option<ExpectedClassification>), ScenarioError> {
    let mut omega = None;
    let mut verdict = None;
    let mut witnesses = Vec::new();
    for (k, v, vpos, pos) in key_values(lines)? {
        match k {
            "omega" => omega = Some(OmegaSet::new(field(v, vpos, table)?)),
            "verdict" => {
                verdict = Some(match v {
                    "NotIntegrable" => Verdict::NotIntegrable,
                    "CandidateIntegrable" => Verdict::CandidateIntegrable,
                    "Inconclusive" => Verdict::Inconclusive,
                    _ => return Err(vpos.syntax(format!("unknown verdict `{v}`"))),
                })
            }
            "witnesses" => witnesses = split_top(v).into_iter().map(|(_, w)| w.to_string()).filter(|w| !w.is_empty()).collect(),
            _ => return Err(pos.syntax(format!("unknown key `{k}`"))),
        }
    }
    let omega = omega.ok_or_else(|| header.invalid("missing `omega`"))?;
    Ok((omega, verdict.map(|verdict| ExpectedClassification { verdict, witnesses })))
}

fn parse_spectral(
    lines: &[Line],
    header: Pos,
    table: &SymbolTable,
    markers: &SymbolTable,
    sys: &EquationSystem,
    lp: &LinearProblem,
) -> Result<SpectralSpec, ScenarioError> {
    let mut generator = None;
    let mut kind = None;
    let mut parameter = None;
    let mut gauge_degree = None;
    let mut control_weights = None;
    let mut plus: [Option<([SuperExpr; DIM], Pos)>; DIM] = Default::default();
    let mut minus: [Option<([SuperExpr; DIM], Pos)>; DIM] = Default::default();
    let mut certificate = ReductionCertificate::default();
    for line in lines {
        if line.text.starts_with('(') {
            let (key, comb) = parse_cert_line(line.text, line.pos, markers, sys)?;
            certificate.entries.insert(key, comb);
            continue;
        }
        let (k, v, vpos) = split_once(line, '=')?;
        match k {
            "generator" => generator = Some(v.to_string()),
            "kind" => {
                kind = Some(match v {
                    "even" => ParameterKind::Even,
                    "odd" => ParameterKind::Odd,
                    _ => return Err(vpos.syntax("expected `even` or `odd`")),
                })
            }
            "parameter" => {
                let s = table.get(v).ok_or_else(|| ScenarioError::UndeclaredSymbol { line: line.pos.line, name: v.to_string() })?;
                if s.kind != SymbolKind::Constant {
                    return Err(line.pos.invalid(format!("`{v}` is not a constant")));
                }
                parameter = Some(v.to_string());
            }
            "gauge-degree" => gauge_degree = Some(v.parse().map_err(|_| vpos.syntax("expected a degree"))?),
            "control-weights" => {
                let ws: Vec<i32> = split_top(v).into_iter().map(|(_, w)| w.parse()).collect::<Result<_, _>>().map_err(|_| vpos.syntax("expected integers"))?;
                control_weights = Some(ws.try_into().map_err(|_| vpos.syntax(format!("expected {DIM} weights")))?);
            }
            _ => {
                if let Some(i) = row_key(k, "expect.plus") {
                    plus[i] = Some((row3(v, vpos, table)?, line.pos));
                } else if let Some(i) = row_key(k, "expect.minus") {
                    minus[i] = Some((row3(v, vpos, table)?, line.pos));
                } else {
                    return Err(line.pos.syntax(format!("unknown key `{k}`")));
                }
            }
        }
    }
    let frame = lp.plus.frame();
    let expect = |rows: &[Option<([SuperExpr; DIM], Pos)>; DIM], shift: Parity, what: &str| {
        if rows.iter().all(Option::is_none) {
            Ok(None)
        } else {
            matrix(rows, frame, shift, header, what).map(Some)
        }
    };
    Ok(SpectralSpec {
        generator: generator.ok_or_else(|| header.invalid("missing `generator`"))?,
        kind: kind.ok_or_else(|| header.invalid("missing `kind`"))?,
        parameter: parameter.ok_or_else(|| header.invalid("missing `parameter`"))?,
        gauge_degree,
        control_weights,
        expected_plus: expect(&plus, lp.ops[0].parity(), "expect.plus")?,
        expected_minus: expect(&minus, lp.ops[1].parity(), "expect.minus")?,
        certificate,
    })
}

/// Parse and validate a scenario.
pub fn parse_scenario(src: &str) -> Result<Scenario, ScenarioError> {
    let secs = sections(src)?;
    let find = |name: &str| secs.iter().find(|(h, _)| h.text == format!("[{name}]"));
    for (h, _) in &secs {
        let known = ["scenario", "symbols", "equations", "linear-problem", "algebra:nonlinear", "algebra:linear", "omega", "certificates", "spectral"];
        if !known.iter().any(|k| h.text == format!("[{k}]")) {
            return Err(h.pos.syntax(format!("unknown section `{}`", h.text)));
        }
        if secs.iter().filter(|(g, _)| g.text == h.text).count() > 1 {
            return Err(h.pos.invalid(format!("section `{}` appears twice", h.text)));
        }
    }
    let top = Pos { line: 1, column: 1 };
    let require = |name: &str| find(name).ok_or_else(|| top.invalid(format!("missing section [{name}]")));

    let (_, head) = require("scenario")?;
    let mut name = None;
    for (k, v, _, pos) in key_values(head)? {
        match k {
            "name" => name = Some(v.to_string()),
            _ => return Err(pos.syntax(format!("unknown key `{k}`"))),
        }
    }
    let name = name.ok_or_else(|| top.invalid("missing `name`"))?;

    let mut table = SymbolTable::new();
    let (declarations, aliases) = parse_symbols(&require("symbols")?.1, &mut table)?;
    let system = parse_equations(&require("equations")?.1, &table)?;
    let (lh, ll) = require("linear-problem")?;
    let linear = parse_linear(ll, lh.pos, &table)?;
    let nonlinear_algebra = parse_algebra(&require("algebra:nonlinear")?.1, &table)?;
    let linear_algebra = parse_algebra(&require("algebra:linear")?.1, &table)?;
    let (oh, ol) = require("omega")?;
    let (omega, expected) = parse_omega(ol, &table, oh.pos)?;
    let markers = marker_table(&table, &system).map_err(|e| top.expr(e))?;
    let certificates = match find("certificates") {
        Some((_, lines)) => parse_certificates(lines, &markers, &system, &linear.forms)?,
        None => BTreeMap::new(),
    };
    let spectral = match find("spectral") {
        Some((h, lines)) => {
            let s = parse_spectral(lines, h.pos, &table, &markers, &system, &linear.problem)?;
            if nonlinear_algebra.generator(&s.generator).is_none() {
                return Err(h.pos.invalid(format!("unknown generator `{}`", s.generator)));
            }
            Some(s)
        }
        None => None,
    };
    Ok(Scenario {
        name,
        declarations,
        table,
        aliases,
        system,
        linear,
        nonlinear_algebra,
        linear_algebra,
        omega,
        expected,
        certificates,
        spectral,
    })
}

// ---------------------------------------------------------------- rendering

fn render_row(r: &[SuperExpr; DIM]) -> String {
    format!("[{}]", r.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))
}

fn render_matrix(out: &mut String, prefix: &str, m: &SuperMatrix) {
    for (i, r) in m.entries().iter().enumerate() {
        let _ = writeln!(out, "{prefix}.{} = {}", i + 1, render_row(r));
    }
}

fn render_combination(sys: &EquationSystem, comb: &[(String, SuperExpr)]) -> String {
    let e = comb.iter().fold(SuperExpr::zero(), |acc, (n, c)| {
        let p = sys.get(n).and_then(|e| e.grade().parity()).unwrap_or(Parity::Even);
        &acc + &(c * &SuperExpr::symbol(&Symbol::constant(n, p)))
    });
    e.to_string()
}

fn render_algebra(out: &mut String, alg: &AlgebraPresentation) {
    for g in &alg.basis {
        let kw = g.origin.keyword().map(|k| format!("{k} ")).unwrap_or_default();
        let _ = writeln!(out, "{kw}{}: {}", g.name, g.field);
    }
    for r in &alg.table {
        let _ = writeln!(out, "{}", alg.render_row(r));
    }
}

/// Canonical text of a scenario; parses back to an equal scenario.
pub fn render(s: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[scenario]\nname = {}\n\n[symbols]", s.name);
    for d in &s.declarations {
        let _ = writeln!(out, "{}", d.render());
    }
    let _ = writeln!(out, "\n[equations]");
    for (n, e) in s.system.iter() {
        let _ = writeln!(out, "{n}: {e}");
    }
    let lp = &s.linear.problem;
    let forms: Vec<String> = s.linear.forms.iter().map(ToString::to_string).collect();
    let frame: Vec<&str> = lp.plus.frame().iter().map(|p| parity_word(*p)).collect();
    let _ = writeln!(out, "\n[linear-problem]\nform = {}\noperators = {}, {}\nframe-parity = {}", forms.join(", "), lp.ops[0], lp.ops[1], frame.join(", "));
    render_matrix(&mut out, "plus", &lp.plus);
    render_matrix(&mut out, "minus", &lp.minus);
    for f in &lp.frames {
        let _ = writeln!(out, "frame = {}", render_row(f));
    }
    let _ = writeln!(out, "\n[algebra:nonlinear]");
    render_algebra(&mut out, &s.nonlinear_algebra);
    let _ = writeln!(out, "\n[algebra:linear]");
    render_algebra(&mut out, &s.linear_algebra);
    let _ = writeln!(out, "\n[omega]\nomega = {}", s.omega.field);
    if let Some(e) = &s.expected {
        let _ = writeln!(out, "verdict = {}", e.verdict);
        if !e.witnesses.is_empty() {
            let _ = writeln!(out, "witnesses = {}", e.witnesses.join(", "));
        }
    }
    if !s.certificates.is_empty() {
        let _ = writeln!(out, "\n[certificates]");
        for (form, cert) in &s.certificates {
            for ((i, j), comb) in &cert.entries {
                let _ = writeln!(out, "{form} ({},{}) = {}", i + 1, j + 1, render_combination(&s.system, comb));
            }
        }
    }
    if let Some(sp) = &s.spectral {
        let _ = writeln!(out, "\n[spectral]\ngenerator = {}\nkind = {}\nparameter = {}", sp.generator, sp.kind, sp.parameter);
        if let Some(d) = sp.gauge_degree {
            let _ = writeln!(out, "gauge-degree = {d}");
        }
        if let Some(w) = sp.control_weights {
            let _ = writeln!(out, "control-weights = {}, {}, {}", w[0], w[1], w[2]);
        }
        if let Some(m) = &sp.expected_plus {
            render_matrix(&mut out, "expect.plus", m);
        }
        if let Some(m) = &sp.expected_minus {
            render_matrix(&mut out, "expect.minus", m);
        }
        for ((i, j), comb) in &sp.certificate.entries {
            let _ = writeln!(out, "({},{}) = {}", i + 1, j + 1, render_combination(&s.system, comb));
        }
    }
    out
}

// ---------------------------------------------------------------- running

/// Which check stages to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CheckSelection {
    pub tables: bool,
    pub invariance: bool,
    pub zcc: bool,
    pub classify: bool,
    pub spectral: bool,
    pub oracle: bool,
}

impl CheckSelection {
    pub fn all() -> Self {
        CheckSelection { tables: true, invariance: true, zcc: true, classify: true, spectral: true, oracle: true }
    }

    pub fn none() -> Self {
        CheckSelection::default()
    }

    pub fn is_empty(&self) -> bool {
        *self == CheckSelection::none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub checks: CheckSelection,
    /// Grassmann generator count for the kernel sample.
    pub generators: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { checks: CheckSelection::all(), generators: 8 }
    }
}

fn error_check(category: &str, name: impl Into<String>, e: impl std::fmt::Display) -> Check {
    Check::new(category, name, false, "error").with_payload(e.to_string())
}

fn matrices_equal(a: &SuperMatrix, b: &SuperMatrix) -> bool {
    (0..DIM).all(|i| (0..DIM).all(|j| (a.entry(i, j) - b.entry(i, j)).is_identically_zero()))
}

fn matrix_difference(a: &SuperMatrix, b: &SuperMatrix) -> String {
    let mut bad = Vec::new();
    for i in 0..DIM {
        for j in 0..DIM {
            if !(a.entry(i, j) - b.entry(i, j)).is_identically_zero() {
                bad.push(format!("({},{}): {} vs {}", i + 1, j + 1, a.entry(i, j), b.entry(i, j)));
            }
        }
    }
    bad.join("; ")
}

fn table_checks(s: &Scenario) -> Vec<Check> {
    let mut out = Vec::new();
    for (side, alg) in [("nonlinear", &s.nonlinear_algebra), ("linear", &s.linear_algebra)] {
        for mut c in crate::symalg::verify_table(alg) {
            c.name = format!("{side} {}", c.name);
            out.push(c);
        }
    }
    out
}

fn invariance_checks(s: &Scenario) -> Vec<Check> {
    let mut out = Vec::new();
    let nonlinear = InvarianceChecker::new(s.system.names(), s.system.equations(), &s.table, &s.aliases);
    for g in &s.nonlinear_algebra.basis {
        out.push(match nonlinear.check(&g.field) {
            Ok(o) => o.to_check("nonlinear system", &g.name),
            Err(e) => error_check("invariance", format!("{} on nonlinear system", g.name), e),
        });
    }
    match s.linear.problem.equations() {
        Ok(lin) => {
            let checker = InvarianceChecker::new(lin.names(), lin.equations(), &s.table, &s.aliases);
            for g in &s.linear_algebra.basis {
                out.push(match checker.check(&g.field) {
                    Ok(o) => o.to_check("linear problem", &g.name),
                    Err(e) => error_check("invariance", format!("{} on linear problem", g.name), e),
                });
            }
        }
        Err(e) => out.push(error_check("invariance", "linear problem equations", e)),
    }
    out
}

fn zcc_checks(s: &Scenario) -> Vec<Check> {
    let mut out = Vec::new();
    let empty = ReductionCertificate::default();
    for form in &s.linear.forms {
        let lp = s.linear.problem.with_form(*form);
        let residual = compute_zcc(&lp);
        let cert = s.certificates.get(&form.to_string()).unwrap_or(&empty);
        match verify_certificate(&residual, &s.system, cert) {
            Ok(outcome) => {
                for e in outcome.entries {
                    let c = Check::new("zcc", format!("{form} ({},{})", e.row + 1, e.col + 1), e.passed(), "certificate");
                    out.push(if e.passed() { c } else { c.with_payload(e.leftover.to_string()) });
                }
            }
            Err(e) => out.push(error_check("zcc", form.to_string(), e)),
        }
    }
    out
}

fn relation_name(r: SpanRelation) -> &'static str {
    match r {
        SpanRelation::Equal => "Equal",
        SpanRelation::ProperSubset { .. } => "ProperSubset",
        SpanRelation::Incomparable => "Incomparable",
    }
}

fn classify_checks(s: &Scenario, report: &mut VerificationReport) -> Vec<Check> {
    let c = match classify(&s.nonlinear_algebra, &s.linear_algebra, &s.omega) {
        Ok(c) => c,
        Err(e) => return vec![error_check("classify", "projection", e)],
    };
    report.verdict = Some(c.verdict.to_string());
    report.witnesses = c.witnesses.clone();
    let rel = relation_name(c.comparison.relation);
    let mut out = vec![Check::new("classify", "projection", true, format!("{} projected generators", c.projected.len()))];
    match &s.expected {
        Some(exp) => {
            out.push(Check::new("classify", "verdict", c.verdict == exp.verdict, format!("{} ({rel})", c.verdict)));
            let ok = c.witnesses == exp.witnesses;
            let w = Check::new("classify", "witnesses", ok, format!("[{}]", c.witnesses.join(", ")));
            out.push(if ok { w } else { w.with_payload(format!("expected [{}]", exp.witnesses.join(", "))) });
        }
        None => out.push(Check::new("classify", "verdict", true, format!("{} ({rel})", c.verdict))),
    }
    out
}

fn spectral_checks(s: &Scenario, sp: &SpectralSpec, report: &mut VerificationReport) -> Result<Vec<Check>, SpectralError> {
    let mut out = Vec::new();
    let gen = s.nonlinear_algebra.generator(&sp.generator).ok_or_else(|| AlgError::UnknownGenerator(sp.generator.clone()))?;
    let projected: Vec<SuperVectorField> = classify(&s.nonlinear_algebra, &s.linear_algebra, &s.omega)?
        .projected
        .into_iter()
        .map(|(_, f)| f)
        .collect();
    let param: Sym = s.table.lookup(&sp.parameter)?.clone();
    let plp = insert_parameter(&s.linear.problem, &gen.name, &gen.field, &projected, sp.kind, &param, &s.table, &s.aliases)?;
    out.push(Check::new("spectral", format!("insert {} along {}", sp.parameter, sp.generator), true, format!("{} parameter", sp.kind)));
    for (what, got, expected) in [("plus", &plp.family.plus, &sp.expected_plus), ("minus", &plp.family.minus, &sp.expected_minus)] {
        if let Some(m) = expected {
            let ok = matrices_equal(got, m);
            let c = Check::new("spectral", format!("family {what} matrix"), ok, "matches expected");
            out.push(if ok { c } else { c.with_payload(matrix_difference(got, m)) });
        }
    }
    out.extend(verify_family(&plp, &s.system, &sp.certificate)?);
    if let Some(d) = sp.gauge_degree {
        let ansatz = GaugeAnsatz { degree: d };
        let outcome = gauge_falsifier(&plp, ansatz)?;
        out.push(outcome.to_check(&format!("{} family", sp.parameter), ansatz, false));
        let class = match sp.kind {
            ParameterKind::Even => format!("gauge ansatz: entries sum t_k*{p}^k, |k| < {d}, in even slots", p = sp.parameter),
            ParameterKind::Odd => format!("gauge ansatz: g = 1 + G, G entries t or t*{p} by slot parity", p = sp.parameter),
        };
        report.notes.push(class);
        report.notes.push("no gauge within the ansatz is evidence of non-removability, not a proof".into());
        if let (Some(w), ParameterKind::Even) = (sp.control_weights, sp.kind) {
            let control = control_family(&s.linear.problem, w, &param)?;
            let outcome = gauge_falsifier(&control, ansatz)?;
            out.push(outcome.to_check(&format!("control family diag({}^w), w = ({}, {}, {})", sp.parameter, w[0], w[1], w[2]), ansatz, true));
        }
    }
    Ok(out)
}

/// Every expression the scenario mentions, in file order.
fn scenario_expressions(s: &Scenario) -> Vec<SuperExpr> {
    let lp = &s.linear.problem;
    let mut out: Vec<SuperExpr> = s.system.equations().to_vec();
    for m in [&lp.plus, &lp.minus] {
        out.extend(m.entries().iter().flatten().cloned());
    }
    out.extend(lp.frames.iter().flatten().cloned());
    out.retain(|e| !e.is_zero());
    out
}

fn oracle_checks(s: &Scenario, generators: usize) -> Vec<Check> {
    let mut out = vec![kernel_sample(generators)];
    if s.table.superspace_coords().is_none() {
        return out;
    }
    let exprs = scenario_expressions(s);
    let ops: Vec<SuperOperator> = ["Dp", "Dm"].iter().filter_map(|o| SuperOperator::parse(o, &s.table).ok()).collect();
    let mut bad_d = Vec::new();
    let mut bad_mul = Vec::new();
    let mut expanded = Vec::new();
    for e in &exprs {
        match to_grassmann(e, &s.table) {
            Ok(g) => expanded.push(Some(g)),
            Err(err) => {
                bad_d.push(format!("{e}: {err}"));
                expanded.push(None);
            }
        }
    }
    for (e, g) in exprs.iter().zip(&expanded) {
        let Some(g) = g else { continue };
        for op in &ops {
            let direct = to_grassmann(&op.apply(e), &s.table);
            let via = apply_to_components(op, g, &s.table);
            match (direct, via) {
                (Ok(a), Ok(b)) if a == b => {}
                (a, b) => bad_d.push(format!("{op}({e}): {a:?} vs {b:?}")),
            }
        }
    }
    let n = exprs.len();
    for k in 0..n {
        let (a, b) = (&exprs[k], &exprs[(k + 1) % n]);
        let (Some(ga), Some(gb)) = (&expanded[k], &expanded[(k + 1) % n]) else { continue };
        let direct = to_grassmann(&(a * b), &s.table);
        match (direct, ga.multiply(gb)) {
            (Ok(x), Ok(y)) if x == y => {}
            (x, y) => bad_mul.push(format!("({a})*({b}): {x:?} vs {y:?}")),
        }
    }
    let c = Check::new("oracle", "expansion commutes with Dp, Dm", bad_d.is_empty(), format!("{n} expressions"));
    out.push(if bad_d.is_empty() { c } else { c.with_payload(bad_d.join("; ")) });
    let c = Check::new("oracle", "expansion is multiplicative", bad_mul.is_empty(), format!("{n} products"));
    out.push(if bad_mul.is_empty() { c } else { c.with_payload(bad_mul.join("; ")) });
    out
}

type Number = GrassmannNumber<Cq>;

fn random_element(rng: &mut ChaCha8Rng, k: usize, parity: Option<Parity>) -> Number {
    let mut terms = Vec::new();
    for _ in 0..6 {
        let mut mask: u32 = rng.gen_range(0..(1u32 << k));
        if let Some(p) = parity {
            if (mask.count_ones() % 2 == 1) != p.is_odd() {
                mask ^= 1;
            }
        }
        let c = Cq::new(
            num_rational::BigRational::new(rng.gen_range(-5i64..=5).into(), rng.gen_range(1i64..=3).into()),
            num_rational::BigRational::from_integer(rng.gen_range(-2i64..=2).into()),
        );
        let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
        terms.push((GeneratorSet::from_indices(&idx), c));
    }
    Number::from_terms(k, terms).expect("generators within size")
}

/// Associativity, graded commutativity, odd squares and inverses on a
/// deterministic random sample.
fn kernel_sample(k: usize) -> Check {
    const SAMPLES: usize = 64;
    let name = format!("Grassmann kernel laws, {k} generators");
    if !(1..=crate::grassmann::MAX_GENERATORS).contains(&k) {
        return Check::new("oracle", name, false, format!("generator count must be in 1..={}", crate::grassmann::MAX_GENERATORS));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
    let mut failures = Vec::new();
    for n in 0..SAMPLES {
        let r = (|| -> Result<Option<&'static str>, crate::grassmann::GrassmannError> {
            let a = random_element(&mut rng, k, None);
            let b = random_element(&mut rng, k, None);
            let c = random_element(&mut rng, k, None);
            if a.multiply(&b)?.multiply(&c)? != a.multiply(&b.multiply(&c)?)? {
                return Ok(Some("associativity"));
            }
            let pa = if rng.gen_bool(0.5) { Parity::Odd } else { Parity::Even };
            let pb = if rng.gen_bool(0.5) { Parity::Odd } else { Parity::Even };
            let x = random_element(&mut rng, k, Some(pa));
            let y = random_element(&mut rng, k, Some(pb));
            let xy = x.multiply(&y)?;
            let yx = y.multiply(&x)?;
            let expected = if pa.is_odd() && pb.is_odd() { yx.neg() } else { yx };
            if xy != expected {
                return Ok(Some("graded commutativity"));
            }
            if pa.is_odd() && !x.multiply(&x)?.is_zero() {
                return Ok(Some("odd square"));
            }
            let body = Number::scalar(k, Cq::int(rng.gen_range(1..=4)))?;
            let u = body.add(&a.soul())?;
            let inv = u.invert()?;
            let one = Number::scalar(k, Cq::one())?;
            if u.multiply(&inv)? != one || inv.multiply(&u)? != one {
                return Ok(Some("inverse"));
            }
            Ok(None)
        })();
        match r {
            Ok(None) => {}
            Ok(Some(law)) => failures.push(format!("sample {n}: {law}")),
            Err(e) => failures.push(format!("sample {n}: {e}")),
        }
    }
    let c = Check::new("oracle", name, failures.is_empty(), format!("{SAMPLES} samples"));
    if failures.is_empty() {
        c
    } else {
        c.with_payload(failures.join("; "))
    }
}

/// Run the selected stages in dependency order: tables, invariance, ZCC,
/// classification, spectral insertion, then the oracle checks.
pub fn run(s: &Scenario, opts: &RunOptions) -> VerificationReport {
    let mut report = VerificationReport::new(&s.name);
    let sel = opts.checks;
    if sel.tables {
        report.extend(table_checks(s));
    }
    if sel.invariance {
        report.extend(invariance_checks(s));
    }
    if sel.zcc {
        report.extend(zcc_checks(s));
    }
    if sel.classify {
        let checks = classify_checks(s, &mut report);
        report.extend(checks);
    }
    if sel.spectral {
        if let Some(sp) = &s.spectral {
            match spectral_checks(s, sp, &mut report) {
                Ok(checks) => report.extend(checks),
                Err(e) => report.push(error_check("spectral", format!("insert {} along {}", sp.parameter, sp.generator), e)),
            }
        }
    }
    if sel.oracle {
        report.extend(oracle_checks(s, opts.generators));
    }
    report
}

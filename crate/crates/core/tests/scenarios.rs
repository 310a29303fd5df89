//! Scenario files: round trips, error reporting, and the command line.

use std::process::Command;

use superfield::grassmann::Parity;
use superfield::scenario::{builtin_names, builtin_source, load, parse_scenario, render, ScenarioError};
use superfield::superexpr::{expand_components, parse_expr, SymbolTable};

#[test]
fn builtins_round_trip() {
    for name in builtin_names() {
        let s = parse_scenario(builtin_source(name).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(s.name, name);
        let text = render(&s);
        let back = parse_scenario(&text).unwrap_or_else(|e| panic!("{name} rendered: {e}\n{text}"));
        assert_eq!(back, s, "{name}");
        assert_eq!(render(&back), text);
    }
}

#[test]
fn unknown_names_are_reported() {
    assert_eq!(load("kdv").unwrap_err(), ScenarioError::UnknownScenario("kdv".into()));
}

/// Minimal scenario with one replaceable line in each section.
fn minimal(symbols: &str, equation: &str) -> String {
    format!(
        "[scenario]
name = tiny

[symbols]
superspace
superfield Phi even components p0 p1 p2 p3
{symbols}

[equations]
sg: {equation}

[linear-problem]
form = bosonic-E+
operators = Dp, Dm
frame-parity = even, even, odd
plus.1 = [0, 0, 0]
plus.2 = [0, 0, 0]
plus.3 = [0, 0, 0]
minus.1 = [0, 0, 0]
minus.2 = [0, 0, 0]
minus.3 = [0, 0, 0]

[algebra:nonlinear]
P_p: dxp

[algebra:linear]
P_p: dxp

[omega]
omega = xp*dxp
"
    )
}

#[test]
fn minimal_scenario_parses() {
    let s = parse_scenario(&minimal("", "Dp(Dm(Phi)) - I*sin(Phi)")).unwrap();
    assert_eq!(s.system.len(), 1);
    assert!(s.certificates.is_empty());
}

#[test]
fn odd_superfield_with_even_component_is_a_parity_error() {
    // `a` is already an even field, so it cannot be the odd body of Psi.
    let src = minimal("field a even\nsuperfield Psi odd components a b c d", "Phi");
    match parse_scenario(&src) {
        Err(ScenarioError::Parity { line, .. }) => assert_eq!(line, 8),
        other => panic!("expected a parity error, got {other:?}"),
    }
}

#[test]
fn wrong_entry_parity_is_a_parity_error() {
    let src = minimal("", "Phi").replace("plus.1 = [0, 0, 0]", "plus.1 = [Phi, 0, 0]");
    assert!(matches!(parse_scenario(&src), Err(ScenarioError::Parity { .. })), "{:?}", parse_scenario(&src));
}

#[test]
fn unclosed_operator_is_a_syntax_error_with_position() {
    let src = minimal("", "Dp(");
    match parse_scenario(&src) {
        Err(ScenarioError::Syntax { line, column, .. }) => {
            assert_eq!(line, 10);
            // End of input, just past `sg: Dp(`.
            assert_eq!(column, 8);
        }
        other => panic!("expected a syntax error, got {other:?}"),
    }
}

#[test]
fn undeclared_symbols_carry_the_line() {
    let src = minimal("", "Dp(Chi)");
    assert_eq!(parse_scenario(&src).unwrap_err(), ScenarioError::UndeclaredSymbol { line: 10, name: "Chi".into() });
}

#[test]
fn covariant_derivative_expansion_is_frozen() {
    let mut t = SymbolTable::superspace();
    t.declare_superfield("Phi", Parity::Even, &["xp", "xm", "tp", "tm"], ["p0", "p1", "p2", "p3"]).unwrap();
    let got = expand_components(&parse_expr("Dp(Phi)", &t).unwrap(), &t).unwrap();
    let want = ["p1", "-I*dxp(p0)", "p3", "-I*dxp(p2)"].map(|s| parse_expr(s, &t).unwrap());
    assert_eq!(got, want);
    let got = expand_components(&parse_expr("Dm(Phi)", &t).unwrap(), &t).unwrap();
    let want = ["p2", "-p3", "-I*dxm(p0)", "I*dxm(p1)"].map(|s| parse_expr(s, &t).unwrap());
    assert_eq!(got, want);
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_superfield")).args(args).output().unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn cli_exit_codes_follow_the_report() {
    let (code, text) = cli(&["verify", "susy-sine-gordon"]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("verdict: CandidateIntegrable"));
    let (code, _) = cli(&["verify", "bosonic-susy-gc", "--zcc"]);
    assert_eq!(code, 1);
    let (code, _) = cli(&["verify", "no-such-scenario"]);
    assert_eq!(code, 2);
}

#[test]
fn cli_json_is_parseable() {
    let (code, text) = cli(&["verify", "classical-gc", "--classify", "--tables", "--format", "json"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["status"], "pass");
    assert_eq!(v["verdict"], "NotIntegrable");
    assert_eq!(v["failed"], 0);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["category"] == "table" || c["category"] == "classify"));
}

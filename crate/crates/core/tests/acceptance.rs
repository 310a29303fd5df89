//! Acceptance criteria 1-10, one PASS/FAIL line each.
//!
//! Criterion 4 and the odd half of criterion 7 are known not to hold with
//! the shipped equations: two ZCC entries keep a leftover. Those lines print
//! FAIL, and the test asserts that exact diagnosis instead of a pass.

use std::collections::BTreeSet;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use superfield::coeff::Cq;
use superfield::frames::{compute_zcc, DIM};
use superfield::grassmann::{GeneratorSet, GrassmannNumber, Parity};
use superfield::report::{Check, VerificationReport};
use superfield::scenario::{load_builtin, run, CheckSelection, RunOptions, Scenario};
use superfield::superexpr::{parse_expr, to_explicit, SuperExpr, SuperOperator, SymbolTable};

type Number = GrassmannNumber<Cq>;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn scenario(name: &str) -> Scenario {
    load_builtin(name).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn stage(name: &str, pick: impl FnOnce(&mut CheckSelection)) -> VerificationReport {
    let mut checks = CheckSelection::none();
    pick(&mut checks);
    run(&scenario(name), &RunOptions { checks, generators: 8 })
}

fn failing(r: &VerificationReport) -> Vec<&Check> {
    r.failures().collect()
}

// ---------------------------------------------------------------- 1

/// Reference product on coefficient maps: sign from counting transpositions
/// while concatenating sorted index lists.
fn reference_product(a: &Number, b: &Number, k: usize) -> Number {
    let mut terms = Vec::new();
    for (ma, ca) in a.terms() {
        for (mb, cb) in b.terms() {
            if ma.bits() & mb.bits() != 0 {
                continue;
            }
            let mut swaps = 0;
            for i in ma.indices() {
                swaps += mb.indices().filter(|j| *j < i).count();
            }
            let c = &(ca * cb) * &Cq::int(if swaps % 2 == 0 { 1 } else { -1 });
            terms.push((GeneratorSet::from_indices(&ma.indices().chain(mb.indices()).collect::<Vec<_>>()), c));
        }
    }
    Number::from_terms(k, terms).unwrap()
}

fn random_number(rng: &mut ChaCha8Rng, k: usize, parity: Option<Parity>) -> Number {
    let mut terms = Vec::new();
    for _ in 0..rng.gen_range(1..6) {
        let mut mask: u32 = rng.gen_range(0..(1u32 << k));
        if let Some(p) = parity {
            if (mask.count_ones() % 2 == 1) != p.is_odd() {
                mask ^= 1;
            }
        }
        let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
        let c = Cq::new(
            BigRational::new(rng.gen_range(-7i64..=7).into(), rng.gen_range(1i64..=4).into()),
            BigRational::from_integer(rng.gen_range(-3i64..=3).into()),
        );
        terms.push((GeneratorSet::from_indices(&idx), c));
    }
    Number::from_terms(k, terms).unwrap()
}

fn criterion_1() -> Outcome {
    const K: usize = 8;
    const CASES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let one = Number::scalar(K, Cq::one()).unwrap();
    let mut bad = Vec::new();
    for n in 0..CASES {
        let (a, b, c) = (random_number(&mut rng, K, None), random_number(&mut rng, K, None), random_number(&mut rng, K, None));
        let ab = a.multiply(&b).unwrap();
        if ab != reference_product(&a, &b, K) {
            bad.push(format!("{n}: product"));
        }
        if ab.multiply(&c).unwrap() != a.multiply(&b.multiply(&c).unwrap()).unwrap() {
            bad.push(format!("{n}: associativity"));
        }
        let (pa, pb) = (Parity::from_bit(rng.gen()), Parity::from_bit(rng.gen()));
        let x = random_number(&mut rng, K, Some(pa));
        let y = random_number(&mut rng, K, Some(pb));
        let yx = y.multiply(&x).unwrap();
        let expected = if pa.is_odd() && pb.is_odd() { yx.neg() } else { yx };
        if x.multiply(&y).unwrap() != expected {
            bad.push(format!("{n}: graded commutativity"));
        }
        if pa.is_odd() && !x.multiply(&x).unwrap().is_zero() {
            bad.push(format!("{n}: odd square"));
        }
        let body = Cq::new(BigRational::from_integer(rng.gen_range(1i64..=5).into()), BigRational::from_integer(rng.gen_range(-2i64..=2).into()));
        let u = Number::scalar(K, body).unwrap().add(&a.soul()).unwrap();
        let inv = u.invert().unwrap();
        if u.multiply(&inv).unwrap() != one || inv.multiply(&u).unwrap() != one {
            bad.push(format!("{n}: inverse"));
        }
        if a.soul().invert().is_ok() {
            bad.push(format!("{n}: nilpotent element inverted"));
        }
    }
    outcome(bad.is_empty(), format!("{CASES} cases at k={K}, {} violations {:?}", bad.len(), bad.iter().take(3).collect::<Vec<_>>()))
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let mut t = SymbolTable::superspace();
    t.declare_superfield("Phi", Parity::Even, &["xp", "xm", "tp", "tm"], ["p0", "p1", "p2", "p3"]).unwrap();
    let phi = parse_expr("Phi", &t).unwrap();
    let op = |n: &str| SuperOperator::parse(n, &t).unwrap();
    let anti = |a: &str, b: &str| {
        let (a, b) = (op(a), op(b));
        &a.apply(&b.apply(&phi)) + &b.apply(&a.apply(&phi))
    };
    let e = |s: &str| parse_expr(s, &t).unwrap();
    let cases = [
        ("{Jp,Jp}", anti("Jp", "Jp"), e("2*I*dxp(Phi)")),
        ("{Jm,Jm}", anti("Jm", "Jm"), e("2*I*dxm(Phi)")),
        ("{Jp,Jm}", anti("Jp", "Jm"), SuperExpr::zero()),
        ("{Dp,Dp}", anti("Dp", "Dp"), e("-2*I*dxp(Phi)")),
        ("{Dm,Dm}", anti("Dm", "Dm"), e("-2*I*dxm(Phi)")),
        ("{Dp,Dm}", anti("Dp", "Dm"), SuperExpr::zero()),
        ("{Jp,Dp}", anti("Jp", "Dp"), SuperExpr::zero()),
        ("{Jp,Dm}", anti("Jp", "Dm"), SuperExpr::zero()),
        ("{Jm,Dp}", anti("Jm", "Dp"), SuperExpr::zero()),
        ("{Jm,Dm}", anti("Jm", "Dm"), SuperExpr::zero()),
        ("Dp^2", op("Dp").apply(&op("Dp").apply(&phi)), e("-I*dxp(Phi)")),
        ("Dm^2", op("Dm").apply(&op("Dm").apply(&phi)), e("-I*dxm(Phi)")),
        ("Jp^2", op("Jp").apply(&op("Jp").apply(&phi)), e("I*dxp(Phi)")),
        ("Jm^2", op("Jm").apply(&op("Jm").apply(&phi)), e("I*dxm(Phi)")),
    ];
    let mut bad = Vec::new();
    for (name, got, want) in &cases {
        // Structural zero on the explicit component form.
        let r = to_explicit(&(got - want), &t).unwrap();
        if !r.is_zero() {
            bad.push(format!("{name}: {r}"));
        }
    }
    outcome(bad.is_empty(), format!("{} identities, residuals {:?}", cases.len(), bad))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let s = scenario("classical-gc");
    let r = stage("classical-gc", |c| c.zcc = true);
    let certified = r.passed() && r.checks.len() == DIM * DIM;
    // Hand-derived residual of dzb(V1) - dz(V2) + [V1, V2].
    let oracle = [
        ["dzb(dz(u)) + 1/2*H^2*exp(u) - 2*Q*Qb*exp(-u)", "0", "dzb(Q) - 1/2*exp(u)*dz(H)"],
        ["0", "-dzb(dz(u)) - 1/2*H^2*exp(u) + 2*Q*Qb*exp(-u)", "1/2*exp(u)*dzb(H) - dz(Qb)"],
        ["2*exp(-u)*dz(Qb) - dzb(H)", "dz(H) - 2*exp(-u)*dzb(Q)", "0"],
    ];
    let residual = compute_zcc(&s.linear.problem);
    let mut bad = Vec::new();
    for i in 0..DIM {
        for j in 0..DIM {
            let want = parse_expr(oracle[i][j], &s.table).unwrap();
            if !(residual.entry(i, j) - &want).is_identically_zero() {
                bad.push(format!("({},{})", i + 1, j + 1));
            }
        }
    }
    let independent = s.system.len() == 3;
    outcome(
        certified && bad.is_empty() && independent,
        format!("{} entries certified against {} equations, oracle mismatches {:?}", r.checks.iter().filter(|c| c.passed()).count(), s.system.len(), bad),
    )
}

// ---------------------------------------------------------------- 4

fn uncertified(r: &VerificationReport) -> BTreeSet<String> {
    failing(r).iter().map(|c| c.name.clone()).collect()
}

fn criterion_4() -> Outcome {
    let b = stage("bosonic-susy-gc", |c| c.zcc = true);
    let f = stage("fermionic-susy-gc", |c| c.zcc = true);
    let b_bad = uncertified(&b);
    let f_bad = uncertified(&f);
    let expected_b: BTreeSet<String> =
        ["bosonic-E+ (1,3)", "bosonic-E+ (2,3)", "bosonic-E- (1,3)", "bosonic-E- (2,3)"].iter().map(|s| s.to_string()).collect();
    let expected_f: BTreeSet<String> = ["fermionic (1,3)", "fermionic (2,3)"].iter().map(|s| s.to_string()).collect();
    assert_eq!(b_bad, expected_b, "bosonic ZCC diagnosis changed");
    assert_eq!(f_bad, expected_f, "fermionic ZCC diagnosis changed");
    for c in failing(&b).into_iter().chain(failing(&f)) {
        let leftover = c.payload.as_deref().unwrap_or("");
        assert!(leftover.contains("(phi)"), "{}: leftover should carry phi derivatives: {leftover}", c.name);
    }
    // Both E signs leave the same residual.
    let payload = |r: &VerificationReport, n: &str| r.checks.iter().find(|c| c.name == n).and_then(|c| c.payload.clone());
    assert_eq!(payload(&b, "bosonic-E+ (1,3)"), payload(&b, "bosonic-E- (1,3)"));
    let ok = b.passed() && f.passed();
    outcome(
        ok,
        format!(
            "bosonic {}/{} entries, fermionic {}/{} entries certify; (1,3) and (2,3) leave a D(phi) leftover",
            b.checks.len() - b_bad.len(),
            b.checks.len(),
            f.checks.len() - f_bad.len(),
            f.checks.len()
        ),
    )
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Outcome {
    let mut total = 0;
    let mut listed = 0;
    let mut bad = Vec::new();
    for name in ["classical-gc", "bosonic-susy-gc", "fermionic-susy-gc", "susy-sine-gordon"] {
        let r = stage(name, |c| c.tables = true);
        total += r.checks.len();
        listed += r.checks.iter().filter(|c| c.detail == "stated").count();
        bad.extend(failing(&r).iter().map(|c| format!("{name}: {}", c.name)));
        let zero_checks = r.checks.iter().filter(|c| c.name.ends_with("unlisted brackets vanish")).count();
        if zero_checks != 2 {
            bad.push(format!("{name}: {zero_checks} vanishing checks"));
        }
    }
    outcome(bad.is_empty() && listed > 0, format!("{total} table checks ({listed} stated relations), failures {bad:?}"))
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let expect = [
        ("classical-gc", "NotIntegrable (Equal)", ""),
        ("bosonic-susy-gc", "NotIntegrable (Equal)", ""),
        ("fermionic-susy-gc", "CandidateIntegrable (ProperSubset)", "W"),
        ("susy-sine-gordon", "CandidateIntegrable (ProperSubset)", "K"),
    ];
    let mut bad = Vec::new();
    for (name, verdict, witness) in expect {
        let r = stage(name, |c| c.classify = true);
        let got = r.checks.iter().find(|c| c.name == "verdict").map(|c| c.detail.clone()).unwrap_or_default();
        if got != verdict || r.witnesses.join(",") != witness || !r.passed() {
            bad.push(format!("{name}: {got} [{}]", r.witnesses.join(",")));
        }
    }
    outcome(bad.is_empty(), format!("4 verdicts, mismatches {bad:?}"))
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let sg = stage("susy-sine-gordon", |c| c.spectral = true);
    let family_ok = |r: &VerificationReport| {
        r.checks.iter().filter(|c| c.name.starts_with("family") || c.name.starts_with("insert") || c.name.starts_with("reduction")).all(Check::passed)
    };
    let even = family_ok(&sg) && sg.checks.iter().any(|c| c.name == "family plus matrix" && c.passed());
    let odd = stage("fermionic-susy-gc", |c| c.spectral = true);
    let odd_bad: BTreeSet<String> = failing(&odd).iter().map(|c| c.name.clone()).collect();
    let matrices = odd.checks.iter().filter(|c| c.name.ends_with("matrix")).all(Check::passed);
    assert!(even, "even insertion must certify: {}", sg.to_text());
    assert!(matrices, "odd insertion must reproduce the shifted matrices");
    assert_eq!(odd_bad, ["family (1,3)", "family (2,3)"].iter().map(|s| s.to_string()).collect(), "odd family diagnosis changed");
    outcome(
        even && odd.passed(),
        format!("mu family reproduced and certified; lb family matrices match, family entries {odd_bad:?} uncertified"),
    )
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let mut t = SymbolTable::superspace();
    t.declare_superfield("phi", Parity::Even, &["xp", "xm", "tp", "tm"], ["phi0", "phi1", "phi2", "phi3"]).unwrap();
    let mut bad = Vec::new();
    for (src, display) in [
        ("exp(phi)", "exp(phi0)*(1 + tp*phi1 + tm*phi2 + tp*tm*phi3 - tp*tm*phi1*phi2)"),
        ("exp(-phi)", "exp(-phi0)*(1 - tp*phi1 - tm*phi2 - tp*tm*phi3 - tp*tm*phi1*phi2)"),
    ] {
        let got = to_explicit(&parse_expr(src, &t).unwrap(), &t).unwrap();
        let want = parse_expr(display, &t).unwrap();
        if got != want {
            bad.push(format!("{src} = {got}"));
        }
    }
    outcome(bad.is_empty(), format!("exp(+phi), exp(-phi) term by term, mismatches {bad:?}"))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let mut bad = Vec::new();
    let mut n = 0;
    for name in ["bosonic-susy-gc", "fermionic-susy-gc", "susy-sine-gordon"] {
        let r = stage(name, |c| c.oracle = true);
        n += r.checks.len();
        bad.extend(failing(&r).iter().map(|c| format!("{name}: {}", c.name)));
    }
    outcome(bad.is_empty(), format!("{n} oracle checks over the superspace scenarios, failures {bad:?}"))
}

// ---------------------------------------------------------------- 10

fn criterion_10() -> Outcome {
    let r = stage("susy-sine-gordon", |c| c.spectral = true);
    let gauge: Vec<&Check> = r.checks.iter().filter(|c| c.name.starts_with("gauge falsifier")).collect();
    let none = gauge.iter().any(|c| c.name.contains("mu family") && c.detail.starts_with("no gauge") && c.passed());
    let found = gauge.iter().any(|c| c.name.contains("control family") && c.detail.starts_with("gauge found") && c.passed());
    outcome(none && found && gauge.len() == 2, gauge.iter().map(|c| format!("{}: {}", c.name, c.detail)).collect::<Vec<_>>().join("; "))
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    // Criteria whose failure is documented and asserted inside the criterion.
    let known_failures = [4, 7];
    let mut unexpected = Vec::new();
    for (n, f) in criteria {
        let o = f();
        println!("criterion {n:>2}: {}: {}", if o.ok { "PASS" } else { "FAIL" }, o.detail);
        if o.ok == known_failures.contains(&n) {
            unexpected.push(n);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("criteria with unexpected outcome: {unexpected:?}");
        std::process::exit(1);
    }
}

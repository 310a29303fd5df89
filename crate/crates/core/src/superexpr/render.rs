//! Canonical text rendering. Output parses back to the same normal form.

use std::fmt;

use crate::coeff::Cq;

use super::{Atom, Monomial, SuperExpr};

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Sym { sym, index } => {
                let mut s = sym.name.clone();
                for (c, n) in index.entries() {
                    for _ in 0..*n {
                        s = format!("d{}({s})", c.name);
                    }
                }
                f.write_str(&s)
            }
            Atom::Func { f: func, arg } => write!(f, "{func}({arg})"),
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return f.write_str("1");
        }
        for (i, (a, k)) in self.factors().iter().enumerate() {
            if i > 0 {
                f.write_str("*")?;
            }
            match k {
                1 => write!(f, "{a}")?,
                k => write!(f, "{a}^{k}")?,
            }
        }
        Ok(())
    }
}

fn render_term(m: &Monomial, c: &Cq) -> String {
    if m.is_one() {
        return c.to_string();
    }
    if c.is_one() {
        m.to_string()
    } else if (-c).is_one() {
        format!("-{m}")
    } else {
        format!("{c}*{m}")
    }
}

impl fmt::Display for SuperExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms().enumerate() {
            let t = render_term(m, c);
            match (i, t.strip_prefix('-')) {
                (0, _) => f.write_str(&t)?,
                (_, Some(rest)) => write!(f, " - {rest}")?,
                (_, None) => write!(f, " + {t}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use crate::grassmann::Parity;
    use crate::superexpr::{parse_expr, SymbolTable};

    #[test]
    fn renders_and_round_trips() {
        let mut t = SymbolTable::superspace();
        t.declare_field("Phi", Parity::Even, &["xp", "xm", "tp", "tm"]).unwrap();
        t.declare_field("H", Parity::Odd, &["xp", "xm", "tp", "tm"]).unwrap();
        for src in [
            "Phi",
            "-1/2*I*exp(Phi)*H",
            "tp*tm*dtm(dtp(Phi)) - (1 - I)*dxp(dxp(H))",
            "Phi^3 - 2 + sin(2*Phi - 1)",
            "I*dtp(H)*Dm(H)",
        ] {
            let e = parse_expr(src, &t).unwrap();
            let back = parse_expr(&e.to_string(), &t).unwrap();
            assert_eq!(e, back, "{src} -> {e}");
        }
        assert_eq!(parse_expr("tm*tp", &t).unwrap().to_string(), "-tp*tm");
        assert_eq!(parse_expr("dtm(dtp(Phi))", &t).unwrap().to_string(), "dtm(dtp(Phi))");
        assert_eq!(parse_expr("dtp(dtm(Phi))", &t).unwrap().to_string(), "-dtm(dtp(Phi))");
    }
}

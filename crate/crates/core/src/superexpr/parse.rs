//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' int | '^' '-' int | '^' '(' ['-'] int ')')?
//! atom  := integer | 'I' | name | call | '(' expr ')'
//! call  := ('exp' | 'sin' | 'cos' | 'Dp' | 'Dm' | 'Jp' | 'Jm' | 'd'coord) '(' expr ')'
//! ```
//!
//! Division is allowed by invertible monomials only (numbers, invertible
//! constants and parameters).

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::coeff::Cq;
use crate::func::Function;

use super::{ExprError, SuperExpr, SuperOperator, SymbolTable};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            out.push((Tok::Int(s.parse().expect("digits")), col));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), col));
            i += 1;
        } else {
            return Err(ExprError::Syntax { column: col, message: format!("unexpected character `{c}`") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
    table: &'a SymbolTable,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map(|(_, c)| *c).unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax { column: self.column(), message: message.into() })
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Op(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ExprError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn expr(&mut self) -> Result<SuperExpr, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<SuperExpr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let col = self.column();
                let d = self.unary()?;
                let inv = d.inverse().map_err(|_| ExprError::Syntax {
                    column: col,
                    message: format!("cannot divide by `{d}`"),
                })?;
                acc = &acc * &inv;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<SuperExpr, ExprError> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        self.power()
    }

    fn int_exponent(&mut self) -> Result<i32, ExprError> {
        let paren = self.eat('(');
        let negative = self.eat('-');
        let n = match self.peek() {
            Some(Tok::Int(n)) => {
                let n = i32::try_from(n.clone()).or_else(|_| self.err("exponent too large"))?;
                self.pos += 1;
                n
            }
            _ => return self.err("expected integer exponent"),
        };
        if paren {
            self.expect(')')?;
        }
        Ok(if negative { -n } else { n })
    }

    fn power(&mut self) -> Result<SuperExpr, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            let col = self.column();
            let n = self.int_exponent()?;
            return base.pow(n).map_err(|_| ExprError::Syntax {
                column: col,
                message: format!("negative power of non-invertible `{base}`"),
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<SuperExpr, ExprError> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(SuperExpr::constant(Cq::new(BigRational::from_integer(n), BigRational::from_integer(0.into()))))
            }
            Some(Tok::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if name == "I" {
                    return Ok(SuperExpr::i());
                }
                if self.peek() == Some(&Tok::Op('(')) && !self.table.contains(&name) {
                    return self.call(&name);
                }
                Ok(SuperExpr::symbol(self.table.lookup(&name)?))
            }
            Some(Tok::Op(c)) => self.err(format!("unexpected `{c}`")),
            None => self.err("unexpected end of input"),
        }
    }

    fn call(&mut self, name: &str) -> Result<SuperExpr, ExprError> {
        let col = self.column();
        let function = match name {
            "exp" | "sin" | "cos" => Some(Function::named(name)),
            _ => None,
        };
        let op = if function.is_none() {
            match SuperOperator::parse(name, self.table) {
                Ok(op) => Some(op),
                Err(ExprError::UnknownOperator(_)) => return Err(ExprError::UndeclaredSymbol(name.to_string())),
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        self.expect('(')?;
        let arg = self.expr()?;
        self.expect(')')?;
        match (function, op) {
            (Some(f), _) => SuperExpr::func(f, &arg).map_err(|e| match e {
                ExprError::OddArgument(a) => ExprError::Syntax {
                    column: col,
                    message: format!("argument `{a}` of {name} is not even"),
                },
                other => other,
            }),
            (None, Some(op)) => Ok(op.apply(&arg)),
            (None, None) => unreachable!("call target resolved above"),
        }
    }
}

/// Parse an expression against a symbol table.
pub fn parse_expr(src: &str, table: &SymbolTable) -> Result<SuperExpr, ExprError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0, end: src.chars().count() + 1, table };
    if p.peek().is_none() {
        return p.err("empty expression");
    }
    let e = p.expr()?;
    if p.peek().is_some() {
        return p.err("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::Parity;
    use crate::superexpr::Symbol;

    fn table() -> SymbolTable {
        let mut t = SymbolTable::superspace();
        t.declare_field("u", Parity::Even, &["xp", "xm"]).unwrap();
        t.declare_field("H", Parity::Odd, &["xp", "xm", "tp", "tm"]).unwrap();
        t.declare(Symbol::invertible_constant("mu")).unwrap();
        t
    }

    #[test]
    fn precedence_and_division() {
        let t = table();
        let a = parse_expr("1/2*I*u - -u^2 + 3", &t).unwrap();
        let b = parse_expr("u*I/2 + u*u + 1 + 2", &t).unwrap();
        assert_eq!(a, b);
        assert_eq!(parse_expr("mu^-1*mu", &t).unwrap(), SuperExpr::one());
        assert_eq!(parse_expr("u/mu", &t).unwrap(), parse_expr("u*mu^(-1)", &t).unwrap());
    }

    #[test]
    fn errors_carry_columns() {
        let t = table();
        assert_eq!(parse_expr("u + v", &t), Err(ExprError::UndeclaredSymbol("v".into())));
        assert!(matches!(parse_expr("u + ", &t), Err(ExprError::Syntax { column: 5, .. })));
        assert!(matches!(parse_expr("u $ 2", &t), Err(ExprError::Syntax { column: 3, .. })));
        assert!(matches!(parse_expr("exp(H)", &t), Err(ExprError::Syntax { column: 4, .. })));
        assert!(matches!(parse_expr("u/u", &t), Err(ExprError::Syntax { column: 3, .. })));
        assert!(matches!(parse_expr("(u", &t), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn operators_apply() {
        let t = table();
        let e = parse_expr("dxp(u^2)", &t).unwrap();
        assert_eq!(e, parse_expr("2*u*dxp(u)", &t).unwrap());
        assert!(parse_expr("dtp(u)", &t).unwrap().is_zero());
    }
}

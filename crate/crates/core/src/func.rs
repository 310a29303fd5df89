//! Abstract smooth functions with a closed derivative table.

use std::fmt;

use crate::coeff::Cq;

/// Base function symbols. `exp`, `sin` and `cos` differentiate in closed form;
/// any other name gets formal derivative symbols `f^(n)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum FunctionSymbol {
    Exp,
    Sin,
    Cos,
    Named(String),
}

/// A function symbol together with its derivative order. Only `Named`
/// functions carry a nonzero order; the closed-form ones fold their
/// derivatives back into the table.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Function {
    pub symbol: FunctionSymbol,
    pub order: u32,
}

impl Function {
    pub fn new(symbol: FunctionSymbol) -> Self {
        Function { symbol, order: 0 }
    }

    pub fn exp() -> Self {
        Function::new(FunctionSymbol::Exp)
    }

    pub fn sin() -> Self {
        Function::new(FunctionSymbol::Sin)
    }

    pub fn cos() -> Self {
        Function::new(FunctionSymbol::Cos)
    }

    pub fn named(name: &str) -> Self {
        match name {
            "exp" => Function::exp(),
            "sin" => Function::sin(),
            "cos" => Function::cos(),
            other => Function::new(FunctionSymbol::Named(other.to_string())),
        }
    }

    /// `n`-th derivative as `sign * g` with `g` from the table.
    pub fn nth_derivative(&self, n: u32) -> (Cq, Function) {
        let mut sign = Cq::one();
        let mut f = self.clone();
        for _ in 0..n {
            let (s, g) = f.derivative();
            sign = &sign * &s;
            f = g;
        }
        (sign, f)
    }

    pub fn derivative(&self) -> (Cq, Function) {
        match &self.symbol {
            FunctionSymbol::Exp => (Cq::one(), Function::exp()),
            FunctionSymbol::Sin => (Cq::one(), Function::cos()),
            FunctionSymbol::Cos => (-Cq::one(), Function::sin()),
            FunctionSymbol::Named(name) => (
                Cq::one(),
                Function { symbol: FunctionSymbol::Named(name.clone()), order: self.order + 1 },
            ),
        }
    }

    /// Exact value at zero where the table knows it.
    pub fn value_at_zero(&self) -> Option<Cq> {
        match self.symbol {
            FunctionSymbol::Exp | FunctionSymbol::Cos => Some(Cq::one()),
            FunctionSymbol::Sin => Some(Cq::zero()),
            FunctionSymbol::Named(_) => None,
        }
    }
}

impl fmt::Display for Function {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.symbol {
            FunctionSymbol::Exp => write!(f, "exp"),
            FunctionSymbol::Sin => write!(f, "sin"),
            FunctionSymbol::Cos => write!(f, "cos"),
            FunctionSymbol::Named(name) if self.order == 0 => write!(f, "{name}"),
            FunctionSymbol::Named(name) => write!(f, "{name}_d{}", self.order),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_cycle_has_period_four() {
        let (sign, g) = Function::sin().nth_derivative(4);
        assert_eq!(sign, Cq::one());
        assert_eq!(g, Function::sin());
        let (sign, g) = Function::sin().nth_derivative(2);
        assert_eq!(sign, -Cq::one());
        assert_eq!(g, Function::sin());
    }

    #[test]
    fn named_functions_get_formal_orders() {
        let (_, g) = Function::named("g").nth_derivative(3);
        assert_eq!(g.order, 3);
        assert_eq!(g.to_string(), "g_d3");
    }
}

//! Declared symbols: coordinates, superfields, constants and flow parameters.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::grassmann::Parity;

use super::ExprError;

/// Sort class of a symbol. The declaration order here is the factor order in
/// normal forms: parameters first, then coordinates, constants and fields.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum SymbolKind {
    Parameter,
    Coordinate,
    Constant,
    Field,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Symbol {
    pub kind: SymbolKind,
    /// Coordinate rank (declaration order); zero for everything else.
    pub rank: u32,
    pub name: String,
    pub parity: Parity,
    /// Coordinates a field depends on, by name.
    pub depends_on: Vec<String>,
    /// Negative integer powers allowed.
    pub invertible: bool,
    /// Even symbol whose square vanishes.
    pub nilpotent: bool,
    /// For a log-type parameter `L = log s`: the scale parameter `s`, so that
    /// `exp(c*L)` folds to `s^c`.
    pub log_base: Option<Sym>,
    /// Names of the four theta-components `(1, tp, tm, tp*tm)`.
    pub components: Option<[String; 4]>,
}

pub type Sym = Arc<Symbol>;

impl Symbol {
    fn base(kind: SymbolKind, name: &str, parity: Parity) -> Self {
        Symbol {
            kind,
            rank: 0,
            name: name.to_string(),
            parity,
            depends_on: Vec::new(),
            invertible: false,
            nilpotent: false,
            log_base: None,
            components: None,
        }
    }

    pub fn coordinate(name: &str, parity: Parity, rank: u32) -> Sym {
        Arc::new(Symbol { rank, ..Symbol::base(SymbolKind::Coordinate, name, parity) })
    }

    pub fn field(name: &str, parity: Parity, depends_on: &[&str]) -> Sym {
        Arc::new(Symbol {
            depends_on: depends_on.iter().map(|s| s.to_string()).collect(),
            ..Symbol::base(SymbolKind::Field, name, parity)
        })
    }

    pub fn constant(name: &str, parity: Parity) -> Sym {
        Arc::new(Symbol::base(SymbolKind::Constant, name, parity))
    }

    pub fn invertible_constant(name: &str) -> Sym {
        Arc::new(Symbol { invertible: true, ..Symbol::base(SymbolKind::Constant, name, Parity::Even) })
    }

    pub fn parameter(name: &str, parity: Parity) -> Sym {
        Arc::new(Symbol { nilpotent: parity == Parity::Even, ..Symbol::base(SymbolKind::Parameter, name, parity) })
    }

    /// Invertible even parameter (a group element like `s = e^eps`).
    pub fn scale_parameter(name: &str) -> Sym {
        Arc::new(Symbol { invertible: true, ..Symbol::base(SymbolKind::Parameter, name, Parity::Even) })
    }

    /// Even parameter `L` with `exp(c*L) = base^c`.
    pub fn log_parameter(name: &str, base: &Sym) -> Sym {
        Arc::new(Symbol { log_base: Some(base.clone()), ..Symbol::base(SymbolKind::Parameter, name, Parity::Even) })
    }

    pub fn is_odd(&self) -> bool {
        self.parity.is_odd()
    }

    pub fn depends_on(&self, coord: &str) -> bool {
        self.depends_on.iter().any(|c| c == coord)
    }
}

/// The four superspace coordinates used by `D`/`J` operators and the
/// component oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Superspace {
    pub xp: Sym,
    pub xm: Sym,
    pub tp: Sym,
    pub tm: Sym,
}

/// Name-indexed symbol declarations.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SymbolTable {
    symbols: BTreeMap<String, Sym>,
    order: Vec<String>,
    next_rank: u32,
}

impl SymbolTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Superspace table with `xp, xm` even and `tp, tm` odd.
    pub fn superspace() -> Self {
        let mut t = SymbolTable::new();
        for (n, p) in [("xp", Parity::Even), ("xm", Parity::Even), ("tp", Parity::Odd), ("tm", Parity::Odd)] {
            t.declare_coordinate(n, p).expect("fresh table");
        }
        t
    }

    fn insert(&mut self, sym: Sym) -> Result<Sym, ExprError> {
        if self.symbols.contains_key(&sym.name) {
            return Err(ExprError::DuplicateSymbol(sym.name.clone()));
        }
        if RESERVED.contains(&sym.name.as_str()) {
            return Err(ExprError::ReservedName(sym.name.clone()));
        }
        self.order.push(sym.name.clone());
        self.symbols.insert(sym.name.clone(), sym.clone());
        Ok(sym)
    }

    pub fn declare_coordinate(&mut self, name: &str, parity: Parity) -> Result<Sym, ExprError> {
        let rank = self.next_rank;
        self.next_rank += 1;
        self.insert(Symbol::coordinate(name, parity, rank))
    }

    pub fn declare(&mut self, sym: Sym) -> Result<Sym, ExprError> {
        for c in &sym.depends_on {
            match self.symbols.get(c) {
                Some(s) if s.kind == SymbolKind::Coordinate => {}
                _ => return Err(ExprError::UndeclaredSymbol(c.clone())),
            }
        }
        self.insert(sym)
    }

    pub fn declare_field(&mut self, name: &str, parity: Parity, depends_on: &[&str]) -> Result<Sym, ExprError> {
        self.declare(Symbol::field(name, parity, depends_on))
    }

    /// Field with a theta-component expansion. Components alternate parity
    /// `(p, p+1, p+1, p)` and depend on the even coordinates only.
    pub fn declare_superfield(
        &mut self,
        name: &str,
        parity: Parity,
        depends_on: &[&str],
        components: [&str; 4],
    ) -> Result<Sym, ExprError> {
        let even_deps: Vec<&str> = depends_on
            .iter()
            .copied()
            .filter(|c| self.symbols.get(*c).map(|s| !s.is_odd()).unwrap_or(false))
            .collect();
        let parities = [parity, parity.flip(), parity.flip(), parity];
        for (c, p) in components.iter().zip(parities) {
            match self.symbols.get(*c) {
                Some(existing) => {
                    if existing.parity != p {
                        return Err(ExprError::ComponentParity {
                            field: name.to_string(),
                            component: c.to_string(),
                        });
                    }
                }
                None => {
                    self.declare_field(c, p, &even_deps)?;
                }
            }
        }
        let sym = Arc::new(Symbol {
            components: Some(components.map(|c| c.to_string())),
            ..(*Symbol::field(name, parity, depends_on)).clone()
        });
        self.declare(sym)
    }

    pub fn get(&self, name: &str) -> Option<&Sym> {
        self.symbols.get(name)
    }

    pub fn lookup(&self, name: &str) -> Result<&Sym, ExprError> {
        self.get(name).ok_or_else(|| ExprError::UndeclaredSymbol(name.to_string()))
    }

    /// Symbols in declaration order.
    pub fn iter(&self) -> impl Iterator<Item = &Sym> {
        self.order.iter().map(|n| &self.symbols[n])
    }

    pub fn coordinates(&self) -> Vec<Sym> {
        let mut cs: Vec<Sym> = self.iter().filter(|s| s.kind == SymbolKind::Coordinate).cloned().collect();
        cs.sort_by_key(|s| s.rank);
        cs
    }

    pub fn superspace_coords(&self) -> Option<Superspace> {
        let get = |n: &str| self.get(n).filter(|s| s.kind == SymbolKind::Coordinate).cloned();
        Some(Superspace { xp: get("xp")?, xm: get("xm")?, tp: get("tp")?, tm: get("tm")? })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.symbols.contains_key(name)
    }
}

/// Names taken by the expression grammar.
pub const RESERVED: &[&str] = &["I", "Dp", "Dm", "Jp", "Jm", "exp", "sin", "cos"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn superfield_components_alternate_parity() {
        let mut t = SymbolTable::superspace();
        t.declare_superfield("Phi", Parity::Even, &["xp", "xm", "tp", "tm"], ["p0", "p1", "p2", "p3"])
            .unwrap();
        let ps: Vec<Parity> = ["p0", "p1", "p2", "p3"].iter().map(|n| t.get(n).unwrap().parity).collect();
        assert_eq!(ps, vec![Parity::Even, Parity::Odd, Parity::Odd, Parity::Even]);
        assert_eq!(t.get("p1").unwrap().depends_on, vec!["xp".to_string(), "xm".to_string()]);
    }

    #[test]
    fn odd_field_with_even_component_pattern_is_rejected() {
        let mut t = SymbolTable::superspace();
        t.declare_field("a", Parity::Even, &["xp", "xm"]).unwrap();
        let err = t.declare_superfield("H", Parity::Odd, &["xp", "xm", "tp", "tm"], ["a", "b", "c", "d"]);
        assert!(matches!(err, Err(ExprError::ComponentParity { .. })));
    }

    #[test]
    fn reserved_and_duplicate_names() {
        let mut t = SymbolTable::superspace();
        assert!(matches!(t.declare_field("exp", Parity::Even, &[]), Err(ExprError::ReservedName(_))));
        assert!(matches!(t.declare_field("xp", Parity::Even, &[]), Err(ExprError::DuplicateSymbol(_))));
        assert!(matches!(t.declare_field("f", Parity::Even, &["q"]), Err(ExprError::UndeclaredSymbol(_))));
    }
}

//! Super vector fields and the algebraic side of the integrability test:
//! graded brackets, structure-table verification, the projection onto the
//! variables of the nonlinear system, span comparison, the classifier, and
//! invariance of equation systems under one-parameter flows.

mod field;
mod flow;
mod table;

use thiserror::Error;

use crate::grassmann::Parity;
use crate::superexpr::ExprError;

pub use field::{bracket, parse_field, SuperVectorField};
pub use flow::{flow_invariance_check, resolve_aliases, Alias, Flow, FlowKind, InvarianceChecker, InvarianceOutcome};
pub use table::{
    classify, derive_table, project, span_compare, verify_table, AlgebraPresentation, Classification, Generator,
    OmegaSet, Origin, Side, SpanComparison, SpanRelation, TableRow, Verdict,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgError {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("component along `{target}` breaks homogeneity of a {parity} field")]
    MixedParity { target: String, parity: Parity },
    #[error("`{0}` is not a coordinate or field")]
    NotATarget(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("duplicate generator `{0}`")]
    DuplicateGenerator(String),
    #[error("bracket [{0}, {1}] has the wrong kind for the parities involved")]
    BracketKind(String, String),
    #[error("pair ({0}, {1}) listed twice")]
    DuplicateRow(String, String),
    #[error("coefficient of `{target}` depends on dropped symbol `{symbol}`")]
    NonProjectable { target: String, symbol: String },
    #[error("unsupported generator shape: {0}")]
    UnsupportedGeneratorShape(String),
    #[error("bracket of {0} and {1} leaves the span: {2}")]
    NotClosed(String, String, String),
    #[error("combination coefficient `{0}` is not a constant")]
    NonConstantCoefficient(String),
}

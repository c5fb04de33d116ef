//! Memory consistency model definitions: order-constraint rules over
//! lifecycle operations, plus optional stage partitions.

mod ast;
mod parse;
mod stages;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::constraints::ground_rules;
use crate::lex::{LexError, Pos};
use crate::semantics::{GroundOp, Model};

pub use ast::*;
pub use parse::parse_mcm;
pub use parse::unused_vars;
pub use stages::{validate_stages, StageError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum McmError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("{pos}: expected {expected}, found {found}")]
    Syntax {
        pos: Pos,
        expected: String,
        found: String,
    },
    #[error("{pos}: undeclared variable `{name}`")]
    UndeclaredVar { pos: Pos, name: String },
    #[error("{pos}: variable `{name}` is not of sort {expected}")]
    VarSort {
        pos: Pos,
        name: String,
        expected: &'static str,
    },
    #[error("{pos}: variable `{name}` declared twice")]
    DuplicateVar { pos: Pos, name: String },
    #[error("{pos}: order atoms cannot be negated")]
    NegatedAtom { pos: Pos },
    #[error("{pos}: only `<` is supported between operations, found `{op}`")]
    UnsupportedComparison { pos: Pos, op: String },
    #[error("{pos}: rule `{name}` defined twice")]
    DuplicateRule { pos: Pos, name: String },
    #[error("{pos}: only Re takes a destination")]
    DestOnNonReflect { pos: Pos },
    #[error("{pos}: Re needs a destination (a proc variable, a process index or `*`)")]
    MissingDest { pos: Pos },
    #[error("{pos}: malformed stages: {source}")]
    Stage { pos: Pos, source: StageError },
}

/// An order atom over concrete operations: `lhs` performed before `rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub lhs: GroundOp,
    pub rhs: GroundOp,
}

impl std::fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} < {}", self.lhs, self.rhs)
    }
}

/// Every ground atom occurring in any grounding of any rule.
pub fn extract_defining_predicates(spec: &McmSpec, model: &Model) -> BTreeSet<GroundAtom> {
    let ground = ground_rules(spec, model);
    ground
        .atoms
        .iter()
        .map(|a| GroundAtom {
            lhs: model.op(a.lhs),
            rhs: model.op(a.rhs),
        })
        .collect()
}

//! The modeling language: syntax tree, parser, printer, macros and bounds.

pub mod ast;
mod bounds;
mod macros;
mod parse;
mod print;

use thiserror::Error;

use crate::lex::{LexError, Pos};

pub use ast::*;
pub use bounds::{enumerate_instances, BoundsConfig, BoundsError, InstructionInstance};
pub use macros::{expand_macros, PRELUDE};
pub use parse::{parse_program, CHOOSE_ATTR};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("{pos}: expected {expected}, found {found}")]
    Syntax {
        pos: Pos,
        expected: String,
        found: String,
    },
    #[error("{pos}: duplicate label `{label}` in process {process}")]
    DuplicateLabel {
        pos: Pos,
        process: usize,
        label: String,
    },
    #[error("{pos}: jump target `{label}` does not exist in this process")]
    UnresolvedTarget { pos: Pos, label: String },
    #[error("{pos}: shared variable `{name}` used inside a term")]
    SharedInTerm { pos: Pos, name: String },
    #[error("{pos}: shared variable `{name}` declared twice")]
    DuplicateShared { pos: Pos, name: String },
    #[error("{pos}: unknown name `{name}`")]
    UnknownName { pos: Pos, name: String },
    #[error("program has no processes")]
    NoProcesses,
    #[error("{pos}: process {found} out of sequence, expected process {expected}")]
    ProcessNumbering {
        pos: Pos,
        found: i64,
        expected: usize,
    },
    #[error("{pos}: atomic blocks do not nest")]
    NestedAtomic { pos: Pos },
    #[error("{pos}: empty atomic block")]
    EmptyAtomic { pos: Pos },
    #[error("{pos}: jump into the middle of an atomic block at `{label}`")]
    JumpIntoAtomic { pos: Pos, label: String },
    #[error("{pos}: `choose` jumps are not allowed inside atomic blocks")]
    ChooseInAtomic { pos: Pos },
    #[error("{pos}: unknown macro `{name}`")]
    UnknownMacro { pos: Pos, name: String },
    #[error("{pos}: macro `{name}` takes {expected} arguments, got {found}")]
    MacroArity {
        pos: Pos,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{pos}: macro `{name}` defined twice")]
    DuplicateMacro { pos: Pos, name: String },
    #[error("{pos}: macro expansion of `{name}` nests too deeply")]
    MacroDepth { pos: Pos, name: String },
}

impl LangError {
    pub fn pos(&self) -> Option<Pos> {
        match self {
            LangError::Lex(e) => Some(e.pos),
            LangError::NoProcesses => None,
            LangError::Syntax { pos, .. }
            | LangError::DuplicateLabel { pos, .. }
            | LangError::UnresolvedTarget { pos, .. }
            | LangError::SharedInTerm { pos, .. }
            | LangError::DuplicateShared { pos, .. }
            | LangError::UnknownName { pos, .. }
            | LangError::ProcessNumbering { pos, .. }
            | LangError::NestedAtomic { pos }
            | LangError::EmptyAtomic { pos }
            | LangError::JumpIntoAtomic { pos, .. }
            | LangError::ChooseInAtomic { pos }
            | LangError::UnknownMacro { pos, .. }
            | LangError::MacroArity { pos, .. }
            | LangError::DuplicateMacro { pos, .. }
            | LangError::MacroDepth { pos, .. } => Some(*pos),
        }
    }
}

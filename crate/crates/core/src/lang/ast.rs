use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lex::Pos;

/// Machine integer. Arithmetic wraps.
pub type Value = i64;

/// Index into a process's register table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RegId(pub u16);

/// Location index of a shared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u16);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    pub fn apply(self, a: Value, b: Value) -> Value {
        match self {
            BinOp::Add => a.wrapping_add(b),
            BinOp::Sub => a.wrapping_sub(b),
            BinOp::Mul => a.wrapping_mul(b),
            BinOp::Eq => (a == b) as Value,
            BinOp::Ne => (a != b) as Value,
            BinOp::Lt => (a < b) as Value,
            BinOp::Gt => (a > b) as Value,
            BinOp::Le => (a <= b) as Value,
            BinOp::Ge => (a >= b) as Value,
            BinOp::And => (a != 0 && b != 0) as Value,
            BinOp::Or => (a != 0 || b != 0) as Value,
        }
    }
}

/// Expression over registers. `R` is the register reference type: a local
/// [`RegId`] inside a process, or a [`FinalRef`] in a final assertion.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term<R = RegId> {
    Const(Value),
    Reg(R),
    Bin(BinOp, Box<Term<R>>, Box<Term<R>>),
    Not(Box<Term<R>>),
}

impl<R> Term<R> {
    pub fn eval(&self, lookup: &impl Fn(&R) -> Value) -> Value {
        match self {
            Term::Const(v) => *v,
            Term::Reg(r) => lookup(r),
            Term::Bin(op, a, b) => op.apply(a.eval(lookup), b.eval(lookup)),
            Term::Not(t) => (t.eval(lookup) == 0) as Value,
        }
    }

    pub fn visit_regs<'a>(&'a self, f: &mut impl FnMut(&'a R)) {
        match self {
            Term::Const(_) => {}
            Term::Reg(r) => f(r),
            Term::Bin(_, a, b) => {
                a.visit_regs(f);
                b.visit_regs(f);
            }
            Term::Not(t) => t.visit_regs(f),
        }
    }

    /// Renders the term, naming registers with `name`.
    pub fn display_with<'a>(&'a self, name: &'a dyn Fn(&R) -> String) -> TermDisplay<'a, R> {
        TermDisplay { term: self, name }
    }
}

pub struct TermDisplay<'a, R> {
    term: &'a Term<R>,
    name: &'a dyn Fn(&R) -> String,
}

impl<R> fmt::Display for TermDisplay<'_, R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.term {
            Term::Const(v) => write!(f, "{v}"),
            Term::Reg(r) => write!(f, "{}", (self.name)(r)),
            Term::Bin(op, a, b) => write!(
                f,
                "({} {} {})",
                a.display_with(self.name),
                op.symbol(),
                b.display_with(self.name)
            ),
            Term::Not(t) => write!(f, "!{}", t.display_with(self.name)),
        }
    }
}

/// Kind of a raw instruction, used by MCM where-filters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstrKind {
    Move,
    Load,
    Store,
    Jump,
    Nop,
    Assert,
}

impl InstrKind {
    pub fn name(self) -> &'static str {
        match self {
            InstrKind::Move => "move",
            InstrKind::Load => "load",
            InstrKind::Store => "store",
            InstrKind::Jump => "jump",
            InstrKind::Nop => "nop",
            InstrKind::Assert => "assert",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "move" => InstrKind::Move,
            "load" => InstrKind::Load,
            "store" => InstrKind::Store,
            "jump" => InstrKind::Jump,
            "nop" => InstrKind::Nop,
            "assert" => InstrKind::Assert,
            _ => return None,
        })
    }

    pub fn is_memory(self) -> bool {
        matches!(self, InstrKind::Load | InstrKind::Store)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RawInstruction {
    Move {
        dst: RegId,
        term: Term,
    },
    Load {
        dst: RegId,
        var: VarId,
    },
    Store {
        var: VarId,
        term: Term,
    },
    /// Taken iff `cond` evaluates nonzero. `target` is an instruction index.
    Jump {
        target: usize,
        cond: Term,
    },
    Nop,
    Assert(Term),
}

impl RawInstruction {
    pub fn kind(&self) -> InstrKind {
        match self {
            RawInstruction::Move { .. } => InstrKind::Move,
            RawInstruction::Load { .. } => InstrKind::Load,
            RawInstruction::Store { .. } => InstrKind::Store,
            RawInstruction::Jump { .. } => InstrKind::Jump,
            RawInstruction::Nop => InstrKind::Nop,
            RawInstruction::Assert(_) => InstrKind::Assert,
        }
    }

    /// Registers read when the instruction issues.
    pub fn reads(&self) -> Vec<RegId> {
        let mut out = Vec::new();
        let term = match self {
            RawInstruction::Move { term, .. } | RawInstruction::Store { term, .. } => Some(term),
            RawInstruction::Jump { cond, .. } => Some(cond),
            RawInstruction::Assert(t) => Some(t),
            RawInstruction::Load { .. } | RawInstruction::Nop => None,
        };
        if let Some(t) = term {
            t.visit_regs(&mut |r| {
                if !out.contains(r) {
                    out.push(*r)
                }
            });
        }
        out
    }

    pub fn writes(&self) -> Option<RegId> {
        match self {
            RawInstruction::Move { dst, .. } | RawInstruction::Load { dst, .. } => Some(*dst),
            _ => None,
        }
    }

    pub fn location(&self) -> Option<VarId> {
        match self {
            RawInstruction::Load { var, .. } | RawInstruction::Store { var, .. } => Some(*var),
            _ => None,
        }
    }
}

/// Instruction label. Unlabelled instructions get a positional name that
/// the printer omits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Label {
    pub name: String,
    pub explicit: bool,
}

impl Label {
    pub fn auto(index: usize) -> Self {
        Label {
            name: format!("@{index}"),
            explicit: false,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone)]
pub struct Instruction {
    pub label: Label,
    pub attributes: BTreeSet<String>,
    pub raw: RawInstruction,
    /// Index into [`Program::blocks`] when inside an atomic block.
    pub atomic_block: Option<usize>,
    pub pos: Pos,
}

// Source positions are diagnostics only.
impl PartialEq for Instruction {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
            && self.attributes == other.attributes
            && self.raw == other.raw
            && self.atomic_block == other.atomic_block
    }
}

impl Eq for Instruction {}

impl Instruction {
    pub fn has_attr(&self, attr: &str) -> bool {
        self.attributes.contains(attr)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Process {
    pub instructions: Vec<Instruction>,
    /// Register names, indexed by [`RegId`].
    pub registers: Vec<String>,
}

impl Process {
    pub fn label_index(&self, name: &str) -> Option<usize> {
        self.instructions.iter().position(|i| i.label.name == name)
    }

    pub fn reg_name(&self, r: RegId) -> &str {
        &self.registers[r.0 as usize]
    }

    pub fn reg_id(&self, name: &str) -> Option<RegId> {
        self.registers
            .iter()
            .position(|r| r == name)
            .map(|i| RegId(i as u16))
    }
}

/// Contiguous instruction range `[start, end)` of one process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AtomicBlock {
    pub process: usize,
    pub start: usize,
    pub end: usize,
}

/// Reference from a final assertion into the terminal state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FinalRef {
    Reg(usize, RegId),
    Mem(usize, VarId),
}

/// Condition over all processes' registers and memories, checked in every
/// terminal state.
#[derive(Debug, Clone)]
pub struct FinalAssert {
    pub term: Term<FinalRef>,
    pub pos: Pos,
}

impl PartialEq for FinalAssert {
    fn eq(&self, other: &Self) -> bool {
        self.term == other.term
    }
}

impl Eq for FinalAssert {}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub processes: Vec<Process>,
    /// Shared variable names, indexed by [`VarId`].
    pub shared: Vec<String>,
    pub blocks: Vec<AtomicBlock>,
    pub finals: Vec<FinalAssert>,
}

impl Program {
    pub fn num_processes(&self) -> usize {
        self.processes.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.shared[v.0 as usize]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.shared
            .iter()
            .position(|s| s == name)
            .map(|i| VarId(i as u16))
    }

    pub fn instruction(&self, process: usize, index: usize) -> &Instruction {
        &self.processes[process].instructions[index]
    }

    pub fn final_ref_name(&self, r: &FinalRef) -> String {
        match *r {
            FinalRef::Reg(p, reg) => format!("{}@{p}", self.processes[p].reg_name(reg)),
            FinalRef::Mem(p, var) => format!("{}@{p}", self.var_name(var)),
        }
    }

    /// Total number of instructions over all processes.
    pub fn instruction_count(&self) -> usize {
        self.processes.iter().map(|p| p.instructions.len()).sum()
    }
}

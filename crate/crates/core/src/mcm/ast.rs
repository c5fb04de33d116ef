use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lang::InstrKind;
use crate::lex::Pos;

/// Lifecycle operation kinds in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OpKind {
    Fe,
    Is,
    Ex,
    Re,
}

impl OpKind {
    pub const ALL: [OpKind; 4] = [OpKind::Fe, OpKind::Is, OpKind::Ex, OpKind::Re];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Fe => "Fe",
            OpKind::Is => "Is",
            OpKind::Ex => "Ex",
            OpKind::Re => "Re",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        OpKind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Destination of a reflect in a rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum DestRef {
    /// A declared `proc` variable.
    Var(String),
    /// `*`: every destination, conjunctively.
    Any,
    Const(usize),
    /// `proc(v)`: the process performing instruction variable `v`.
    ProcOf(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OpRef {
    pub kind: OpKind,
    pub var: String,
    /// Present iff `kind` is `Re`.
    pub dest: Option<DestRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrderAtom {
    pub lhs: OpRef,
    pub rhs: OpRef,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProcExpr {
    /// `proc(v)`, or `obs(v)`, which denotes the same process.
    ProcOf(String),
    Var(String),
    Const(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum WherePred {
    Kind {
        var: String,
        kinds: Vec<InstrKind>,
        negated: bool,
    },
    Proc {
        lhs: ProcExpr,
        rhs: ProcExpr,
        equal: bool,
    },
    /// Holds only for load/store pairs.
    Loc {
        a: String,
        b: String,
        equal: bool,
    },
    Attr {
        var: String,
        attr: String,
        negated: bool,
    },
    Label {
        var: String,
        label: String,
        equal: bool,
    },
    Distinct {
        a: String,
        b: String,
    },
}

impl WherePred {
    pub fn instr_vars(&self) -> Vec<&str> {
        match self {
            WherePred::Kind { var, .. }
            | WherePred::Attr { var, .. }
            | WherePred::Label { var, .. } => vec![var.as_str()],
            WherePred::Loc { a, b, .. } | WherePred::Distinct { a, b } => {
                vec![a.as_str(), b.as_str()]
            }
            WherePred::Proc { lhs, rhs, .. } => {
                let mut out = Vec::new();
                for e in [lhs, rhs] {
                    if let ProcExpr::ProcOf(v) = e {
                        out.push(v.as_str());
                    }
                }
                out
            }
        }
    }

    pub fn proc_vars(&self) -> Vec<&str> {
        match self {
            WherePred::Proc { lhs, rhs, .. } => [lhs, rhs]
                .into_iter()
                .filter_map(|e| match e {
                    ProcExpr::Var(v) => Some(v.as_str()),
                    _ => None,
                })
                .collect(),
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintRule {
    pub name: String,
    pub instr_vars: Vec<String>,
    pub proc_vars: Vec<String>,
    pub where_: Vec<WherePred>,
    /// Empty means the `then` atoms hold unconditionally.
    pub when: Vec<OrderAtom>,
    pub then: Vec<OrderAtom>,
    pub pos: Pos,
}

/// Ordered stages; each stage is a set of operation kinds, where `Re`
/// stands for the reflects to every destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSpec {
    pub stages: Vec<Vec<OpKind>>,
}

impl StageSpec {
    /// Index of the stage containing `kind`. Only meaningful on a
    /// validated spec.
    pub fn stage_of(&self, kind: OpKind) -> usize {
        self.stages
            .iter()
            .position(|s| s.contains(&kind))
            .expect("validated stage spec covers every kind")
    }
}

impl fmt::Display for StageSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.stages.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            let names: Vec<&str> = s.iter().map(|k| k.name()).collect();
            write!(f, "{{{}}}", names.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct McmSpec {
    pub name: String,
    pub rules: Vec<ConstraintRule>,
    pub stages: Option<StageSpec>,
}

impl McmSpec {
    /// The model with no rules: every trace is admissible.
    pub fn empty() -> Self {
        McmSpec {
            name: "empty".into(),
            rules: Vec::new(),
            stages: None,
        }
    }
}

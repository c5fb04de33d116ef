//! Exhaustive bounded search over a program under an MCM.

mod count;
mod replay;
mod search;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{ground_rules, Engine, Grounding, Mode};
use crate::lang::{BoundsConfig, BoundsError, FinalRef, Program, Value};
use crate::mcm::{McmSpec, StageSpec};
use crate::semantics::{InstId, MachineState, Model};

pub use count::ModeRow;
pub use replay::{Replay, ReplayStep};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("MCM `{0}` defines no stages")]
    MissingStages(String),
    #[error("corrupt trace at step {step} (`{label}`): {reason}")]
    CorruptTrace {
        step: usize,
        label: String,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Every reachable state was explored; no admissible trace fails an
    /// assertion.
    Pass,
    /// As `Pass`, but some trace stopped because a supremum ran out.
    BoundExhaustedPass,
    /// An admissible trace fails an assertion.
    Violation,
    /// The state or depth limit was hit before the search finished.
    ResourceBound,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::BoundExhaustedPass => "bound-exhausted-pass",
            Verdict::Violation => "violation",
            Verdict::ResourceBound => "resource-bound",
        }
    }

    pub fn from_name(s: &str) -> Option<Verdict> {
        [
            Verdict::Pass,
            Verdict::BoundExhaustedPass,
            Verdict::Violation,
            Verdict::ResourceBound,
        ]
        .into_iter()
        .find(|v| v.name() == s)
    }

    /// `Pass` and `BoundExhaustedPass` both count as passing.
    pub fn is_pass(self) -> bool {
        matches!(self, Verdict::Pass | Verdict::BoundExhaustedPass)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExploreOptions {
    pub mode: Mode,
    pub stop_at_first_violation: bool,
    /// Maximum number of stored states.
    pub state_limit: Option<u64>,
    /// Maximum trace length.
    pub depth_limit: Option<usize>,
    /// Worker threads; 1 gives a deterministic depth-first search.
    pub workers: usize,
}

impl ExploreOptions {
    pub fn new(mode: Mode) -> Self {
        ExploreOptions {
            mode,
            stop_at_first_violation: true,
            state_limit: None,
            depth_limit: None,
            workers: 1,
        }
    }
}

impl Default for ExploreOptions {
    fn default() -> Self {
        Self::new(Mode {
            guards: true,
            predicates: true,
            stages: false,
        })
    }
}

/// The assertion that failed at the end of a counterexample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Failure {
    /// An `assert` instruction issued with a zero term.
    Assert { instance: String, term: String },
    /// A `final assert` evaluated to zero at a terminal state.
    Final { index: usize, term: String },
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Assert { instance, term } => write!(f, "assert {term} failed at ({instance})"),
            Failure::Final { index, term } => write!(f, "final assert #{index} {term} failed"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counterexample {
    /// Transition labels from the initial state.
    pub steps: Vec<String>,
    pub failure: Failure,
    /// Every register as `name@process=value` at the failing state.
    pub registers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub verdict: Verdict,
    pub states_stored: u64,
    pub terminal_states: u64,
    pub transitions: u64,
    /// States rejected by the admissibility check: inadmissible terminal
    /// and assertion-failure states, plus states pruned by guards.
    pub residual_filtered: u64,
    /// Non-terminal states with no enabled transition.
    pub deadlocks: u64,
    pub violations: u64,
    pub max_depth: usize,
    pub elapsed: Duration,
    pub counterexample: Option<Counterexample>,
}

/// A program unrolled under bounds together with a grounded MCM.
#[derive(Debug, Clone)]
pub struct Checker {
    pub model: Model,
    pub spec: McmSpec,
    grounding: Grounding,
}

impl Checker {
    pub fn new(program: Program, bounds: BoundsConfig, spec: McmSpec) -> Result<Self, CheckError> {
        let model = Model::new(program, bounds)?;
        let grounding = ground_rules(&spec, &model);
        Ok(Checker {
            model,
            spec,
            grounding,
        })
    }

    pub fn grounding(&self) -> &Grounding {
        &self.grounding
    }

    pub fn engine(&self, mode: Mode) -> Result<Engine, CheckError> {
        if mode.stages && self.spec.stages.is_none() {
            return Err(CheckError::MissingStages(self.spec.name.clone()));
        }
        Ok(Engine::from_grounding(
            self.grounding.clone(),
            &self.model,
            mode,
        ))
    }

    fn stages(&self, mode: Mode) -> Option<&StageSpec> {
        if mode.stages {
            self.spec.stages.as_ref()
        } else {
            None
        }
    }

    pub fn explore(&self, opts: &ExploreOptions) -> Result<Report, CheckError> {
        let engine = self.engine(opts.mode)?;
        Ok(search::run(self, &engine, opts))
    }

    /// `r0@1=5`-style rendering of every register.
    pub fn register_dump(&self, st: &MachineState) -> Vec<String> {
        let m = &self.model;
        let mut out = Vec::new();
        for (p, proc) in m.program.processes.iter().enumerate() {
            for (r, name) in proc.registers.iter().enumerate() {
                let v = st.reg(m, p, crate::lang::RegId(r as u16));
                out.push(format!("{name}@{p}={v}"));
            }
        }
        out
    }

    fn final_ref_name(&self, r: &FinalRef) -> String {
        let prog = &self.model.program;
        match *r {
            FinalRef::Reg(p, reg) => format!("{}@{p}", prog.processes[p].registers[reg.0 as usize]),
            FinalRef::Mem(p, v) => format!("{}@{p}", prog.shared[v.0 as usize]),
        }
    }

    /// Index of the first final assertion that fails at `st`.
    pub fn failing_final(&self, st: &MachineState) -> Option<Failure> {
        let m = &self.model;
        m.program.finals.iter().enumerate().find_map(|(i, fa)| {
            let v = fa.term.eval(&|r: &FinalRef| st.final_value(m, r));
            (v == 0).then(|| Failure::Final {
                index: i,
                term: fa
                    .term
                    .display_with(&|r: &FinalRef| self.final_ref_name(r))
                    .to_string(),
            })
        })
    }

    pub(crate) fn assert_failure(&self, inst: InstId) -> Failure {
        let i = self.model.instance(inst);
        let regs = &self.model.program.processes[i.process].registers;
        let term = match &self.model.instruction(inst).raw {
            crate::lang::RawInstruction::Assert(t) => t
                .display_with(&|r: &crate::lang::RegId| regs[r.0 as usize].clone())
                .to_string(),
            _ => String::new(),
        };
        Failure::Assert {
            instance: self.model.inst_name(inst),
            term,
        }
    }

    /// Register values at every admissible terminal state, one vector per
    /// distinct valuation, in register-dump order.
    pub fn collect_outcomes(
        &self,
        mode: Mode,
    ) -> Result<std::collections::BTreeSet<Vec<Value>>, CheckError> {
        count::collect_outcomes(self, mode)
    }

    /// Number of distinct complete traces (paths to a terminal state).
    pub fn count_complete_traces(&self, mode: Mode) -> Result<u128, CheckError> {
        count::count_complete_traces(self, mode)
    }

    /// Explores once per mode and tabulates the results.
    pub fn compare_modes(
        &self,
        modes: &[Mode],
        base: &ExploreOptions,
    ) -> Result<Vec<ModeRow>, CheckError> {
        count::compare_modes(self, modes, base)
    }

    /// Re-executes a labelled trace.
    pub fn replay(&self, labels: &[String]) -> Result<Replay, CheckError> {
        replay::replay(self, labels)
    }
}

use std::fmt;

use super::{CheckError, Checker, Failure};
use crate::constraints::Mode;
use crate::lang::{RegId, VarId};
use crate::semantics::{MachineState, StepResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayStep {
    pub label: String,
    /// Registers and memory cells changed by the step, or `-`.
    pub delta: String,
}

/// Outcome of re-executing a labelled trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Replay {
    pub steps: Vec<ReplayStep>,
    /// The assertion that failed at the last step, if any.
    pub failure: Option<Failure>,
    /// Whether the final state satisfies every ground rule.
    pub admissible: bool,
}

impl Replay {
    /// The trace ends in a failing assertion and is admissible.
    pub fn confirmed(&self) -> bool {
        self.failure.is_some() && self.admissible
    }
}

impl fmt::Display for Replay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(f, "step {}: {} -> {}", i + 1, s.label, s.delta)?;
        }
        match &self.failure {
            Some(x) if self.admissible => writeln!(f, "confirmed: {x}"),
            Some(x) => writeln!(f, "filtered: {x} on an inadmissible trace"),
            None => writeln!(f, "no assertion fails"),
        }
    }
}

fn delta(checker: &Checker, a: &MachineState, b: &MachineState) -> String {
    let m = &checker.model;
    let mut parts = Vec::new();
    for (p, proc) in m.program.processes.iter().enumerate() {
        for (r, name) in proc.registers.iter().enumerate() {
            let id = RegId(r as u16);
            let v = b.reg(m, p, id);
            if a.reg(m, p, id) != v {
                parts.push(format!("{name}@{p}={v}"));
            }
        }
    }
    for p in 0..m.num_processes() {
        for (x, name) in m.program.shared.iter().enumerate() {
            let id = VarId(x as u16);
            let v = b.mem(m, p, id);
            if a.mem(m, p, id) != v {
                parts.push(format!("{name}@{p}={v}"));
            }
        }
    }
    if parts.is_empty() {
        "-".to_string()
    } else {
        parts.join(" ")
    }
}

pub(crate) fn replay(checker: &Checker, labels: &[String]) -> Result<Replay, CheckError> {
    let m = &checker.model;
    let engine = checker.engine(Mode::BASELINE)?;
    let stages = checker.spec.stages.as_ref();
    let mut st = engine.initial_state(m);
    let mut steps = Vec::with_capacity(labels.len());
    let mut failure = None;
    for (i, label) in labels.iter().enumerate() {
        let corrupt = |reason: &str| CheckError::CorruptTrace {
            step: i + 1,
            label: label.clone(),
            reason: reason.to_string(),
        };
        if failure.is_some() {
            return Err(corrupt("the trace continues past a failing assertion"));
        }
        let t = m
            .parse_transition(label)
            .ok_or_else(|| corrupt("no such transition"))?;
        match m.step(&st, &t, stages, &engine) {
            StepResult::Next(next, f) => {
                steps.push(ReplayStep {
                    label: label.clone(),
                    delta: delta(checker, &st, &next),
                });
                failure = f.map(|f| checker.assert_failure(f.inst));
                st = next;
            }
            StepResult::Disabled => return Err(corrupt("not enabled")),
            StepResult::Infeasible => return Err(corrupt("refutes its branch guess")),
        }
    }
    if failure.is_none() && m.is_terminal(&st) {
        failure = checker.failing_final(&st);
    }
    Ok(Replay {
        steps,
        failure,
        admissible: engine.admissible(&st),
    })
}

use std::collections::BTreeSet;
use std::time::Duration;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use super::search::new_ops;
use super::{CheckError, Checker, ExploreOptions, Verdict};
use crate::constraints::{Engine, Mode};
use crate::lang::Value;
use crate::mcm::StageSpec;
use crate::semantics::{MachineState, StepResult};

/// One line of a mode comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeRow {
    pub mode: Mode,
    pub verdict: Verdict,
    pub states: u64,
    pub terminal_states: u64,
    pub transitions: u64,
    pub residual_filtered: u64,
    pub elapsed: Duration,
}

/// Successors of `st`, with guard-mode pruning of violated states. Assertion
/// failures are ignored.
fn successors(
    checker: &Checker,
    engine: &Engine,
    stages: Option<&StageSpec>,
    st: &MachineState,
) -> Vec<MachineState> {
    let m = &checker.model;
    m.transitions(st, stages)
        .iter()
        .filter_map(|t| match m.step(st, t, stages, engine) {
            StepResult::Next(s, _) => Some(s),
            _ => None,
        })
        .filter(|s| !engine.mode().guards || !new_ops(st, s).any(|op| engine.violated_by(s, op)))
        .collect()
}

pub(crate) fn count_complete_traces(checker: &Checker, mode: Mode) -> Result<u128, CheckError> {
    let engine = checker.engine(mode)?;
    let stages = checker.stages(mode);
    let mut memo: FxHashMap<u128, u128> = FxHashMap::default();

    fn go(
        checker: &Checker,
        engine: &Engine,
        stages: Option<&StageSpec>,
        memo: &mut FxHashMap<u128, u128>,
        st: &MachineState,
    ) -> u128 {
        let fp = st.fingerprint();
        if let Some(&n) = memo.get(&fp) {
            return n;
        }
        let n = if checker.model.is_terminal(st) {
            engine.admissible(st) as u128
        } else {
            successors(checker, engine, stages, st)
                .iter()
                .map(|s| go(checker, engine, stages, memo, s))
                .sum()
        };
        memo.insert(fp, n);
        n
    }

    let init = engine.initial_state(&checker.model);
    Ok(go(checker, &engine, stages, &mut memo, &init))
}

pub(crate) fn collect_outcomes(
    checker: &Checker,
    mode: Mode,
) -> Result<BTreeSet<Vec<Value>>, CheckError> {
    let engine = checker.engine(mode)?;
    let stages = checker.stages(mode);
    let init = engine.initial_state(&checker.model);
    let mut seen = FxHashSet::default();
    seen.insert(init.fingerprint());
    let mut stack = vec![init];
    let mut out = BTreeSet::new();
    while let Some(st) = stack.pop() {
        if checker.model.is_terminal(&st) {
            if engine.admissible(&st) {
                out.insert(st.registers().to_vec());
            }
            continue;
        }
        for s in successors(checker, &engine, stages, &st) {
            if seen.insert(s.fingerprint()) {
                stack.push(s);
            }
        }
    }
    Ok(out)
}

pub(crate) fn compare_modes(
    checker: &Checker,
    modes: &[Mode],
    base: &ExploreOptions,
) -> Result<Vec<ModeRow>, CheckError> {
    modes
        .iter()
        .map(|&mode| {
            let r = checker.explore(&ExploreOptions { mode, ..*base })?;
            Ok(ModeRow {
                mode,
                verdict: r.verdict,
                states: r.states_stored,
                terminal_states: r.terminal_states,
                transitions: r.transitions,
                residual_filtered: r.residual_filtered,
                elapsed: r.elapsed,
            })
        })
        .collect()
}

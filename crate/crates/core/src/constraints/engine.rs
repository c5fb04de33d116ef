use serde::{Deserialize, Serialize};

use super::ground::{ground_rules, GroundRule, Grounding};
use crate::mcm::McmSpec;
use crate::semantics::{bit, set_bit, words_for, MachineState, Model, OpId, Tracker};

const UNTRACKED: u32 = u32::MAX;
const UNPERFORMED: u16 = u16::MAX;

/// Which reductions the explorer applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Mode {
    /// Block operations that would falsify a then-atom, and drop states
    /// that violate a rule as soon as they are reached.
    pub guards: bool,
    /// Keep one order bit per defining predicate instead of timestamps.
    pub predicates: bool,
    /// Step whole stages of an instance at once.
    pub stages: bool,
}

impl Mode {
    pub const BASELINE: Mode = Mode {
        guards: false,
        predicates: false,
        stages: false,
    };
    pub const ALL: Mode = Mode {
        guards: true,
        predicates: true,
        stages: true,
    };

    /// Parses a comma-separated list of `guards`, `predicates`, `stages`;
    /// `none` or the empty string selects the baseline.
    pub fn parse(list: &str) -> Result<Mode, String> {
        let mut m = Mode::BASELINE;
        for item in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match item {
                "none" => {}
                "guards" => m.guards = true,
                "predicates" => m.predicates = true,
                "stages" => m.stages = true,
                other => return Err(format!("unknown optimization `{other}`")),
            }
        }
        Ok(m)
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        if self.guards {
            parts.push("guards");
        }
        if self.predicates {
            parts.push("predicates");
        }
        if self.stages {
            parts.push("stages");
        }
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

/// A then-atom guard: performing the keyed operation is blocked while
/// `lhs` is unperformed and every when-atom of `rule` would hold.
#[derive(Debug, Clone, Copy)]
struct Guard {
    rule: u32,
    lhs: OpId,
}

/// Tracks the order facts needed by one MCM over one model and decides
/// admissibility of states.
#[derive(Debug, Clone)]
pub struct Engine {
    grounding: Grounding,
    mode: Mode,
    /// Per operation: timestamp slot, or `UNTRACKED`.
    stamp_slot: Vec<u32>,
    n_tracked: usize,
    /// Per operation: atoms whose rhs it is.
    atoms_by_rhs: Vec<Vec<u32>>,
    /// Per operation: guards keyed by it.
    guards: Vec<Vec<Guard>>,
    /// Per operation: rules with an atom whose rhs it is.
    rules_by_op: Vec<Vec<u32>>,
}

impl Engine {
    pub fn new(spec: &McmSpec, model: &Model, mode: Mode) -> Self {
        Self::from_grounding(ground_rules(spec, model), model, mode)
    }

    pub fn from_grounding(grounding: Grounding, model: &Model, mode: Mode) -> Self {
        let n = model.num_ops();
        let mut stamp_slot = vec![UNTRACKED; n];
        let mut n_tracked: u32 = 0;
        let mut atoms_by_rhs = vec![Vec::new(); n];
        for (i, a) in grounding.atoms.iter().enumerate() {
            atoms_by_rhs[a.rhs as usize].push(i as u32);
            for op in [a.lhs, a.rhs] {
                if stamp_slot[op as usize] == UNTRACKED {
                    stamp_slot[op as usize] = n_tracked;
                    n_tracked += 1;
                }
            }
        }
        assert!(
            n_tracked < UNPERFORMED as u32,
            "too many tracked operations for 16-bit timestamps"
        );
        let mut guards = vec![Vec::new(); n];
        let mut rules_by_op: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (ri, r) in grounding.rules.iter().enumerate() {
            for &t in &r.then {
                let a = grounding.atoms[t as usize];
                guards[a.rhs as usize].push(Guard {
                    rule: ri as u32,
                    lhs: a.lhs,
                });
            }
            for &x in r.when.iter().chain(&r.then) {
                let v = &mut rules_by_op[grounding.atoms[x as usize].rhs as usize];
                if v.last() != Some(&(ri as u32)) {
                    v.push(ri as u32);
                }
            }
        }
        for v in &mut rules_by_op {
            v.sort_unstable();
            v.dedup();
        }
        Engine {
            grounding,
            mode,
            stamp_slot,
            n_tracked: n_tracked as usize,
            atoms_by_rhs,
            guards,
            rules_by_op,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn grounding(&self) -> &Grounding {
        &self.grounding
    }

    /// Number of operations that carry a timestamp in timestamp mode.
    pub fn tracked_ops(&self) -> usize {
        self.n_tracked
    }

    /// The model's initial state with the order fields this mode needs.
    pub fn initial_state(&self, model: &Model) -> MachineState {
        let mut st = MachineState::initial(model);
        if self.mode.predicates {
            st.order = vec![0; words_for(self.grounding.atoms.len())];
        } else {
            st.stamps = vec![UNPERFORMED; self.n_tracked];
        }
        st
    }

    fn before(&self, st: &MachineState, a: u32) -> bool {
        if self.mode.predicates {
            bit(&st.order, a as usize)
        } else {
            let ids = self.grounding.atoms[a as usize];
            let s = |op: OpId| st.stamps[self.stamp_slot[op as usize] as usize];
            s(ids.lhs) < s(ids.rhs)
        }
    }

    /// `None` while the atom's rhs is unperformed; otherwise whether its
    /// lhs was performed first.
    pub fn atom_value(&self, st: &MachineState, a: u32) -> Option<bool> {
        let ids = self.grounding.atoms[a as usize];
        st.performed(ids.rhs).then(|| self.before(st, a))
    }

    fn rule_violated(&self, st: &MachineState, r: &GroundRule) -> bool {
        r.when.iter().all(|&w| self.atom_value(st, w) == Some(true))
            && r.then
                .iter()
                .any(|&t| self.atom_value(st, t) == Some(false))
    }

    /// The first ground rule whose when-atoms all hold and one of whose
    /// then-atoms is decided false.
    pub fn violated_rule(&self, st: &MachineState) -> Option<&GroundRule> {
        self.grounding
            .rules
            .iter()
            .find(|r| self.rule_violated(st, r))
    }

    pub fn admissible(&self, st: &MachineState) -> bool {
        self.violated_rule(st).is_none()
    }

    /// Whether performing `op` (already recorded in `st`) decided some rule
    /// to be violated. Only rules mentioning `op` as a rhs can change.
    pub fn violated_by(&self, st: &MachineState, op: OpId) -> bool {
        self.rules_by_op[op as usize]
            .iter()
            .any(|&r| self.rule_violated(st, &self.grounding.rules[r as usize]))
    }

    /// Guards run only in guard mode; the check assumes `op` happens next.
    fn guard_allows(&self, st: &MachineState, op: OpId) -> bool {
        self.guards[op as usize].iter().all(|g| {
            if st.performed(g.lhs) {
                return true;
            }
            let rule = &self.grounding.rules[g.rule as usize];
            !rule.when.iter().all(|&w| {
                let ids = self.grounding.atoms[w as usize];
                if ids.rhs == op {
                    st.performed(ids.lhs)
                } else {
                    self.atom_value(st, w) == Some(true)
                }
            })
        })
    }
}

impl Tracker for Engine {
    fn guard(&self, st: &MachineState, op: OpId) -> bool {
        !self.mode.guards || self.guard_allows(st, op)
    }

    fn record(&self, st: &mut MachineState, op: OpId) {
        if self.mode.predicates {
            for &a in &self.atoms_by_rhs[op as usize] {
                let lhs = self.grounding.atoms[a as usize].lhs;
                let on = st.performed(lhs);
                set_bit(&mut st.order, a as usize, on);
            }
        } else {
            let slot = self.stamp_slot[op as usize];
            if slot != UNTRACKED {
                st.stamps[slot as usize] = st.clock;
                st.clock += 1;
            }
        }
    }
}

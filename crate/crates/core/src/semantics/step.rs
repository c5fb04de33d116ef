use super::model::{InstId, Model, OpId, NO_SLOT};
use super::state::{bit, set_bit, MachineState, Pc};
use crate::lang::{InstrKind, RawInstruction, RegId};
use crate::mcm::{OpKind, StageSpec};

/// Hooks through which the constraint engine takes part in a step: a
/// guard consulted before each operation, and bookkeeping run just before
/// the operation's end flag is set.
pub trait Tracker {
    fn guard(&self, state: &MachineState, op: OpId) -> bool;
    fn record(&self, state: &mut MachineState, op: OpId);
}

/// Admits everything and records nothing.
pub struct NoTracker;

impl Tracker for NoTracker {
    fn guard(&self, _: &MachineState, _: OpId) -> bool {
        true
    }
    fn record(&self, _: &mut MachineState, _: OpId) {}
}

/// A transition of the explored system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Transition {
    /// One operation. `guess` is the branch outcome chosen at the fetch of
    /// a predicted or `choose` jump.
    Op { op: OpId, guess: Option<bool> },
    /// A whole atomic block entered at instance `inst`.
    Atomic { inst: InstId },
    /// All operations of one stage of an instance.
    Stage {
        inst: InstId,
        stage: u8,
        guess: Option<bool>,
    },
}

/// An `assert` instruction that evaluated to 0 at its issue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AssertFailure {
    pub inst: InstId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[allow(clippy::large_enum_variant)]
pub enum StepResult {
    Next(MachineState, Option<AssertFailure>),
    /// Not enabled: structural precondition or guard failed.
    Disabled,
    /// A branch prediction was refuted; the successor is discarded.
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fail {
    Disabled,
    Infeasible,
}

impl Model {
    fn defined(&self, st: &MachineState, y: InstId) -> bool {
        let base = self.inst_ops(y).start;
        match self.info_of(y).kind {
            InstrKind::Load => st.performed(base + 2),
            _ => st.performed(base + 1),
        }
    }

    /// Earlier in-flight instances of the same process, in fetch order.
    fn earlier<'a>(&self, st: &'a MachineState, id: InstId) -> impl Iterator<Item = InstId> + 'a {
        let p = self.instance(id).process;
        st.inflight[p].iter().copied().take_while(move |y| *y != id)
    }

    /// Every register read by `id` has been defined by all earlier writers.
    fn reads_ready(&self, st: &MachineState, id: InstId) -> bool {
        let reads = &self.info_of(id).reads;
        if reads.is_empty() {
            return true;
        }
        self.earlier(st, id).all(|y| match self.info_of(y).writes {
            Some(w) if reads.contains(&w) => self.defined(st, y),
            _ => true,
        })
    }

    /// Writing `dst` now respects earlier writers and readers of `dst`.
    fn write_ready(&self, st: &MachineState, id: InstId, dst: RegId) -> bool {
        self.earlier(st, id).all(|y| {
            let info = self.info_of(y);
            let waw = info.writes == Some(dst) && !self.defined(st, y);
            let war = info.reads.contains(&dst) && !st.performed(self.inst_ops(y).start + 1);
            !(waw || war)
        })
    }

    /// Structural precondition of `op`. Operations of atomic-block
    /// instructions are only enabled inside an atomic step.
    pub fn op_enabled(&self, st: &MachineState, op: OpId, in_block: bool) -> bool {
        if st.performed(op) {
            return false;
        }
        let id = self.op_instance(op);
        let info = self.info_of(id);
        if info.block.is_some() != in_block {
            return false;
        }
        let g = self.op(op);
        let base = self.inst_ops(id).start;
        match g.kind {
            OpKind::Fe => {
                let i = g.inst;
                st.pc(self, i.process) == Pc::At(i.instr)
                    && st.counters[self.counter_index(i.process, i.instr)] as usize == i.j
            }
            OpKind::Is => {
                st.performed(base)
                    && self.reads_ready(st, id)
                    && match (info.kind, info.writes) {
                        (InstrKind::Move, Some(dst)) => self.write_ready(st, id, dst),
                        _ => true,
                    }
            }
            OpKind::Ex => {
                st.performed(base + 1)
                    && match (info.kind, info.writes) {
                        (InstrKind::Load, Some(dst)) => self.write_ready(st, id, dst),
                        _ => true,
                    }
            }
            OpKind::Re => st.performed(base + 2),
        }
    }

    /// Whether the fetch of this jump carries a branch guess.
    pub fn needs_guess(&self, op: OpId) -> bool {
        let g = self.op(op);
        if g.kind != OpKind::Fe {
            return false;
        }
        let info = self.info_of(self.op_instance(op));
        info.choose || info.predicted
    }

    fn perform(
        &self,
        st: &mut MachineState,
        op: OpId,
        guess: Option<bool>,
        tracker: &dyn Tracker,
        in_block: bool,
    ) -> Result<Option<AssertFailure>, Fail> {
        if !self.op_enabled(st, op, in_block) {
            return Err(Fail::Disabled);
        }
        let guessing = !in_block && self.needs_guess(op);
        if guessing != guess.is_some() {
            return Err(Fail::Disabled);
        }
        if !tracker.guard(st, op) {
            return Err(Fail::Disabled);
        }
        let id = self.op_instance(op);
        let g = self.op(op);
        let p = g.inst.process;
        let instr = g.inst.instr;
        let info = self.info_of(id);
        let raw = &self.program.processes[p].instructions[instr].raw;
        let mut failure = None;
        match g.kind {
            OpKind::Fe => {
                st.counters[self.counter_index(p, instr)] += 1;
                st.inflight[p].push(id);
                if info.kind != InstrKind::Jump {
                    st.set_pc(p, instr + 1);
                } else if let Some(taken) = guess {
                    let next = if taken {
                        self.jump_target(id)
                    } else {
                        instr + 1
                    };
                    st.set_pc(p, next);
                    if info.predicted {
                        set_bit(&mut st.guesses, id as usize, taken);
                    }
                } else {
                    st.stall(p);
                }
            }
            OpKind::Is => {
                let regs = &st.regs;
                let lookup = |r: &RegId| regs[self.reg_index(p, *r)];
                match raw {
                    RawInstruction::Move { dst, term } => {
                        let v = term.eval(&lookup);
                        let idx = self.reg_index(p, *dst);
                        st.regs[idx] = v;
                    }
                    RawInstruction::Store { term, .. } => {
                        let v = term.eval(&lookup);
                        st.store_vals[self.store_slot(id) as usize] = v;
                    }
                    RawInstruction::Jump { target, cond } => {
                        if !info.choose {
                            let taken = cond.eval(&lookup) != 0;
                            if info.predicted && !in_block {
                                if st.guess(id) != taken {
                                    return Err(Fail::Infeasible);
                                }
                                set_bit(&mut st.guesses, id as usize, false);
                            } else {
                                st.set_pc(p, if taken { *target } else { instr + 1 });
                            }
                        }
                    }
                    RawInstruction::Assert(t) => {
                        if t.eval(&lookup) == 0 {
                            failure = Some(AssertFailure { inst: id });
                        }
                    }
                    RawInstruction::Load { .. } | RawInstruction::Nop => {}
                }
            }
            OpKind::Ex => {
                if let RawInstruction::Load { dst, var } = raw {
                    let v = st.mem[self.mem_index(p, *var)];
                    let idx = self.reg_index(p, *dst);
                    st.regs[idx] = v;
                }
            }
            OpKind::Re => {
                if let RawInstruction::Store { var, .. } = raw {
                    let d = g.dest.expect("reflect has a destination");
                    let slot = self.store_slot(id) as usize;
                    let idx = self.mem_index(d, *var);
                    st.mem[idx] = st.store_vals[slot];
                }
            }
        }
        tracker.record(st, op);
        set_bit(&mut st.end, op as usize, true);
        let ops = self.inst_ops(id);
        if ops.clone().all(|o| bit(&st.end, o as usize)) {
            st.inflight[p].retain(|y| *y != id);
            let slot = self.store_slot(id);
            if slot != NO_SLOT {
                st.store_vals[slot as usize] = 0;
            }
        }
        Ok(failure)
    }

    fn finish(&self, r: Result<(MachineState, Option<AssertFailure>), Fail>) -> StepResult {
        match r {
            Ok((s, f)) => StepResult::Next(s, f),
            Err(Fail::Disabled) => StepResult::Disabled,
            Err(Fail::Infeasible) => StepResult::Infeasible,
        }
    }

    /// Performs a single operation.
    pub fn apply(
        &self,
        st: &MachineState,
        op: OpId,
        guess: Option<bool>,
        tracker: &dyn Tracker,
    ) -> StepResult {
        let mut s = st.clone();
        let r = self.perform(&mut s, op, guess, tracker, false);
        self.finish(r.map(|f| (s, f)))
    }

    /// Runs the atomic block whose first instruction is instance `inst` as
    /// one step: every operation of every instruction reached, in program
    /// order, with all reflects.
    pub fn atomic_step(
        &self,
        st: &MachineState,
        inst: InstId,
        tracker: &dyn Tracker,
    ) -> StepResult {
        let i = self.instance(inst);
        let Some(b) = self.info_of(inst).block else {
            return StepResult::Disabled;
        };
        let block = self.program.blocks[b];
        if i.instr != block.start || !self.op_enabled(st, self.inst_ops(inst).start, true) {
            return StepResult::Disabled;
        }
        let p = i.process;
        let mut s = st.clone();
        let mut failure = None;
        loop {
            let instr = match s.pc(self, p) {
                Pc::At(x) if (block.start..block.end).contains(&x) => x,
                Pc::Stalled(_) => unreachable!("jumps issue within the atomic step"),
                _ => break,
            };
            let j = s.counters[self.counter_index(p, instr)] as usize;
            let Some(id) = self.inst_id(p, instr, j) else {
                return StepResult::Disabled;
            };
            for op in self.inst_ops(id) {
                match self.perform(&mut s, op, None, tracker, true) {
                    Ok(f) => failure = failure.or(f),
                    Err(Fail::Disabled) => return StepResult::Disabled,
                    Err(Fail::Infeasible) => return StepResult::Infeasible,
                }
            }
        }
        StepResult::Next(s, failure)
    }

    /// Performs the operations of `stage` for instance `inst`, in canonical
    /// order; disabled if any of them is.
    pub fn stage_step(
        &self,
        st: &MachineState,
        inst: InstId,
        kinds: &[OpKind],
        guess: Option<bool>,
        tracker: &dyn Tracker,
    ) -> StepResult {
        let mut s = st.clone();
        let mut failure = None;
        let mut any = false;
        for op in self.inst_ops(inst) {
            if !kinds.contains(&self.op(op).kind) {
                continue;
            }
            any = true;
            let g = if self.needs_guess(op) { guess } else { None };
            match self.perform(&mut s, op, g, tracker, false) {
                Ok(f) => failure = failure.or(f),
                Err(Fail::Disabled) => return StepResult::Disabled,
                Err(Fail::Infeasible) => return StepResult::Infeasible,
            }
        }
        if !any {
            return StepResult::Disabled;
        }
        StepResult::Next(s, failure)
    }

    /// Fetch candidate of process `p`: the instance at its PC, if the
    /// supremum allows another fetch.
    fn fetch_candidate(&self, st: &MachineState, p: usize) -> Option<InstId> {
        match st.pc(self, p) {
            Pc::At(instr) => {
                let j = st.counters[self.counter_index(p, instr)] as usize;
                self.inst_id(p, instr, j)
            }
            _ => None,
        }
    }

    /// Operations whose structural preconditions hold, in tie-break order.
    /// The fetch of an atomic block's first instruction stands for the
    /// whole block.
    pub fn structurally_enabled(&self, st: &MachineState) -> Vec<OpId> {
        let mut out = Vec::new();
        for p in 0..self.num_processes() {
            if let Some(id) = self.fetch_candidate(st, p) {
                out.push(self.inst_ops(id).start);
            }
            for &id in &st.inflight[p] {
                if self.info_of(id).block.is_some() {
                    continue;
                }
                let ops = self.inst_ops(id);
                for op in ops.clone() {
                    if st.performed(op) {
                        continue;
                    }
                    if self.op_enabled(st, op, false) {
                        out.push(op);
                    }
                    if self.op(op).kind != OpKind::Re {
                        break;
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// No operation is structurally enabled.
    pub fn is_terminal(&self, st: &MachineState) -> bool {
        self.structurally_enabled(st).is_empty()
    }

    /// Some process stopped fetching because a supremum ran out.
    pub fn truncated(&self, st: &MachineState) -> bool {
        (0..self.num_processes())
            .any(|p| matches!(st.pc(self, p), Pc::At(_)) && self.fetch_candidate(st, p).is_none())
    }

    fn guesses_for(&self, op: OpId) -> &'static [Option<bool>] {
        if self.needs_guess(op) {
            &[Some(false), Some(true)]
        } else {
            &[None]
        }
    }

    /// Candidate transitions of `st` in tie-break order. Candidates may
    /// still turn out disabled (guards) or infeasible when stepped.
    pub fn transitions(&self, st: &MachineState, stages: Option<&StageSpec>) -> Vec<Transition> {
        let mut out = Vec::new();
        for op in self.structurally_enabled(st) {
            let id = self.op_instance(op);
            if self.info_of(id).block.is_some() {
                out.push(Transition::Atomic { inst: id });
                continue;
            }
            match stages {
                None => {
                    for &guess in self.guesses_for(op) {
                        out.push(Transition::Op { op, guess });
                    }
                }
                Some(spec) => {
                    let kind = self.op(op).kind;
                    let stage = spec.stage_of(kind) as u8;
                    let first = self.inst_ops(id).find(|o| !st.performed(*o));
                    // One candidate per instance; all reflects share a stage.
                    if first != Some(op) {
                        continue;
                    }
                    let fe = self.inst_ops(id).start;
                    let guesses = if spec.stages[stage as usize].contains(&OpKind::Fe) {
                        self.guesses_for(fe)
                    } else {
                        &[None]
                    };
                    for &guess in guesses {
                        out.push(Transition::Stage {
                            inst: id,
                            stage,
                            guess,
                        });
                    }
                }
            }
        }
        out
    }

    /// Steps `t`.
    pub fn step(
        &self,
        st: &MachineState,
        t: &Transition,
        stages: Option<&StageSpec>,
        tracker: &dyn Tracker,
    ) -> StepResult {
        match *t {
            Transition::Op { op, guess } => self.apply(st, op, guess, tracker),
            Transition::Atomic { inst } => self.atomic_step(st, inst, tracker),
            Transition::Stage { inst, stage, guess } => match stages {
                Some(spec) => match spec.stages.get(stage as usize) {
                    Some(kinds) => {
                        let first = self.inst_ops(inst).find(|o| !st.performed(*o));
                        match first {
                            Some(o) if kinds.contains(&self.op(o).kind) => {
                                self.stage_step(st, inst, kinds, guess, tracker)
                            }
                            _ => StepResult::Disabled,
                        }
                    }
                    None => StepResult::Disabled,
                },
                None => StepResult::Disabled,
            },
        }
    }

    /// `Fe(0,L0,0)`, `Re(0,L0,0,1)`, `Fe(0,J,0,taken)`, `Atomic(0,L,0)`,
    /// `Stage1(0,L,0)`.
    pub fn transition_name(&self, t: &Transition) -> String {
        let guess_suffix = |g: Option<bool>| match g {
            Some(true) => ",taken",
            Some(false) => ",fallthrough",
            None => "",
        };
        match *t {
            Transition::Op { op, guess } => {
                let name = self.op_name(op);
                if guess.is_some() {
                    format!("{}{})", &name[..name.len() - 1], guess_suffix(guess))
                } else {
                    name
                }
            }
            Transition::Atomic { inst } => format!("Atomic({})", self.inst_name(inst)),
            Transition::Stage { inst, stage, guess } => {
                format!(
                    "Stage{stage}({}{})",
                    self.inst_name(inst),
                    guess_suffix(guess)
                )
            }
        }
    }

    /// Inverse of [`Model::transition_name`].
    pub fn parse_transition(&self, text: &str) -> Option<Transition> {
        let text = text.trim();
        let open = text.find('(')?;
        let head = &text[..open];
        let args: Vec<&str> = text[open + 1..]
            .strip_suffix(')')?
            .split(',')
            .map(str::trim)
            .collect();
        if args.len() < 3 {
            return None;
        }
        let p: usize = args[0].parse().ok()?;
        let j: usize = args[2].parse().ok()?;
        let inst = self.find_inst(p, args[1], j)?;
        let parse_guess = |s: &str| match s {
            "taken" => Some(Some(true)),
            "fallthrough" => Some(Some(false)),
            _ => None,
        };
        if head == "Atomic" {
            return (args.len() == 3).then_some(Transition::Atomic { inst });
        }
        if let Some(n) = head.strip_prefix("Stage") {
            let stage: u8 = n.parse().ok()?;
            let guess = match args.len() {
                3 => None,
                4 => parse_guess(args[3])?,
                _ => return None,
            };
            return Some(Transition::Stage { inst, stage, guess });
        }
        let kind = OpKind::from_name(head)?;
        let (dest, guess) = match (kind, args.len()) {
            (OpKind::Re, 4) => (Some(args[3].parse().ok()?), None),
            (OpKind::Fe, 4) => (None, parse_guess(args[3])?),
            (_, 3) => (None, None),
            _ => return None,
        };
        let op = self.op_id(inst, kind, dest)?;
        Some(Transition::Op { op, guess })
    }
}

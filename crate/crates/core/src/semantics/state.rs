use std::hash::Hash;

use xxhash_rust::xxh3::Xxh3;

use super::model::{InstId, Model, OpId};
use crate::lang::{FinalRef, RegId, Value, VarId};

const STALL: u16 = 1 << 15;

/// Where a process is in its code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pc {
    /// Next fetch is at this instruction.
    At(usize),
    /// A non-predicted jump at this instruction was fetched and has not
    /// issued yet.
    Stalled(usize),
    /// Ran off the end of the code.
    Done,
}

/// A machine state. Two states are the same state iff all fields agree;
/// the order fields are empty unless the engine runs in the corresponding
/// mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MachineState {
    pub(crate) pcs: Vec<u16>,
    /// Fetch-occurrence counter per (process, instruction).
    pub(crate) counters: Vec<u8>,
    pub(crate) regs: Vec<Value>,
    /// `process * vars + var`.
    pub(crate) mem: Vec<Value>,
    /// Value recorded at Is for each store instance until fully reflected.
    pub(crate) store_vals: Vec<Value>,
    /// Performed-operation bitset.
    pub(crate) end: Vec<u64>,
    /// Per process: fetched instances with unperformed operations, in fetch
    /// order.
    pub(crate) inflight: Vec<Vec<InstId>>,
    /// Per instance: branch guessed taken at fetch, pending validation.
    pub(crate) guesses: Vec<u64>,
    /// Number of timestamped operations performed (timestamp mode).
    pub(crate) clock: u16,
    /// Per tracked operation; `u16::MAX` while unperformed (timestamp mode).
    pub(crate) stamps: Vec<u16>,
    /// One bit per defining predicate (predicate mode).
    pub(crate) order: Vec<u64>,
}

pub(crate) fn bit(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

pub(crate) fn set_bit(words: &mut [u64], i: usize, on: bool) {
    if on {
        words[i / 64] |= 1 << (i % 64);
    } else {
        words[i / 64] &= !(1 << (i % 64));
    }
}

pub(crate) fn words_for(bits: usize) -> usize {
    bits.div_ceil(64)
}

impl MachineState {
    /// PCs at each process's first instruction, everything zero, nothing
    /// performed.
    pub fn initial(model: &Model) -> Self {
        let n = model.num_processes();
        MachineState {
            pcs: vec![0; n],
            counters: vec![0; model.n_counters()],
            regs: vec![0; model.n_regs()],
            mem: vec![0; n * model.num_vars()],
            store_vals: vec![0; model.n_store_slots()],
            end: vec![0; words_for(model.num_ops())],
            inflight: vec![Vec::new(); n],
            guesses: vec![0; words_for(model.instances().len())],
            clock: 0,
            stamps: Vec::new(),
            order: Vec::new(),
        }
    }

    pub fn pc(&self, model: &Model, p: usize) -> Pc {
        let raw = self.pcs[p];
        let idx = (raw & !STALL) as usize;
        if idx >= model.program.processes[p].instructions.len() {
            Pc::Done
        } else if raw & STALL != 0 {
            Pc::Stalled(idx)
        } else {
            Pc::At(idx)
        }
    }

    pub(crate) fn set_pc(&mut self, p: usize, instr: usize) {
        self.pcs[p] = instr as u16;
    }

    pub(crate) fn stall(&mut self, p: usize) {
        self.pcs[p] |= STALL;
    }

    pub fn performed(&self, op: OpId) -> bool {
        bit(&self.end, op as usize)
    }

    pub fn performed_count(&self) -> usize {
        self.end.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn reg(&self, model: &Model, p: usize, r: RegId) -> Value {
        self.regs[model.reg_index(p, r)]
    }

    pub fn mem(&self, model: &Model, p: usize, v: VarId) -> Value {
        self.mem[model.mem_index(p, v)]
    }

    pub fn final_value(&self, model: &Model, r: &FinalRef) -> Value {
        match *r {
            FinalRef::Reg(p, reg) => self.reg(model, p, reg),
            FinalRef::Mem(p, v) => self.mem(model, p, v),
        }
    }

    /// All registers, process by process in declaration order.
    pub fn registers(&self) -> &[Value] {
        &self.regs
    }

    /// All memories, process by process.
    pub fn memories(&self) -> &[Value] {
        &self.mem
    }

    /// Store instances that executed but are not yet reflected everywhere,
    /// with their value and the destinations still missing.
    pub fn pending_stores(&self, model: &Model) -> Vec<(InstId, Value, Vec<usize>)> {
        let mut out = Vec::new();
        for (id, _) in model.instances().iter().enumerate() {
            let id = id as InstId;
            let slot = model.store_slot(id);
            if slot == super::model::NO_SLOT {
                continue;
            }
            let ops = model.inst_ops(id);
            let ex = ops.start + 2;
            if !self.performed(ex) {
                continue;
            }
            let missing: Vec<usize> = (ops.start + 3..ops.end)
                .filter(|o| !self.performed(*o))
                .map(|o| (o - ops.start - 3) as usize)
                .collect();
            if !missing.is_empty() {
                out.push((id, self.store_vals[slot as usize], missing));
            }
        }
        out
    }

    /// 128-bit hash identifying the state in visited sets.
    pub fn fingerprint(&self) -> u128 {
        let mut h = Xxh3::new();
        self.hash(&mut h);
        h.digest128()
    }

    pub(crate) fn guess(&self, id: InstId) -> bool {
        bit(&self.guesses, id as usize)
    }
}

use std::fmt;

use crate::lang::{
    enumerate_instances, BoundsConfig, BoundsError, InstrKind, Instruction, InstructionInstance,
    Program, RawInstruction, RegId, CHOOSE_ATTR,
};
use crate::mcm::OpKind;

/// Dense index of a ground operation in a [`Model`].
pub type OpId = u32;
/// Dense index of an instruction instance in a [`Model`].
pub type InstId = u32;

/// One lifecycle operation of one instruction instance.
///
/// The derived order is the explorer's tie-break order:
/// process, instruction, counter, kind, destination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundOp {
    pub inst: InstructionInstance,
    pub kind: OpKind,
    /// Destination process of a reflect.
    pub dest: Option<usize>,
}

impl fmt::Display for GroundOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = &self.inst;
        write!(f, "{}({},#{},{}", self.kind, i.process, i.instr, i.j)?;
        if let Some(d) = self.dest {
            write!(f, ",{d}")?;
        }
        f.write_str(")")
    }
}

/// Static facts about one instruction, precomputed for the step function.
#[derive(Debug, Clone)]
pub(crate) struct InstrInfo {
    pub kind: InstrKind,
    pub reads: Vec<RegId>,
    pub writes: Option<RegId>,
    pub choose: bool,
    pub predicted: bool,
    pub block: Option<usize>,
}

/// A program unrolled under bounds: instances, their operations, and the
/// layout of machine states.
#[derive(Debug, Clone)]
pub struct Model {
    pub program: Program,
    pub bounds: BoundsConfig,
    instances: Vec<InstructionInstance>,
    inst_first_op: Vec<OpId>,
    ops: Vec<GroundOp>,
    op_inst: Vec<InstId>,
    proc_first_inst: Vec<usize>,
    suprema: Vec<usize>,
    pub(crate) info: Vec<Vec<InstrInfo>>,
    /// Per instance: index into the pending-store value table.
    store_slot: Vec<u32>,
    n_store_slots: usize,
    reg_offset: Vec<usize>,
    n_regs: usize,
    counter_offset: Vec<usize>,
    n_counters: usize,
}

pub(crate) const NO_SLOT: u32 = u32::MAX;

impl Model {
    pub fn new(program: Program, bounds: BoundsConfig) -> Result<Self, BoundsError> {
        bounds.validate(&program)?;
        let n = program.num_processes();
        let instances = enumerate_instances(&program, &bounds);
        let suprema: Vec<usize> = (0..n).map(|p| bounds.supremum(p)).collect();
        let mut proc_first_inst = Vec::with_capacity(n);
        let mut acc = 0;
        for (p, proc) in program.processes.iter().enumerate() {
            proc_first_inst.push(acc);
            acc += proc.instructions.len() * suprema[p];
        }

        let info: Vec<Vec<InstrInfo>> = program
            .processes
            .iter()
            .enumerate()
            .map(|(p, proc)| {
                proc.instructions
                    .iter()
                    .map(|ins| instr_info(ins, bounds.predicts(p, &ins.label.name)))
                    .collect()
            })
            .collect();

        let mut inst_first_op = Vec::with_capacity(instances.len());
        let mut ops = Vec::new();
        let mut op_inst = Vec::new();
        let mut store_slot = Vec::with_capacity(instances.len());
        let mut n_store_slots = 0;
        for (id, inst) in instances.iter().enumerate() {
            inst_first_op.push(ops.len() as OpId);
            let kind = info[inst.process][inst.instr].kind;
            let mut push = |k: OpKind, dest: Option<usize>| {
                ops.push(GroundOp {
                    inst: *inst,
                    kind: k,
                    dest,
                });
                op_inst.push(id as InstId);
            };
            push(OpKind::Fe, None);
            push(OpKind::Is, None);
            if kind.is_memory() {
                push(OpKind::Ex, None);
            }
            if kind == InstrKind::Store {
                for d in 0..n {
                    push(OpKind::Re, Some(d));
                }
                store_slot.push(n_store_slots as u32);
                n_store_slots += 1;
            } else {
                store_slot.push(NO_SLOT);
            }
        }

        let mut reg_offset = Vec::with_capacity(n);
        let mut counter_offset = Vec::with_capacity(n);
        let (mut nr, mut nc) = (0, 0);
        for proc in &program.processes {
            reg_offset.push(nr);
            counter_offset.push(nc);
            nr += proc.registers.len();
            nc += proc.instructions.len();
        }

        Ok(Model {
            program,
            bounds,
            instances,
            inst_first_op,
            ops,
            op_inst,
            proc_first_inst,
            suprema,
            info,
            store_slot,
            n_store_slots,
            reg_offset,
            n_regs: nr,
            counter_offset,
            n_counters: nc,
        })
    }

    pub fn num_processes(&self) -> usize {
        self.program.num_processes()
    }

    pub fn num_vars(&self) -> usize {
        self.program.shared.len()
    }

    pub fn num_ops(&self) -> usize {
        self.ops.len()
    }

    pub fn instances(&self) -> &[InstructionInstance] {
        &self.instances
    }

    pub fn ops(&self) -> &[GroundOp] {
        &self.ops
    }

    pub fn op(&self, id: OpId) -> GroundOp {
        self.ops[id as usize]
    }

    pub fn supremum(&self, p: usize) -> usize {
        self.suprema[p]
    }

    pub fn inst_id(&self, process: usize, instr: usize, j: usize) -> Option<InstId> {
        let len = self.program.processes.get(process)?.instructions.len();
        if instr >= len || j >= self.suprema[process] {
            return None;
        }
        Some((self.proc_first_inst[process] + instr * self.suprema[process] + j) as InstId)
    }

    pub fn instance(&self, id: InstId) -> InstructionInstance {
        self.instances[id as usize]
    }

    pub fn op_instance(&self, op: OpId) -> InstId {
        self.op_inst[op as usize]
    }

    /// Operation id of `kind` (and `dest` for reflects) of instance `id`,
    /// if the instance has such an operation.
    pub fn op_id(&self, id: InstId, kind: OpKind, dest: Option<usize>) -> Option<OpId> {
        let inst = self.instances[id as usize];
        let ik = self.info[inst.process][inst.instr].kind;
        let base = self.inst_first_op[id as usize];
        match (kind, dest) {
            (OpKind::Fe, None) => Some(base),
            (OpKind::Is, None) => Some(base + 1),
            (OpKind::Ex, None) if ik.is_memory() => Some(base + 2),
            (OpKind::Re, Some(d)) if ik == InstrKind::Store && d < self.num_processes() => {
                Some(base + 3 + d as OpId)
            }
            _ => None,
        }
    }

    pub fn lookup(&self, op: &GroundOp) -> Option<OpId> {
        let i = op.inst;
        self.inst_id(i.process, i.instr, i.j)
            .and_then(|id| self.op_id(id, op.kind, op.dest))
    }

    /// Operations of an instance in canonical order.
    pub fn inst_ops(&self, id: InstId) -> std::ops::Range<OpId> {
        let start = self.inst_first_op[id as usize];
        let end = self
            .inst_first_op
            .get(id as usize + 1)
            .copied()
            .unwrap_or(self.ops.len() as OpId);
        start..end
    }

    pub fn instruction(&self, id: InstId) -> &Instruction {
        let i = self.instances[id as usize];
        self.program.instruction(i.process, i.instr)
    }

    pub(crate) fn info_of(&self, id: InstId) -> &InstrInfo {
        let i = self.instances[id as usize];
        &self.info[i.process][i.instr]
    }

    pub(crate) fn store_slot(&self, id: InstId) -> u32 {
        self.store_slot[id as usize]
    }

    pub(crate) fn n_store_slots(&self) -> usize {
        self.n_store_slots
    }

    pub(crate) fn reg_index(&self, p: usize, r: RegId) -> usize {
        self.reg_offset[p] + r.0 as usize
    }

    pub(crate) fn n_regs(&self) -> usize {
        self.n_regs
    }

    pub(crate) fn counter_index(&self, p: usize, instr: usize) -> usize {
        self.counter_offset[p] + instr
    }

    pub(crate) fn n_counters(&self) -> usize {
        self.n_counters
    }

    pub(crate) fn mem_index(&self, p: usize, var: crate::lang::VarId) -> usize {
        p * self.num_vars() + var.0 as usize
    }

    /// `Fe(0,L0,0)`, `Re(0,L0,0,1)`, using label names.
    pub fn op_name(&self, op: OpId) -> String {
        let g = self.ops[op as usize];
        let i = g.inst;
        let label = i.label(&self.program);
        match g.dest {
            Some(d) => format!("{}({},{},{},{})", g.kind, i.process, label, i.j, d),
            None => format!("{}({},{},{})", g.kind, i.process, label, i.j),
        }
    }

    pub fn inst_name(&self, id: InstId) -> String {
        let i = self.instances[id as usize];
        format!("{},{},{}", i.process, i.label(&self.program), i.j)
    }

    /// Resolves `(process, label, j)` to an instance.
    pub fn find_inst(&self, process: usize, label: &str, j: usize) -> Option<InstId> {
        let instr = self.program.processes.get(process)?.label_index(label)?;
        self.inst_id(process, instr, j)
    }
}

fn instr_info(ins: &Instruction, predicts: bool) -> InstrInfo {
    let kind = ins.raw.kind();
    let choose = kind == InstrKind::Jump && ins.has_attr(CHOOSE_ATTR);
    InstrInfo {
        kind,
        reads: if choose { Vec::new() } else { ins.raw.reads() },
        writes: ins.raw.writes(),
        choose,
        predicted: kind == InstrKind::Jump && !choose && predicts && ins.atomic_block.is_none(),
        block: ins.atomic_block,
    }
}

impl Model {
    pub(crate) fn jump_target(&self, id: InstId) -> usize {
        match &self.instruction(id).raw {
            RawInstruction::Jump { target, .. } => *target,
            _ => unreachable!("jump_target on a non-jump instance"),
        }
    }
}

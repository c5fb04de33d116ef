use std::collections::{HashMap, HashSet};

use crate::lang::{Program, RawInstruction, Term};
use crate::mcm::{
    ConstraintRule, DestRef, GroundAtom, McmSpec, OpKind, OpRef, OrderAtom, ProcExpr, WherePred,
};
use crate::semantics::{InstId, Model, OpId};

/// Order atom over operation ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomIds {
    pub lhs: OpId,
    pub rhs: OpId,
}

/// One instantiation of a rule. Atoms index [`Grounding::atoms`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundRule {
    /// Index of the source rule in the MCM.
    pub rule: usize,
    pub when: Vec<u32>,
    pub then: Vec<u32>,
}

/// All ground rules of a spec over a model, with their atoms interned.
#[derive(Debug, Clone, Default)]
pub struct Grounding {
    pub atoms: Vec<AtomIds>,
    pub rules: Vec<GroundRule>,
}

impl Grounding {
    pub fn atom(&self, model: &Model, a: u32) -> GroundAtom {
        let ids = self.atoms[a as usize];
        GroundAtom {
            lhs: model.op(ids.lhs),
            rhs: model.op(ids.rhs),
        }
    }
}

/// Per-process successor reachability over the control-flow graph, used
/// to drop groundings whose `when` needs an impossible fetch order.
struct FetchOrder {
    /// `reach[p][a][b]`: some path of at least one step leads from a to b.
    reach: Vec<Vec<Vec<bool>>>,
}

fn const_cond(t: &Term) -> Option<bool> {
    match t {
        Term::Const(v) => Some(*v != 0),
        _ => None,
    }
}

impl FetchOrder {
    fn new(program: &Program) -> Self {
        let reach = program
            .processes
            .iter()
            .map(|proc| {
                let n = proc.instructions.len();
                let succ: Vec<Vec<usize>> = proc
                    .instructions
                    .iter()
                    .enumerate()
                    .map(|(i, ins)| {
                        let mut s = Vec::new();
                        match &ins.raw {
                            RawInstruction::Jump { target, cond } => {
                                let choose = ins.has_attr(crate::lang::CHOOSE_ATTR);
                                match (choose, const_cond(cond)) {
                                    (false, Some(true)) => s.push(*target),
                                    (false, Some(false)) => s.push(i + 1),
                                    _ => {
                                        s.push(*target);
                                        s.push(i + 1);
                                    }
                                }
                            }
                            _ => s.push(i + 1),
                        }
                        s.retain(|x| *x < n);
                        s
                    })
                    .collect();
                (0..n)
                    .map(|start| {
                        let mut seen = vec![false; n];
                        let mut stack: Vec<usize> = succ[start].clone();
                        while let Some(x) = stack.pop() {
                            if !std::mem::replace(&mut seen[x], true) {
                                stack.extend(&succ[x]);
                            }
                        }
                        seen
                    })
                    .collect()
            })
            .collect();
        FetchOrder { reach }
    }

    /// `Fe(a) < Fe(b)` can hold in some trace.
    fn fetch_may_precede(&self, model: &Model, a: InstId, b: InstId) -> bool {
        let (ia, ib) = (model.instance(a), model.instance(b));
        if ia.process != ib.process {
            return true;
        }
        if ia.instr == ib.instr {
            return ia.j < ib.j;
        }
        self.reach[ia.process][ia.instr][ib.instr]
    }
}

struct Ctx<'a> {
    model: &'a Model,
    rule: &'a ConstraintRule,
    n: usize,
    order: &'a FetchOrder,
}

fn pred_holds(
    ctx: &Ctx<'_>,
    p: &WherePred,
    inst: &[Option<InstId>],
    procs: &[Option<usize>],
) -> bool {
    let var = |name: &str| -> InstId {
        let i = ctx.rule.instr_vars.iter().position(|v| v == name).unwrap();
        inst[i].expect("bound before check")
    };
    let proc_val = |e: &ProcExpr| -> usize {
        match e {
            ProcExpr::Const(c) => *c,
            ProcExpr::ProcOf(v) => ctx.model.instance(var(v)).process,
            ProcExpr::Var(d) => {
                let i = ctx.rule.proc_vars.iter().position(|v| v == d).unwrap();
                procs[i].expect("bound before check")
            }
        }
    };
    match p {
        WherePred::Kind {
            var: v,
            kinds,
            negated,
        } => {
            let k = ctx.model.instruction(var(v)).raw.kind();
            kinds.contains(&k) != *negated
        }
        WherePred::Proc { lhs, rhs, equal } => (proc_val(lhs) == proc_val(rhs)) == *equal,
        WherePred::Loc { a, b, equal } => {
            let la = ctx.model.instruction(var(a)).raw.location();
            let lb = ctx.model.instruction(var(b)).raw.location();
            match (la, lb) {
                (Some(x), Some(y)) => (x == y) == *equal,
                _ => false,
            }
        }
        WherePred::Attr {
            var: v,
            attr,
            negated,
        } => ctx.model.instruction(var(v)).has_attr(attr) != *negated,
        WherePred::Label {
            var: v,
            label,
            equal,
        } => (ctx.model.instruction(var(v)).label.name == *label) == *equal,
        WherePred::Distinct { a, b } => var(a) != var(b),
    }
}

/// Binding level after which predicate `p` can be evaluated.
fn level_of(rule: &ConstraintRule, p: &WherePred) -> usize {
    let ni = rule.instr_vars.len();
    let mut lvl = 0;
    for v in p.instr_vars() {
        lvl = lvl.max(rule.instr_vars.iter().position(|x| x == v).unwrap() + 1);
    }
    for v in p.proc_vars() {
        lvl = lvl.max(ni + rule.proc_vars.iter().position(|x| x == v).unwrap() + 1);
    }
    lvl
}

fn resolve_ops(ctx: &Ctx<'_>, r: &OpRef, inst: &[InstId], procs: &[usize]) -> Option<Vec<OpId>> {
    let i = ctx
        .rule
        .instr_vars
        .iter()
        .position(|v| *v == r.var)
        .unwrap();
    let id = inst[i];
    let dests: Vec<Option<usize>> = match &r.dest {
        None => vec![None],
        Some(DestRef::Any) => (0..ctx.n).map(Some).collect(),
        Some(DestRef::Const(c)) => vec![Some(*c)],
        Some(DestRef::Var(d)) => {
            vec![Some(
                procs[ctx.rule.proc_vars.iter().position(|v| v == d).unwrap()],
            )]
        }
        Some(DestRef::ProcOf(v)) => {
            let j = ctx.rule.instr_vars.iter().position(|x| x == v).unwrap();
            vec![Some(ctx.model.instance(inst[j]).process)]
        }
    };
    dests
        .into_iter()
        .map(|d| ctx.model.op_id(id, r.kind, d))
        .collect()
}

fn expand_atoms(
    ctx: &Ctx<'_>,
    atoms: &[OrderAtom],
    inst: &[InstId],
    procs: &[usize],
) -> Option<Vec<AtomIds>> {
    let mut out = Vec::new();
    for a in atoms {
        let lhs = resolve_ops(ctx, &a.lhs, inst, procs)?;
        let rhs = resolve_ops(ctx, &a.rhs, inst, procs)?;
        for &l in &lhs {
            for &r in &rhs {
                out.push(AtomIds { lhs: l, rhs: r });
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Some(out)
}

/// `Fe(a) < Fe(b)` on one process in an order no trace can produce.
fn statically_false(ctx: &Ctx<'_>, a: AtomIds) -> bool {
    if a.lhs == a.rhs {
        return true;
    }
    let (l, r) = (ctx.model.op(a.lhs), ctx.model.op(a.rhs));
    l.kind == OpKind::Fe
        && r.kind == OpKind::Fe
        && !ctx.order.fetch_may_precede(
            ctx.model,
            ctx.model.op_instance(a.lhs),
            ctx.model.op_instance(a.rhs),
        )
}

/// Grounds every rule over the model's instances. Variable assignments
/// failing a where-filter are skipped; a grounding is dropped if it names
/// an operation the instance does not have, or if one of its `when` atoms
/// can never hold. Identical ground rules are kept once.
pub fn ground_rules(spec: &McmSpec, model: &Model) -> Grounding {
    let order = FetchOrder::new(&model.program);
    let n = model.num_processes();
    let mut g = Grounding::default();
    let mut atom_ids: HashMap<AtomIds, u32> = HashMap::new();
    let mut seen: HashSet<(Vec<u32>, Vec<u32>)> = HashSet::new();
    let all_insts: Vec<InstId> = (0..model.instances().len() as InstId).collect();

    for (ri, rule) in spec.rules.iter().enumerate() {
        let ctx = Ctx {
            model,
            rule,
            n,
            order: &order,
        };
        let ni = rule.instr_vars.len();
        let np = rule.proc_vars.len();
        let mut by_level: Vec<Vec<&WherePred>> = vec![Vec::new(); ni + np + 1];
        for p in &rule.where_ {
            by_level[level_of(rule, p)].push(p);
        }
        if !by_level[0].is_empty() {
            let ok = by_level[0].iter().all(|p| pred_holds(&ctx, p, &[], &[]));
            if !ok {
                continue;
            }
        }
        let mut inst: Vec<Option<InstId>> = vec![None; ni];
        let mut procs: Vec<Option<usize>> = vec![None; np];
        let mut emit = |inst: &[Option<InstId>], procs: &[Option<usize>]| {
            let inst: Vec<InstId> = inst.iter().map(|x| x.unwrap()).collect();
            let procs: Vec<usize> = procs.iter().map(|x| x.unwrap()).collect();
            let Some(when) = expand_atoms(&ctx, &rule.when, &inst, &procs) else {
                return;
            };
            let Some(then) = expand_atoms(&ctx, &rule.then, &inst, &procs) else {
                return;
            };
            if when.iter().any(|a| statically_false(&ctx, *a)) {
                return;
            }
            let mut intern = |a: AtomIds| -> u32 {
                *atom_ids.entry(a).or_insert_with(|| {
                    g.atoms.push(a);
                    (g.atoms.len() - 1) as u32
                })
            };
            let when: Vec<u32> = when.into_iter().map(&mut intern).collect();
            let then: Vec<u32> = then.into_iter().map(&mut intern).collect();
            if seen.insert((when.clone(), then.clone())) {
                g.rules.push(GroundRule {
                    rule: ri,
                    when,
                    then,
                });
            }
        };
        bind(
            &ctx, 0, &by_level, &all_insts, &mut inst, &mut procs, &mut emit,
        );
    }
    g
}

/// Receives one complete binding of instruction and process variables.
type Emit<'a> = dyn FnMut(&[Option<InstId>], &[Option<usize>]) + 'a;

fn bind(
    ctx: &Ctx<'_>,
    level: usize,
    by_level: &[Vec<&WherePred>],
    all: &[InstId],
    inst: &mut Vec<Option<InstId>>,
    procs: &mut Vec<Option<usize>>,
    emit: &mut Emit<'_>,
) {
    let ni = inst.len();
    if level == ni + procs.len() {
        emit(inst, procs);
        return;
    }
    let check = |inst: &[Option<InstId>], procs: &[Option<usize>]| {
        by_level[level + 1]
            .iter()
            .all(|p| pred_holds(ctx, p, inst, procs))
    };
    if level < ni {
        for &id in all {
            inst[level] = Some(id);
            if check(inst, procs) {
                bind(ctx, level + 1, by_level, all, inst, procs, emit);
            }
        }
        inst[level] = None;
    } else {
        for d in 0..ctx.n {
            procs[level - ni] = Some(d);
            if check(inst, procs) {
                bind(ctx, level + 1, by_level, all, inst, procs, emit);
            }
        }
        procs[level - ni] = None;
    }
}

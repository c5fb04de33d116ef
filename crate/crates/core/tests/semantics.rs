//! Random walks through the operation semantics, checking invariants that
//! must hold in every reachable state.

mod common;

use mcm_core::constraints::Mode;
use mcm_core::explore::Checker;
use mcm_core::lang::{BoundsConfig, RawInstruction, VarId};
use mcm_core::mcm::OpKind;
use mcm_core::semantics::{MachineState, StepResult};
use proptest::prelude::*;

/// Program, MCM and explicit suprema.
type Case = (&'static str, &'static str, &'static [(usize, usize)]);

const PROGRAMS: [Case; 6] = [
    ("litmus/sb.mcm-prog", "mcm/tso.mcm", &[]),
    ("litmus/iriw.mcm-prog", "mcm/pso.mcm", &[]),
    ("litmus/dekker.mcm-prog", "mcm/sc.mcm", &[]),
    ("gc/chicken.mcm-prog", "mcm/pso.mcm", &[(1, 2)]),
    ("gc/staccato_bug.mcm-prog", "mcm/tso.mcm", &[(1, 2)]),
    ("gc/stopless.mcm-prog", "mcm/pso.mcm", &[(1, 2)]),
];

fn load(i: usize) -> Checker {
    let (prog, mcm, sup) = PROGRAMS[i];
    let mut b = BoundsConfig::new();
    for &(p, k) in sup {
        b.set_supremum(p, k).unwrap();
    }
    common::checker(&common::read(prog), &common::read(mcm), b)
}

fn performed_ops(c: &Checker, st: &MachineState) -> Vec<u32> {
    (0..c.model.num_ops() as u32)
        .filter(|&o| st.performed(o))
        .collect()
}

/// Performed operations of each instance form a prefix of Fe, Is, Ex, and
/// reflects only follow Ex.
fn lifecycle_ok(c: &Checker, st: &MachineState) -> bool {
    (0..c.model.instances().len() as u32).all(|id| {
        let ops: Vec<u32> = c.model.inst_ops(id).collect();
        let fixed: Vec<bool> = ops
            .iter()
            .filter(|&&o| c.model.op(o).kind != OpKind::Re)
            .map(|&o| st.performed(o))
            .collect();
        let prefix = fixed.windows(2).all(|w| w[0] || !w[1]);
        let reflects_after_ex = ops
            .iter()
            .all(|&o| c.model.op(o).kind != OpKind::Re || !st.performed(o) || st.performed(ops[2]));
        prefix && reflects_after_ex
    })
}

/// Walks `steps` transitions chosen by `picks`, checking invariants after
/// each one, in baseline and predicate tracking at once.
fn walk(i: usize, picks: &[usize]) -> Result<(), TestCaseError> {
    let c = load(i);
    let m = &c.model;
    let stamps = c.engine(Mode::BASELINE).unwrap();
    let bits = c
        .engine(Mode {
            guards: false,
            predicates: true,
            stages: false,
        })
        .unwrap();
    let mut a = stamps.initial_state(m);
    let mut b = bits.initial_state(m);
    let mut order: Vec<Option<usize>> = vec![None; m.num_ops()];
    let mut clock = 0;
    for &pick in picks {
        let ts = m.transitions(&a, None);
        prop_assert_eq!(&ts, &m.transitions(&b, None));
        if ts.is_empty() {
            break;
        }
        let t = ts[pick % ts.len()];
        let (na, nb) = match (m.step(&a, &t, None, &stamps), m.step(&b, &t, None, &bits)) {
            (StepResult::Next(x, fx), StepResult::Next(y, fy)) => {
                prop_assert_eq!(fx.is_some(), fy.is_some());
                if fx.is_some() {
                    break;
                }
                (x, y)
            }
            (StepResult::Infeasible, StepResult::Infeasible)
            | (StepResult::Disabled, StepResult::Disabled) => continue,
            _ => return Err(TestCaseError::fail("engines disagree on a step")),
        };
        // Stepping is a function of state and label.
        match m.step(&a, &t, None, &stamps) {
            StepResult::Next(again, _) => prop_assert_eq!(again.fingerprint(), na.fingerprint()),
            _ => return Err(TestCaseError::fail("repeated step differs")),
        }

        let before = performed_ops(&c, &a);
        let after = performed_ops(&c, &na);
        let fresh: Vec<u32> = after
            .iter()
            .copied()
            .filter(|o| !before.contains(o))
            .collect();
        for &o in &fresh {
            order[o as usize] = Some(clock);
            clock += 1;
        }
        prop_assert!(
            lifecycle_ok(&c, &na),
            "lifecycle broken after {}",
            m.transition_name(&t)
        );

        // Memory changes only through reflects, and a load reads its own
        // process's memory.
        for p in 0..m.num_processes() {
            for x in 0..m.num_vars() {
                let v = VarId(x as u16);
                if a.mem(m, p, v) != na.mem(m, p, v) {
                    let reflected = fresh.iter().any(|&o| {
                        let g = m.op(o);
                        g.kind == OpKind::Re
                            && g.dest == Some(p)
                            && matches!(m.instruction(m.op_instance(o)).raw,
                                RawInstruction::Store { var, .. } if var == v)
                    });
                    prop_assert!(reflected, "memory of {p} changed without a reflect");
                }
            }
        }
        for &o in &fresh {
            let g = m.op(o);
            if g.kind != OpKind::Ex {
                continue;
            }
            if let RawInstruction::Load { dst, var } = m.instruction(m.op_instance(o)).raw {
                let p = g.inst.process;
                prop_assert_eq!(na.reg(m, p, dst), a.mem(m, p, var));
            }
        }

        // Both trackings agree with the actual order on every atom.
        let g = c.grounding();
        for k in 0..g.atoms.len() as u32 {
            let va = stamps.atom_value(&na, k);
            prop_assert_eq!(va, bits.atom_value(&nb, k));
            let ids = g.atoms[k as usize];
            let truth =
                order[ids.rhs as usize].map(|r| order[ids.lhs as usize].is_some_and(|l| l < r));
            prop_assert_eq!(va, truth);
        }
        prop_assert_eq!(stamps.admissible(&na), bits.admissible(&nb));
        a = na;
        b = nb;
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_walks_keep_invariants(
        i in 0..PROGRAMS.len(),
        picks in prop::collection::vec(any::<usize>(), 1..160),
    ) {
        walk(i, &picks)?;
    }
}

#[test]
fn atomic_blocks_are_indivisible() {
    // The intermediate value 1 is never visible outside the block.
    let src = "
        shared x
        process 0 { atomic { store x 1; store x 2 } }
        process 1 { load r x }
    ";
    let c = common::checker(src, "mcm \"none\" { }", BoundsConfig::new());
    let reads: std::collections::BTreeSet<i64> = c
        .collect_outcomes(Mode::BASELINE)
        .unwrap()
        .iter()
        .map(|v| *v.last().unwrap())
        .collect();
    assert_eq!(reads, [0, 2].into());
}

//! Brute-force store-buffer machines for SC, TSO and PSO.

use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug)]
pub enum Ins {
    St(usize, i64),
    /// Register index (global, in process order) and location.
    Ld(usize, usize),
    Fence,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Machine {
    Sc,
    Tso,
    Pso,
}

#[derive(Clone)]
struct OState {
    pcs: Vec<usize>,
    regs: Vec<i64>,
    mem: Vec<i64>,
    bufs: Vec<Vec<(usize, i64)>>,
}

pub fn oracle(progs: &[Vec<Ins>], nregs: usize, nlocs: usize, m: Machine) -> BTreeSet<Vec<i64>> {
    fn go(progs: &[Vec<Ins>], m: Machine, s: OState, out: &mut BTreeSet<Vec<i64>>) {
        let mut moved = false;
        for p in 0..progs.len() {
            if let Some(&ins) = progs[p].get(s.pcs[p]) {
                let mut n = s.clone();
                n.pcs[p] += 1;
                let ok = match ins {
                    Ins::St(l, v) => {
                        if m == Machine::Sc {
                            n.mem[l] = v;
                        } else {
                            n.bufs[p].push((l, v));
                        }
                        true
                    }
                    Ins::Ld(r, l) => {
                        n.regs[r] = s.bufs[p]
                            .iter()
                            .rev()
                            .find(|(x, _)| *x == l)
                            .map(|(_, v)| *v)
                            .unwrap_or(s.mem[l]);
                        true
                    }
                    Ins::Fence => s.bufs[p].is_empty(),
                };
                if ok {
                    moved = true;
                    go(progs, m, n, out);
                }
            }
            let flushable: Vec<usize> = match m {
                Machine::Sc => vec![],
                Machine::Tso => (0..s.bufs[p].len().min(1)).collect(),
                Machine::Pso => (0..s.bufs[p].len())
                    .filter(|&i| s.bufs[p][..i].iter().all(|(l, _)| *l != s.bufs[p][i].0))
                    .collect(),
            };
            for i in flushable {
                let mut n = s.clone();
                let (l, v) = n.bufs[p].remove(i);
                n.mem[l] = v;
                moved = true;
                go(progs, m, n, out);
            }
        }
        if !moved {
            out.insert(s.regs);
        }
    }
    let mut out = BTreeSet::new();
    let s = OState {
        pcs: vec![0; progs.len()],
        regs: vec![0; nregs],
        mem: vec![0; nlocs],
        bufs: vec![Vec::new(); progs.len()],
    };
    go(progs, m, s, &mut out);
    out
}

pub struct Litmus {
    pub src: String,
    pub progs: Vec<Vec<Ins>>,
    pub nregs: usize,
    pub nlocs: usize,
}

/// Corpus litmus tests with their store-buffer encodings.
pub fn litmus() -> Vec<(&'static str, Litmus)> {
    use Ins::*;
    vec![
        (
            "sb",
            Litmus {
                src: super::read("litmus/sb.mcm-prog"),
                progs: vec![vec![St(0, 1), Ld(0, 1)], vec![St(1, 1), Ld(1, 0)]],
                nregs: 2,
                nlocs: 2,
            },
        ),
        (
            "mp",
            Litmus {
                src: super::read("litmus/mp.mcm-prog"),
                progs: vec![vec![St(0, 1), St(1, 1)], vec![Ld(0, 1), Ld(1, 0)]],
                nregs: 2,
                nlocs: 2,
            },
        ),
        (
            "mp_fence",
            Litmus {
                src: super::read("litmus/mp_fence.mcm-prog"),
                progs: vec![vec![St(0, 1), Fence, St(1, 1)], vec![Ld(0, 1), Ld(1, 0)]],
                nregs: 2,
                nlocs: 2,
            },
        ),
        (
            "iriw",
            Litmus {
                src: super::read("litmus/iriw.mcm-prog"),
                progs: vec![
                    vec![St(0, 1)],
                    vec![St(1, 1)],
                    vec![Ld(0, 0), Ld(1, 1)],
                    vec![Ld(2, 1), Ld(3, 0)],
                ],
                nregs: 4,
                nlocs: 2,
            },
        ),
        (
            "dekker",
            Litmus {
                src: super::read("litmus/dekker.mcm-prog"),
                // Both enter iff both flag loads read 0.
                progs: vec![vec![St(0, 1), Ld(0, 1)], vec![St(1, 1), Ld(1, 0)]],
                nregs: 2,
                nlocs: 2,
            },
        ),
    ]
}

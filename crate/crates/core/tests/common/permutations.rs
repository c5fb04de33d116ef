//! Trace counting by enumerating permutations of lifecycle operations.

#[derive(Debug, Clone, Copy)]
pub enum Ins {
    Nop,
    Move,
    Load(usize),
    Store(usize),
    /// `move` reading the register written by the k-th earlier
    /// register-writing instruction of the same process.
    Use(usize),
}

/// Lifecycle ops per instruction and the precedence edges between them,
/// written from the operation model: Fe < Is < Ex < every Re, fetches in
/// program order, and a read waits until its source register is written.
pub fn precedence(progs: &[Vec<Ins>]) -> (usize, Vec<(usize, usize)>) {
    let n = progs.len();
    let mut next = 0;
    let mut edges = Vec::new();
    for prog in progs {
        let mut prev_fe: Option<usize> = None;
        let mut writers: Vec<usize> = Vec::new();
        for ins in prog {
            let (has_ex, reflects) = match ins {
                Ins::Load(_) => (true, 0),
                Ins::Store(_) => (true, n),
                _ => (false, 0),
            };
            let fe = next;
            let is = fe + 1;
            next += 2;
            edges.push((fe, is));
            if let Some(p) = prev_fe {
                edges.push((p, fe));
            }
            prev_fe = Some(fe);
            if has_ex {
                let ex = next;
                next += 1;
                edges.push((is, ex));
                for _ in 0..reflects {
                    edges.push((ex, next));
                    next += 1;
                }
                if matches!(ins, Ins::Load(_)) {
                    writers.push(ex);
                }
            } else if matches!(ins, Ins::Move | Ins::Use(_)) {
                if let Ins::Use(k) = ins {
                    edges.push((writers[*k], is));
                }
                writers.push(is);
            }
        }
    }
    (next, edges)
}

/// Counts orderings of all ops that respect `edges`, by generating
/// permutations one position at a time.
pub fn count_orders(n: usize, edges: &[(usize, usize)]) -> u128 {
    fn go(n: usize, edges: &[(usize, usize)], placed: &mut Vec<bool>, k: usize) -> u128 {
        if k == n {
            return 1;
        }
        let mut total = 0;
        for op in 0..n {
            if placed[op] || edges.iter().any(|&(a, b)| b == op && !placed[a]) {
                continue;
            }
            placed[op] = true;
            total += go(n, edges, placed, k + 1);
            placed[op] = false;
        }
        total
    }
    go(n, edges, &mut vec![false; n], 0)
}

pub fn source(progs: &[Vec<Ins>]) -> String {
    let mut s = String::from("shared x, y\n");
    for (p, prog) in progs.iter().enumerate() {
        s.push_str(&format!("process {p} {{\n"));
        let mut regs = 0;
        for (i, ins) in prog.iter().enumerate() {
            let line = match ins {
                Ins::Nop => "nop".to_string(),
                Ins::Move => {
                    regs += 1;
                    format!("move r{} {i}", regs - 1)
                }
                Ins::Load(v) => {
                    regs += 1;
                    format!("load r{} {}", regs - 1, ["x", "y"][*v])
                }
                Ins::Store(v) => format!("store {} {}", ["x", "y"][*v], i + 1),
                Ins::Use(k) => {
                    regs += 1;
                    format!("move r{} (r{k} + 1)", regs - 1)
                }
            };
            s.push_str(&format!("  {line}\n"));
        }
        s.push_str("}\n");
    }
    s
}

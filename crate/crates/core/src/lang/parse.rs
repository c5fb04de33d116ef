//! Program front end: `.mcm-prog` text to [`Program`].
//!
//! ```text
//! shared x, y
//! process 0 {
//!   L0: store x 1
//!       load r0 y
//!       nop [fence]
//!       jump L0 (r0 == 0)
//!   atomic { load t x; move ok (t == 0); jump Skip (ok == 0); store x 1; Skip: nop }
//! }
//! final assert !(r0@0 == 0 and r1@1 == 0)
//! ```

use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::macros::expand_macros;
use super::LangError;
use crate::lex::{tokenize, Cursor, Pos, Tok, Token};

pub(crate) const KEYWORDS: &[&str] = &[
    "process", "shared", "final", "assert", "move", "load", "store", "jump", "nop", "atomic",
    "macro", "include", "and", "or", "not",
];

/// Attribute that turns a jump into a nondeterministic two-way branch.
pub const CHOOSE_ATTR: &str = "choose";

/// Parses program text, expanding macro calls first.
pub fn parse_program(text: &str) -> Result<Program, LangError> {
    let expanded = expand_macros(text)?;
    parse_expanded(&expanded)
}

#[derive(Debug, Clone)]
pub(crate) enum Expr {
    Const(Value),
    Name(String, Pos),
    Qualified(String, i64, Pos),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Not(Box<Expr>),
}

#[derive(Debug)]
enum Syn {
    Move(String, Expr),
    Load(String, String),
    Store(String, Expr),
    Jump(String, Expr),
    Nop,
    Assert(Expr),
}

#[derive(Debug)]
struct Stmt {
    label: Option<String>,
    syn: Syn,
    attrs: Vec<String>,
    block: Option<usize>,
    pos: Pos,
}

struct RawProcess {
    id: i64,
    pos: Pos,
    stmts: Vec<Stmt>,
    blocks: Vec<(usize, usize, Pos)>,
}

fn syntax(cur: &Cursor<'_>, expected: &str) -> LangError {
    LangError::Syntax {
        pos: cur.pos(),
        expected: expected.to_string(),
        found: cur.describe_next(),
    }
}

fn ident(cur: &mut Cursor<'_>, what: &str) -> Result<(String, Pos), LangError> {
    match cur.peek() {
        Some(Token {
            tok: Tok::Ident(s),
            pos,
            ..
        }) if !KEYWORDS.contains(&s.as_str()) => {
            cur.bump();
            if s.starts_with('$') {
                return Err(LangError::Syntax {
                    pos: *pos,
                    expected: what.to_string(),
                    found: format!("macro-local name `{s}` outside a macro body"),
                });
            }
            Ok((s.clone(), *pos))
        }
        _ => Err(syntax(cur, what)),
    }
}

fn int(cur: &mut Cursor<'_>, what: &str) -> Result<i64, LangError> {
    match cur.peek() {
        Some(Token {
            tok: Tok::Int(v), ..
        }) => {
            cur.bump();
            Ok(*v)
        }
        _ => Err(syntax(cur, what)),
    }
}

fn expect_sym(cur: &mut Cursor<'_>, sym: &str) -> Result<(), LangError> {
    if cur.eat_sym(sym) {
        Ok(())
    } else {
        Err(syntax(cur, &format!("`{sym}`")))
    }
}

pub(crate) fn parse_expr(cur: &mut Cursor<'_>) -> Result<Expr, LangError> {
    let mut lhs = parse_and(cur)?;
    while cur.eat_kw("or") || cur.eat_sym("||") {
        let rhs = parse_and(cur)?;
        lhs = Expr::Bin(BinOp::Or, Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_and(cur: &mut Cursor<'_>) -> Result<Expr, LangError> {
    let mut lhs = parse_cmp(cur)?;
    while cur.eat_kw("and") || cur.eat_sym("&&") {
        let rhs = parse_cmp(cur)?;
        lhs = Expr::Bin(BinOp::And, Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_cmp(cur: &mut Cursor<'_>) -> Result<Expr, LangError> {
    let lhs = parse_add(cur)?;
    let op = [
        ("==", BinOp::Eq),
        ("!=", BinOp::Ne),
        ("<=", BinOp::Le),
        (">=", BinOp::Ge),
        ("<", BinOp::Lt),
        (">", BinOp::Gt),
    ]
    .into_iter()
    .find(|(s, _)| cur.is_sym(s));
    match op {
        Some((_, op)) => {
            cur.bump();
            let rhs = parse_add(cur)?;
            Ok(Expr::Bin(op, Box::new(lhs), Box::new(rhs)))
        }
        None => Ok(lhs),
    }
}

fn parse_add(cur: &mut Cursor<'_>) -> Result<Expr, LangError> {
    let mut lhs = parse_mul(cur)?;
    loop {
        let op = if cur.eat_sym("+") {
            BinOp::Add
        } else if cur.eat_sym("-") {
            BinOp::Sub
        } else {
            return Ok(lhs);
        };
        let rhs = parse_mul(cur)?;
        lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
    }
}

fn parse_mul(cur: &mut Cursor<'_>) -> Result<Expr, LangError> {
    let mut lhs = parse_unary(cur)?;
    while cur.eat_sym("*") {
        let rhs = parse_unary(cur)?;
        lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
    }
    Ok(lhs)
}

fn parse_unary(cur: &mut Cursor<'_>) -> Result<Expr, LangError> {
    if cur.eat_sym("!") || cur.eat_kw("not") {
        return Ok(Expr::Not(Box::new(parse_unary(cur)?)));
    }
    if cur.eat_sym("-") {
        if let Some(Token {
            tok: Tok::Int(v), ..
        }) = cur.peek()
        {
            cur.bump();
            return Ok(Expr::Const(v.wrapping_neg()));
        }
        let inner = parse_unary(cur)?;
        return Ok(Expr::Bin(
            BinOp::Sub,
            Box::new(Expr::Const(0)),
            Box::new(inner),
        ));
    }
    if cur.eat_sym("(") {
        let e = parse_expr(cur)?;
        expect_sym(cur, ")")?;
        return Ok(e);
    }
    if let Some(Token {
        tok: Tok::Int(v), ..
    }) = cur.peek()
    {
        cur.bump();
        return Ok(Expr::Const(*v));
    }
    let (name, pos) = ident(cur, "a term")?;
    if cur.eat_sym("@") {
        let p = int(cur, "a process index after `@`")?;
        return Ok(Expr::Qualified(name, p, pos));
    }
    Ok(Expr::Name(name, pos))
}

fn parse_attrs(cur: &mut Cursor<'_>) -> Result<Vec<String>, LangError> {
    let mut attrs = Vec::new();
    if !cur.eat_sym("[") {
        return Ok(attrs);
    }
    if cur.eat_sym("]") {
        return Ok(attrs);
    }
    loop {
        let (a, _) = ident(cur, "an attribute name")?;
        attrs.push(a);
        if cur.eat_sym("]") {
            return Ok(attrs);
        }
        expect_sym(cur, ",")?;
    }
}

fn parse_instr(cur: &mut Cursor<'_>) -> Result<Syn, LangError> {
    if cur.eat_kw("move") {
        let (r, _) = ident(cur, "a register")?;
        return Ok(Syn::Move(r, parse_expr(cur)?));
    }
    if cur.eat_kw("load") {
        let (r, _) = ident(cur, "a register")?;
        let (x, _) = ident(cur, "a shared variable")?;
        return Ok(Syn::Load(r, x));
    }
    if cur.eat_kw("store") {
        let (x, _) = ident(cur, "a shared variable")?;
        return Ok(Syn::Store(x, parse_expr(cur)?));
    }
    if cur.eat_kw("jump") {
        let (l, _) = ident(cur, "a jump target label")?;
        return Ok(Syn::Jump(l, parse_expr(cur)?));
    }
    if cur.eat_kw("nop") {
        return Ok(Syn::Nop);
    }
    if cur.eat_kw("assert") {
        return Ok(Syn::Assert(parse_expr(cur)?));
    }
    if let (
        Some(Token {
            tok: Tok::Ident(name),
            pos,
            ..
        }),
        Some(Token {
            tok: Tok::Sym("("), ..
        }),
    ) = (cur.peek(), cur.peek_at(1))
    {
        return Err(LangError::UnknownMacro {
            pos: *pos,
            name: name.clone(),
        });
    }
    Err(syntax(cur, "an instruction"))
}

fn parse_stmts(
    cur: &mut Cursor<'_>,
    stmts: &mut Vec<Stmt>,
    blocks: &mut Vec<(usize, usize, Pos)>,
    in_block: Option<usize>,
) -> Result<(), LangError> {
    loop {
        if cur.eat_sym(";") {
            continue;
        }
        if cur.is_sym("}") || cur.at_end() {
            return Ok(());
        }
        let pos = cur.pos();
        if cur.eat_kw("atomic") {
            if in_block.is_some() {
                return Err(LangError::NestedAtomic { pos });
            }
            expect_sym(cur, "{")?;
            let id = blocks.len();
            let start = stmts.len();
            blocks.push((start, start, pos));
            parse_stmts(cur, stmts, blocks, Some(id))?;
            expect_sym(cur, "}")?;
            if stmts.len() == start {
                return Err(LangError::EmptyAtomic { pos });
            }
            blocks[id].1 = stmts.len();
            continue;
        }
        let mut label = None;
        if let (
            Some(Token {
                tok: Tok::Ident(_), ..
            }),
            Some(Token {
                tok: Tok::Sym(":"), ..
            }),
        ) = (cur.peek(), cur.peek_at(1))
        {
            let (l, _) = ident(cur, "a label")?;
            cur.bump();
            label = Some(l);
        }
        let ipos = cur.pos();
        let syn = parse_instr(cur)?;
        let attrs = parse_attrs(cur)?;
        stmts.push(Stmt {
            label,
            syn,
            attrs,
            block: in_block,
            pos: ipos,
        });
    }
}

/// Parses text that contains no macro definitions or calls.
pub(crate) fn parse_expanded(text: &str) -> Result<Program, LangError> {
    let toks = tokenize(text)?;
    let mut cur = Cursor::new(&toks);
    let mut declared: Vec<String> = Vec::new();
    let mut raw_procs: Vec<RawProcess> = Vec::new();
    let mut finals: Vec<(Expr, Pos)> = Vec::new();

    while !cur.at_end() {
        if cur.eat_sym(";") {
            continue;
        }
        let pos = cur.pos();
        if cur.eat_kw("shared") {
            loop {
                let (name, npos) = ident(&mut cur, "a shared variable name")?;
                if declared.contains(&name) {
                    return Err(LangError::DuplicateShared { pos: npos, name });
                }
                declared.push(name);
                if !cur.eat_sym(",") {
                    break;
                }
            }
        } else if cur.eat_kw("process") {
            let id = int(&mut cur, "a process index")?;
            expect_sym(&mut cur, "{")?;
            let mut stmts = Vec::new();
            let mut blocks = Vec::new();
            parse_stmts(&mut cur, &mut stmts, &mut blocks, None)?;
            expect_sym(&mut cur, "}")?;
            raw_procs.push(RawProcess {
                id,
                pos,
                stmts,
                blocks,
            });
        } else if cur.eat_kw("final") {
            if !cur.eat_kw("assert") {
                return Err(syntax(&cur, "`assert` after `final`"));
            }
            finals.push((parse_expr(&mut cur)?, pos));
        } else if cur.is_kw("macro") {
            return Err(LangError::Syntax {
                pos,
                expected: "a top-level item".into(),
                found: "unexpanded macro definition".into(),
            });
        } else {
            return Err(syntax(&cur, "`shared`, `process` or `final`"));
        }
    }
    resolve(declared, raw_procs, finals)
}

fn resolve(
    declared: Vec<String>,
    mut raw_procs: Vec<RawProcess>,
    finals: Vec<(Expr, Pos)>,
) -> Result<Program, LangError> {
    if raw_procs.is_empty() {
        return Err(LangError::NoProcesses);
    }
    raw_procs.sort_by_key(|p| p.id);
    for (i, p) in raw_procs.iter().enumerate() {
        if p.id != i as i64 {
            return Err(LangError::ProcessNumbering {
                pos: p.pos,
                found: p.id,
                expected: i,
            });
        }
    }

    let mut shared = declared;
    for p in &raw_procs {
        for s in &p.stmts {
            let var = match &s.syn {
                Syn::Load(_, x) | Syn::Store(x, _) => x,
                _ => continue,
            };
            if !shared.contains(var) {
                shared.push(var.clone());
            }
        }
    }
    let shared_set: HashSet<&str> = shared.iter().map(String::as_str).collect();
    let var_id = |name: &str| VarId(shared.iter().position(|s| s == name).unwrap() as u16);

    let mut processes = Vec::new();
    let mut blocks = Vec::new();
    for rp in &raw_procs {
        let mut regs: Vec<String> = Vec::new();
        let reg = |name: &str, pos: Pos, regs: &mut Vec<String>| -> Result<RegId, LangError> {
            if shared_set.contains(name) {
                return Err(LangError::SharedInTerm {
                    pos,
                    name: name.to_string(),
                });
            }
            Ok(match regs.iter().position(|r| r == name) {
                Some(i) => RegId(i as u16),
                None => {
                    regs.push(name.to_string());
                    RegId(regs.len() as u16 - 1)
                }
            })
        };

        let mut labels: HashMap<&str, usize> = HashMap::new();
        for (i, s) in rp.stmts.iter().enumerate() {
            if let Some(l) = &s.label {
                if labels.insert(l.as_str(), i).is_some() {
                    return Err(LangError::DuplicateLabel {
                        pos: s.pos,
                        process: rp.id as usize,
                        label: l.clone(),
                    });
                }
            }
        }

        let block_base = blocks.len();
        for &(start, end, _) in &rp.blocks {
            blocks.push(AtomicBlock {
                process: processes.len(),
                start,
                end,
            });
        }

        let mut instructions = Vec::new();
        for (i, s) in rp.stmts.iter().enumerate() {
            let raw = match &s.syn {
                Syn::Move(r, e) => {
                    let dst = reg(r, s.pos, &mut regs)?;
                    let term = lower(e, &mut |n, p| reg(n, p, &mut regs))?;
                    RawInstruction::Move { dst, term }
                }
                Syn::Load(r, x) => RawInstruction::Load {
                    dst: reg(r, s.pos, &mut regs)?,
                    var: var_id(x),
                },
                Syn::Store(x, e) => RawInstruction::Store {
                    var: var_id(x),
                    term: lower(e, &mut |n, p| reg(n, p, &mut regs))?,
                },
                Syn::Jump(l, e) => {
                    let target =
                        *labels
                            .get(l.as_str())
                            .ok_or_else(|| LangError::UnresolvedTarget {
                                pos: s.pos,
                                label: l.clone(),
                            })?;
                    let cond = lower(e, &mut |n, p| reg(n, p, &mut regs))?;
                    RawInstruction::Jump { target, cond }
                }
                Syn::Nop => RawInstruction::Nop,
                Syn::Assert(e) => {
                    RawInstruction::Assert(lower(e, &mut |n, p| reg(n, p, &mut regs))?)
                }
            };
            let label = match &s.label {
                Some(l) => Label {
                    name: l.clone(),
                    explicit: true,
                },
                None => Label::auto(i),
            };
            let attributes: BTreeSet<String> = s.attrs.iter().cloned().collect();
            if s.block.is_some() && attributes.contains(CHOOSE_ATTR) {
                return Err(LangError::ChooseInAtomic { pos: s.pos });
            }
            instructions.push(Instruction {
                label,
                attributes,
                raw,
                atomic_block: s.block.map(|b| b + block_base),
                pos: s.pos,
            });
        }

        // Jumps may enter a block only at its first instruction.
        for ins in &instructions {
            if let RawInstruction::Jump { target, .. } = ins.raw {
                let tgt = &instructions[target];
                if let Some(b) = tgt.atomic_block {
                    let blk = blocks[b];
                    if ins.atomic_block != Some(b) && target != blk.start {
                        return Err(LangError::JumpIntoAtomic {
                            pos: ins.pos,
                            label: tgt.label.name.clone(),
                        });
                    }
                }
            }
        }

        processes.push(Process {
            instructions,
            registers: regs,
        });
    }

    let mut final_asserts = Vec::new();
    for (e, pos) in finals {
        let term = lower_final(&e, &processes, &shared)?;
        final_asserts.push(FinalAssert { term, pos });
    }

    Ok(Program {
        processes,
        shared,
        blocks,
        finals: final_asserts,
    })
}

fn lower(
    e: &Expr,
    reg: &mut impl FnMut(&str, Pos) -> Result<RegId, LangError>,
) -> Result<Term, LangError> {
    Ok(match e {
        Expr::Const(v) => Term::Const(*v),
        Expr::Name(n, p) => Term::Reg(reg(n, *p)?),
        Expr::Qualified(n, _, p) => {
            return Err(LangError::Syntax {
                pos: *p,
                expected: "a register".into(),
                found: format!("qualified name `{n}@..` outside a final assertion"),
            })
        }
        Expr::Bin(op, a, b) => Term::Bin(*op, Box::new(lower(a, reg)?), Box::new(lower(b, reg)?)),
        Expr::Not(t) => Term::Not(Box::new(lower(t, reg)?)),
    })
}

fn lower_final(
    e: &Expr,
    processes: &[Process],
    shared: &[String],
) -> Result<Term<FinalRef>, LangError> {
    Ok(match e {
        Expr::Const(v) => Term::Const(*v),
        Expr::Name(n, p) => {
            return Err(LangError::Syntax {
                pos: *p,
                expected: "a qualified name `name@process`".into(),
                found: format!("`{n}`"),
            })
        }
        Expr::Qualified(n, proc_idx, p) => {
            let proc_ref = usize::try_from(*proc_idx)
                .ok()
                .and_then(|i| processes.get(i).map(|pr| (i, pr)));
            let Some((pi, pr)) = proc_ref else {
                return Err(LangError::UnknownName {
                    pos: *p,
                    name: format!("{n}@{proc_idx}"),
                });
            };
            if let Some(r) = pr.reg_id(n) {
                Term::Reg(FinalRef::Reg(pi, r))
            } else if let Some(v) = shared.iter().position(|s| s == n) {
                Term::Reg(FinalRef::Mem(pi, VarId(v as u16)))
            } else {
                return Err(LangError::UnknownName {
                    pos: *p,
                    name: format!("{n}@{proc_idx}"),
                });
            }
        }
        Expr::Bin(op, a, b) => Term::Bin(
            *op,
            Box::new(lower_final(a, processes, shared)?),
            Box::new(lower_final(b, processes, shared)?),
        ),
        Expr::Not(t) => Term::Not(Box::new(lower_final(t, processes, shared)?)),
    })
}

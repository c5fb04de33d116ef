//! MCM definition files.
//!
//! ```text
//! mcm "TSO" {
//!   stages { {Fe Is Ex} {Re} }
//!   rule store_store {
//!     vars i0 i1: instr, d: proc;
//!     where kind(i0) = store, kind(i1) = store, proc(i0) = proc(i1);
//!     when Fe(i0) < Fe(i1);
//!     then Re(i0, d) < Re(i1, d);
//!   }
//! }
//! ```

use std::collections::HashSet;

use super::ast::*;
use super::stages::validate_stages;
use super::McmError;
use crate::lang::InstrKind;
use crate::lex::{tokenize, Cursor, Pos, Tok, Token};

const RESERVED: &[&str] = &[
    "kind", "proc", "obs", "loc", "attr", "label", "in", "has", "lacks", "and", "vars", "where",
    "when", "then", "instr", "Fe", "Is", "Ex", "Re",
];

pub fn parse_mcm(text: &str) -> Result<McmSpec, McmError> {
    let toks = tokenize(text)?;
    let mut cur = Cursor::new(&toks);
    if !cur.eat_kw("mcm") {
        return Err(syntax(&cur, "`mcm`"));
    }
    let name = match cur.peek() {
        Some(Token {
            tok: Tok::Str(s), ..
        }) => {
            cur.bump();
            s.clone()
        }
        _ => ident(&mut cur, "a model name")?.0,
    };
    expect(&mut cur, "{")?;
    let mut rules: Vec<ConstraintRule> = Vec::new();
    let mut stages = None;
    loop {
        if cur.eat_sym("}") {
            break;
        }
        let pos = cur.pos();
        if cur.eat_kw("stages") {
            if stages.is_some() {
                return Err(McmError::Syntax {
                    pos,
                    expected: "a rule".into(),
                    found: "a second `stages` block".into(),
                });
            }
            let spec = parse_stages(&mut cur)?;
            validate_stages(&spec).map_err(|source| McmError::Stage { pos, source })?;
            stages = Some(spec);
        } else if cur.eat_kw("rule") {
            let rule = parse_rule(&mut cur, pos)?;
            if rules.iter().any(|r| r.name == rule.name) {
                return Err(McmError::DuplicateRule {
                    pos,
                    name: rule.name,
                });
            }
            rules.push(rule);
        } else {
            return Err(syntax(&cur, "`rule`, `stages` or `}`"));
        }
    }
    if !cur.at_end() {
        return Err(syntax(&cur, "end of input"));
    }
    Ok(McmSpec {
        name,
        rules,
        stages,
    })
}

fn syntax(cur: &Cursor<'_>, expected: &str) -> McmError {
    McmError::Syntax {
        pos: cur.pos(),
        expected: expected.to_string(),
        found: cur.describe_next(),
    }
}

fn expect(cur: &mut Cursor<'_>, sym: &str) -> Result<(), McmError> {
    if cur.eat_sym(sym) {
        Ok(())
    } else {
        Err(syntax(cur, &format!("`{sym}`")))
    }
}

fn ident(cur: &mut Cursor<'_>, what: &str) -> Result<(String, Pos), McmError> {
    match cur.peek() {
        Some(Token {
            tok: Tok::Ident(s),
            pos,
            ..
        }) => {
            cur.bump();
            Ok((s.clone(), *pos))
        }
        _ => Err(syntax(cur, what)),
    }
}

fn parse_stages(cur: &mut Cursor<'_>) -> Result<StageSpec, McmError> {
    expect(cur, "{")?;
    let mut stages = Vec::new();
    loop {
        cur.eat_sym(",");
        if cur.eat_sym("}") {
            break;
        }
        expect(cur, "{")?;
        let mut stage = Vec::new();
        loop {
            cur.eat_sym(",");
            if cur.eat_sym("}") {
                break;
            }
            let (k, pos) = ident(cur, "an operation kind")?;
            let kind = OpKind::from_name(&k).ok_or(McmError::Syntax {
                pos,
                expected: "Fe, Is, Ex or Re".into(),
                found: format!("`{k}`"),
            })?;
            stage.push(kind);
        }
        stages.push(stage);
    }
    Ok(StageSpec { stages })
}

struct Scope {
    instr: Vec<String>,
    proc: Vec<String>,
}

impl Scope {
    fn instr_var(&self, name: &str, pos: Pos) -> Result<String, McmError> {
        if self.instr.iter().any(|v| v == name) {
            Ok(name.to_string())
        } else if self.proc.iter().any(|v| v == name) {
            Err(McmError::VarSort {
                pos,
                name: name.into(),
                expected: "instr",
            })
        } else {
            Err(McmError::UndeclaredVar {
                pos,
                name: name.into(),
            })
        }
    }

    fn proc_var(&self, name: &str, pos: Pos) -> Result<String, McmError> {
        if self.proc.iter().any(|v| v == name) {
            Ok(name.to_string())
        } else if self.instr.iter().any(|v| v == name) {
            Err(McmError::VarSort {
                pos,
                name: name.into(),
                expected: "proc",
            })
        } else {
            Err(McmError::UndeclaredVar {
                pos,
                name: name.into(),
            })
        }
    }
}

fn parse_rule(cur: &mut Cursor<'_>, pos: Pos) -> Result<ConstraintRule, McmError> {
    let (name, _) = ident(cur, "a rule name")?;
    expect(cur, "{")?;
    let mut scope = Scope {
        instr: Vec::new(),
        proc: Vec::new(),
    };
    let mut where_ = Vec::new();
    let mut when = Vec::new();
    let mut then = Vec::new();
    let mut seen_then = false;
    loop {
        if cur.eat_sym(";") {
            continue;
        }
        if cur.eat_sym("}") {
            break;
        }
        if cur.eat_kw("vars") {
            parse_vars(cur, &mut scope)?;
        } else if cur.eat_kw("where") {
            parse_list(cur, |c| {
                where_.push(parse_where(c, &scope)?);
                Ok(())
            })?;
        } else if cur.eat_kw("when") {
            parse_list(cur, |c| {
                when.push(parse_atom(c, &scope)?);
                Ok(())
            })?;
        } else if cur.eat_kw("then") {
            seen_then = true;
            parse_list(cur, |c| {
                then.push(parse_atom(c, &scope)?);
                Ok(())
            })?;
        } else {
            return Err(syntax(cur, "`vars`, `where`, `when`, `then` or `}`"));
        }
    }
    if !seen_then || then.is_empty() {
        return Err(McmError::Syntax {
            pos,
            expected: format!("a `then` clause in rule `{name}`"),
            found: "none".into(),
        });
    }
    Ok(ConstraintRule {
        name,
        instr_vars: scope.instr,
        proc_vars: scope.proc,
        where_,
        when,
        then,
        pos,
    })
}

/// `a b: instr, d: proc ;`
fn parse_vars(cur: &mut Cursor<'_>, scope: &mut Scope) -> Result<(), McmError> {
    loop {
        let mut names = Vec::new();
        while !cur.is_sym(":") {
            cur.eat_sym(",");
            let (n, p) = ident(cur, "a variable name")?;
            if RESERVED.contains(&n.as_str()) {
                return Err(McmError::Syntax {
                    pos: p,
                    expected: "a variable name".into(),
                    found: format!("reserved word `{n}`"),
                });
            }
            if scope.instr.contains(&n)
                || scope.proc.contains(&n)
                || names.iter().any(|(m, _)| *m == n)
            {
                return Err(McmError::DuplicateVar { pos: p, name: n });
            }
            names.push((n, p));
        }
        cur.bump();
        let (sort, spos) = ident(cur, "`instr` or `proc`")?;
        let target = match sort.as_str() {
            "instr" => &mut scope.instr,
            "proc" => &mut scope.proc,
            _ => {
                return Err(McmError::Syntax {
                    pos: spos,
                    expected: "`instr` or `proc`".into(),
                    found: format!("`{sort}`"),
                })
            }
        };
        target.extend(names.into_iter().map(|(n, _)| n));
        if cur.eat_sym(";") || cur.is_sym("}") {
            return Ok(());
        }
        expect(cur, ",")?;
    }
}

/// Items separated by `,` or `and`, ended by `;` (or `}`). May be empty.
fn parse_list(
    cur: &mut Cursor<'_>,
    mut item: impl FnMut(&mut Cursor<'_>) -> Result<(), McmError>,
) -> Result<(), McmError> {
    if cur.eat_sym(";") || cur.is_sym("}") {
        return Ok(());
    }
    loop {
        item(cur)?;
        if cur.eat_sym(";") || cur.is_sym("}") {
            return Ok(());
        }
        if !(cur.eat_sym(",") || cur.eat_kw("and")) {
            return Err(syntax(cur, "`,`, `and` or `;`"));
        }
    }
}

fn paren_var(cur: &mut Cursor<'_>) -> Result<(String, Pos), McmError> {
    expect(cur, "(")?;
    let v = ident(cur, "a variable")?;
    expect(cur, ")")?;
    Ok(v)
}

fn eq_or_ne(cur: &mut Cursor<'_>) -> Result<bool, McmError> {
    if cur.eat_sym("=") || cur.eat_sym("==") {
        Ok(true)
    } else if cur.eat_sym("!=") {
        Ok(false)
    } else {
        Err(syntax(cur, "`=` or `!=`"))
    }
}

fn kind_name(cur: &mut Cursor<'_>) -> Result<InstrKind, McmError> {
    let (k, pos) = ident(cur, "an instruction kind")?;
    InstrKind::from_name(&k).ok_or(McmError::Syntax {
        pos,
        expected: "an instruction kind".into(),
        found: format!("`{k}`"),
    })
}

fn proc_expr(cur: &mut Cursor<'_>, scope: &Scope) -> Result<ProcExpr, McmError> {
    if let Some(Token {
        tok: Tok::Int(v),
        pos,
        ..
    }) = cur.peek()
    {
        cur.bump();
        let v = usize::try_from(*v).map_err(|_| McmError::Syntax {
            pos: *pos,
            expected: "a process index".into(),
            found: v.to_string(),
        })?;
        return Ok(ProcExpr::Const(v));
    }
    if cur.is_kw("proc") || cur.is_kw("obs") {
        cur.bump();
        let (v, p) = paren_var(cur)?;
        return Ok(ProcExpr::ProcOf(scope.instr_var(&v, p)?));
    }
    let (v, p) = ident(cur, "a process expression")?;
    Ok(ProcExpr::Var(scope.proc_var(&v, p)?))
}

fn parse_where(cur: &mut Cursor<'_>, scope: &Scope) -> Result<WherePred, McmError> {
    if cur.eat_kw("kind") {
        let (v, p) = paren_var(cur)?;
        let var = scope.instr_var(&v, p)?;
        if cur.eat_kw("in") {
            expect(cur, "{")?;
            let mut kinds = Vec::new();
            loop {
                kinds.push(kind_name(cur)?);
                if cur.eat_sym("}") {
                    break;
                }
                expect(cur, ",")?;
            }
            return Ok(WherePred::Kind {
                var,
                kinds,
                negated: false,
            });
        }
        let equal = eq_or_ne(cur)?;
        let kinds = vec![kind_name(cur)?];
        return Ok(WherePred::Kind {
            var,
            kinds,
            negated: !equal,
        });
    }
    if cur.eat_kw("loc") {
        let (a, pa) = paren_var(cur)?;
        let a = scope.instr_var(&a, pa)?;
        let equal = eq_or_ne(cur)?;
        if !cur.eat_kw("loc") {
            return Err(syntax(cur, "`loc(..)`"));
        }
        let (b, pb) = paren_var(cur)?;
        let b = scope.instr_var(&b, pb)?;
        return Ok(WherePred::Loc { a, b, equal });
    }
    if cur.eat_kw("attr") {
        let (v, p) = paren_var(cur)?;
        let var = scope.instr_var(&v, p)?;
        let negated = if cur.eat_kw("has") {
            false
        } else if cur.eat_kw("lacks") {
            true
        } else {
            return Err(syntax(cur, "`has` or `lacks`"));
        };
        let (attr, _) = ident(cur, "an attribute name")?;
        return Ok(WherePred::Attr { var, attr, negated });
    }
    if cur.eat_kw("label") {
        let (v, p) = paren_var(cur)?;
        let var = scope.instr_var(&v, p)?;
        let equal = eq_or_ne(cur)?;
        let (label, _) = ident(cur, "a label")?;
        return Ok(WherePred::Label { var, label, equal });
    }
    // `v != w` over instruction variables.
    if let Some(Token {
        tok: Tok::Ident(name),
        ..
    }) = cur.peek()
    {
        if scope.instr.contains(name) {
            cur.bump();
            if !cur.eat_sym("!=") {
                return Err(syntax(cur, "`!=`"));
            }
            let (b, pb) = ident(cur, "a variable")?;
            let b = scope.instr_var(&b, pb)?;
            return Ok(WherePred::Distinct { a: name.clone(), b });
        }
    }
    let lhs = proc_expr(cur, scope)?;
    let equal = eq_or_ne(cur)?;
    let rhs = proc_expr(cur, scope)?;
    Ok(WherePred::Proc { lhs, rhs, equal })
}

fn parse_opref(cur: &mut Cursor<'_>, scope: &Scope) -> Result<OpRef, McmError> {
    let (k, pos) = ident(cur, "an operation (Fe, Is, Ex or Re)")?;
    let kind = OpKind::from_name(&k).ok_or(McmError::Syntax {
        pos,
        expected: "an operation (Fe, Is, Ex or Re)".into(),
        found: format!("`{k}`"),
    })?;
    expect(cur, "(")?;
    let (v, vp) = ident(cur, "an instruction variable")?;
    let var = scope.instr_var(&v, vp)?;
    let dest = if cur.eat_sym(",") {
        let dpos = cur.pos();
        if kind != OpKind::Re {
            return Err(McmError::DestOnNonReflect { pos: dpos });
        }
        Some(if cur.eat_sym("*") {
            DestRef::Any
        } else {
            match proc_expr(cur, scope)? {
                ProcExpr::Const(c) => DestRef::Const(c),
                ProcExpr::Var(d) => DestRef::Var(d),
                ProcExpr::ProcOf(w) => DestRef::ProcOf(w),
            }
        })
    } else if kind == OpKind::Re {
        return Err(McmError::MissingDest { pos });
    } else {
        None
    };
    expect(cur, ")")?;
    Ok(OpRef { kind, var, dest })
}

fn parse_atom(cur: &mut Cursor<'_>, scope: &Scope) -> Result<OrderAtom, McmError> {
    let pos = cur.pos();
    if cur.is_sym("!") || cur.is_kw("not") {
        return Err(McmError::NegatedAtom { pos });
    }
    let lhs = parse_opref(cur, scope)?;
    let op_pos = cur.pos();
    if !cur.eat_sym("<") {
        for op in ["<=", ">=", ">", "=", "==", "!="] {
            if cur.is_sym(op) {
                return Err(McmError::UnsupportedComparison {
                    pos: op_pos,
                    op: op.to_string(),
                });
            }
        }
        return Err(syntax(cur, "`<`"));
    }
    let rhs = parse_opref(cur, scope)?;
    Ok(OrderAtom { lhs, rhs })
}

/// Declared variables that no atom or where-filter mentions.
pub fn unused_vars(rule: &ConstraintRule) -> Vec<String> {
    let mut used: HashSet<&str> = HashSet::new();
    for a in rule.when.iter().chain(&rule.then) {
        for r in [&a.lhs, &a.rhs] {
            used.insert(&r.var);
            match &r.dest {
                Some(DestRef::Var(d)) | Some(DestRef::ProcOf(d)) => {
                    used.insert(d);
                }
                _ => {}
            }
        }
    }
    for w in &rule.where_ {
        used.extend(w.instr_vars());
        used.extend(w.proc_vars());
    }
    rule.instr_vars
        .iter()
        .chain(&rule.proc_vars)
        .filter(|v| !used.contains(v.as_str()))
        .cloned()
        .collect()
}

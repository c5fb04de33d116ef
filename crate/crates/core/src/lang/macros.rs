//! Textual macro expansion.
//!
//! `macro NAME(a, b) { body }` defines a macro; `NAME(x, (r + 1))` expands
//! to the body on a single line with parameters replaced by the argument
//! text. Identifiers spelled `$name` inside a body are renamed to a fresh
//! `name__<k>` per expansion. Definitions are replaced by blank lines so
//! that line numbers in the rest of the file do not move.

use std::collections::HashMap;

use super::parse::KEYWORDS;
use super::LangError;
use crate::lex::{tokenize, Pos, Tok, Token};

/// Built-in definitions of `CAS`, `CAS2`, `CAS_NORET` and `CAS2_NORET`.
pub const PRELUDE: &str = include_str!("prelude.mcm-prog");

const MAX_DEPTH: usize = 32;

#[derive(Debug, Clone)]
struct MacroDef {
    params: Vec<String>,
    /// Body tokens with their source text.
    body: Vec<(Tok, String)>,
    builtin: bool,
}

struct Expander {
    defs: HashMap<String, MacroDef>,
    fresh: usize,
}

/// Expands every macro call in `text`, using the built-in prelude plus any
/// definitions found in `text` itself.
pub fn expand_macros(text: &str) -> Result<String, LangError> {
    let mut ex = Expander {
        defs: HashMap::new(),
        fresh: 0,
    };
    ex.expand(PRELUDE, 0, true)?;
    for def in ex.defs.values_mut() {
        def.builtin = true;
    }
    ex.expand(text, 0, true)
}

fn relocate(err: LangError, at: Pos) -> LangError {
    match err {
        LangError::Syntax {
            expected, found, ..
        } => LangError::Syntax {
            pos: at,
            expected,
            found,
        },
        LangError::UnknownMacro { name, .. } => LangError::UnknownMacro { pos: at, name },
        LangError::MacroArity {
            name,
            expected,
            found,
            ..
        } => LangError::MacroArity {
            pos: at,
            name,
            expected,
            found,
        },
        LangError::NestedAtomic { .. } => LangError::NestedAtomic { pos: at },
        LangError::MacroDepth { name, .. } => LangError::MacroDepth { pos: at, name },
        other => other,
    }
}

fn syntax(tok: Option<&Token>, end: Pos, expected: &str) -> LangError {
    LangError::Syntax {
        pos: tok.map(|t| t.pos).unwrap_or(end),
        expected: expected.to_string(),
        found: tok
            .map(|t| t.tok.to_string())
            .unwrap_or_else(|| "end of input".into()),
    }
}

fn is_ident(t: Option<&Token>) -> Option<&str> {
    match t {
        Some(Token {
            tok: Tok::Ident(s), ..
        }) => Some(s.as_str()),
        _ => None,
    }
}

fn is_sym(t: Option<&Token>, sym: &str) -> bool {
    matches!(t, Some(Token { tok: Tok::Sym(s), .. }) if *s == sym)
}

impl Expander {
    fn expand(&mut self, src: &str, depth: usize, allow_defs: bool) -> Result<String, LangError> {
        let toks = tokenize(src)?;
        let end = toks.last().map(|t| t.pos).unwrap_or_default();
        let mut out = String::with_capacity(src.len());
        let mut copied = 0usize;
        let mut braces = 0usize;
        let mut atomic_at: Option<usize> = None;
        let mut i = 0;
        while i < toks.len() {
            let t = &toks[i];
            match &t.tok {
                Tok::Sym("{") => braces += 1,
                Tok::Sym("}") => {
                    braces = braces.saturating_sub(1);
                    if atomic_at == Some(braces) {
                        atomic_at = None;
                    }
                }
                Tok::Ident(s) if s == "atomic" && is_sym(toks.get(i + 1), "{") => {
                    atomic_at = Some(braces);
                }
                Tok::Ident(s) if s == "macro" => {
                    if !allow_defs {
                        return Err(LangError::Syntax {
                            pos: t.pos,
                            expected: "an instruction".into(),
                            found: "macro definition inside a macro body".into(),
                        });
                    }
                    let (next, name, def) = self.parse_def(&toks, i, src, end)?;
                    let span_end = toks[next - 1].span.1;
                    out.push_str(&src[copied..t.span.0]);
                    out.extend(src[t.span.0..span_end].chars().filter(|c| *c == '\n'));
                    copied = span_end;
                    match self.defs.get(&name) {
                        Some(old) if !old.builtin => {
                            return Err(LangError::DuplicateMacro { pos: t.pos, name })
                        }
                        _ => {
                            self.defs.insert(name, def);
                        }
                    }
                    i = next;
                    continue;
                }
                Tok::Ident(name)
                    if is_sym(toks.get(i + 1), "(")
                        && !KEYWORDS.contains(&name.as_str())
                        && !matches!(
                            i.checked_sub(1).and_then(|k| is_ident(toks.get(k))),
                            Some("move" | "store" | "jump" | "load" | "assert")
                        ) =>
                {
                    let Some(def) = self.defs.get(name).cloned() else {
                        return Err(LangError::UnknownMacro {
                            pos: t.pos,
                            name: name.clone(),
                        });
                    };
                    if depth >= MAX_DEPTH {
                        return Err(LangError::MacroDepth {
                            pos: t.pos,
                            name: name.clone(),
                        });
                    }
                    let (next, args) = split_args(&toks, i + 1, src, end)?;
                    if args.len() != def.params.len() {
                        return Err(LangError::MacroArity {
                            pos: t.pos,
                            name: name.clone(),
                            expected: def.params.len(),
                            found: args.len(),
                        });
                    }
                    let body = self.instantiate(&def, &args);
                    let expanded = self
                        .expand(&body, depth + 1, false)
                        .map_err(|e| relocate(e, t.pos))?;
                    if atomic_at.is_some()
                        && tokenize(&expanded)?
                            .iter()
                            .any(|k| k.tok == Tok::Ident("atomic".into()))
                    {
                        return Err(LangError::NestedAtomic { pos: t.pos });
                    }
                    out.push_str(&src[copied..t.span.0]);
                    out.push_str(&expanded);
                    copied = toks[next - 1].span.1;
                    i = next;
                    continue;
                }
                _ => {}
            }
            i += 1;
        }
        out.push_str(&src[copied..]);
        Ok(out)
    }

    /// Parses `macro NAME(params) { body }` starting at `toks[i]`. Returns
    /// the index just past the closing brace.
    fn parse_def(
        &self,
        toks: &[Token],
        mut i: usize,
        src: &str,
        end: Pos,
    ) -> Result<(usize, String, MacroDef), LangError> {
        i += 1;
        let name = is_ident(toks.get(i))
            .filter(|n| !KEYWORDS.contains(n) && !n.starts_with('$'))
            .ok_or_else(|| syntax(toks.get(i), end, "a macro name"))?
            .to_string();
        i += 1;
        if !is_sym(toks.get(i), "(") {
            return Err(syntax(toks.get(i), end, "`(`"));
        }
        i += 1;
        let mut params = Vec::new();
        if is_sym(toks.get(i), ")") {
            i += 1;
        } else {
            loop {
                let p = is_ident(toks.get(i))
                    .filter(|n| !KEYWORDS.contains(n) && !n.starts_with('$'))
                    .ok_or_else(|| syntax(toks.get(i), end, "a parameter name"))?;
                params.push(p.to_string());
                i += 1;
                if is_sym(toks.get(i), ")") {
                    i += 1;
                    break;
                }
                if !is_sym(toks.get(i), ",") {
                    return Err(syntax(toks.get(i), end, "`,` or `)`"));
                }
                i += 1;
            }
        }
        if !is_sym(toks.get(i), "{") {
            return Err(syntax(toks.get(i), end, "`{`"));
        }
        i += 1;
        let mut depth = 1usize;
        let mut body = Vec::new();
        loop {
            let Some(t) = toks.get(i) else {
                return Err(syntax(None, end, "`}` closing the macro body"));
            };
            if is_sym(Some(t), "{") {
                depth += 1;
            } else if is_sym(Some(t), "}") {
                depth -= 1;
                if depth == 0 {
                    i += 1;
                    break;
                }
            }
            body.push((t.tok.clone(), src[t.span.0..t.span.1].to_string()));
            i += 1;
        }
        Ok((
            i,
            name,
            MacroDef {
                params,
                body,
                builtin: false,
            },
        ))
    }

    fn instantiate(&mut self, def: &MacroDef, args: &[String]) -> String {
        let k = self.fresh;
        self.fresh += 1;
        let mut parts = Vec::with_capacity(def.body.len());
        for (tok, text) in &def.body {
            match tok {
                Tok::Ident(s) if s.starts_with('$') => parts.push(format!("{}__{k}", &s[1..])),
                Tok::Ident(s) => match def.params.iter().position(|p| p == s) {
                    Some(idx) => parts.push(args[idx].clone()),
                    None => parts.push(text.clone()),
                },
                _ => parts.push(text.clone()),
            }
        }
        parts.join(" ")
    }
}

/// Splits a parenthesized argument list starting at the `(` at `toks[i]`.
fn split_args(
    toks: &[Token],
    i: usize,
    src: &str,
    end: Pos,
) -> Result<(usize, Vec<String>), LangError> {
    let mut j = i + 1;
    let mut depth = 0usize;
    let mut args = Vec::new();
    let mut cur: Vec<&Token> = Vec::new();
    if is_sym(toks.get(j), ")") {
        return Ok((j + 1, args));
    }
    loop {
        let Some(t) = toks.get(j) else {
            return Err(syntax(None, end, "`)` closing the macro arguments"));
        };
        match &t.tok {
            Tok::Sym("(" | "[" | "{") => depth += 1,
            Tok::Sym(")" | "]" | "}") if depth > 0 => depth -= 1,
            Tok::Sym(s @ (")" | ",")) if depth == 0 => {
                if cur.is_empty() {
                    return Err(syntax(Some(t), end, "a macro argument"));
                }
                let text: Vec<&str> = cur.iter().map(|t| &src[t.span.0..t.span.1]).collect();
                if text.len() == 1 {
                    args.push(text[0].to_string());
                } else {
                    args.push(format!("({})", text.join(" ")));
                }
                cur.clear();
                if *s == ")" {
                    return Ok((j + 1, args));
                }
                j += 1;
                continue;
            }
            _ => {}
        }
        cur.push(t);
        j += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_program, InstrKind, LangError, RawInstruction};
    use super::*;

    #[test]
    fn cas_expands_to_atomic_block() {
        let p = parse_program("process 0 { CAS(x, 0, 1, r) }").unwrap();
        let ins = &p.processes[0].instructions;
        let kinds: Vec<InstrKind> = ins.iter().map(|i| i.raw.kind()).collect();
        use InstrKind::*;
        assert_eq!(kinds, vec![Nop, Load, Move, Jump, Store, Nop]);
        assert!(ins[0].has_attr("cas_fence"));
        assert_eq!(ins[0].atomic_block, None);
        assert!(ins[1..].iter().all(|i| i.atomic_block == Some(0)));
        assert_eq!(p.shared, vec!["x".to_string()]);
        assert!(p.processes[0].reg_id("r").is_some());
    }

    #[test]
    fn cas_noret_has_no_result_register() {
        let p = parse_program("process 0 { CAS_NORET(x, 0, 1) }").unwrap();
        let ins = &p.processes[0].instructions;
        assert!(ins
            .iter()
            .all(|i| !matches!(i.raw, RawInstruction::Move { .. })));
        assert_eq!(p.processes[0].registers.len(), 1);
    }

    #[test]
    fn fresh_names_differ_per_expansion() {
        let out = expand_macros("process 0 { CAS(x, 0, 1, r); CAS(x, 1, 2, r) }").unwrap();
        let p = parse_program(&out).unwrap();
        assert_eq!(p.blocks.len(), 2);
        // `r` plus one temporary per expansion.
        assert_eq!(p.processes[0].registers.len(), 3);
    }

    #[test]
    fn expansion_matches_hand_written_source() {
        let by_macro = parse_program("process 0 { CAS_NORET(x, 0, (a + 1)) }").unwrap();
        let by_hand = parse_program(
            "process 0 { nop [cas_fence]
               atomic { load t__0 x; jump skip__0 (t__0 != 0); store x (a + 1); skip__0: nop } }",
        )
        .unwrap();
        assert_eq!(by_macro, by_hand);
    }

    #[test]
    fn user_macros_and_line_numbers() {
        let src =
            "macro INC(v) {\n load $t v\n store v ($t + 1)\n}\nprocess 0 {\n INC(c)\n store\n}";
        let err = parse_program(src).unwrap_err();
        // The incomplete `store` is reported at the `}` on line 8.
        assert_eq!(err.pos().unwrap().line, 8);
        let ok = parse_program(&src.replace(" store\n}", "}")).unwrap();
        assert_eq!(ok.processes[0].instructions.len(), 2);
    }

    #[test]
    fn arity_mismatch() {
        let err = expand_macros("process 0 { CAS(x, 0, 1) }").unwrap_err();
        assert!(matches!(
            err,
            LangError::MacroArity {
                expected: 4,
                found: 3,
                ..
            }
        ));
    }

    #[test]
    fn unknown_macro() {
        let err = expand_macros("process 0 { FOO(x) }").unwrap_err();
        assert!(matches!(err, LangError::UnknownMacro { name, .. } if name == "FOO"));
    }

    #[test]
    fn macro_inside_atomic_block_rejected() {
        let err = expand_macros("process 0 { atomic { CAS(x, 0, 1, r) } }").unwrap_err();
        assert!(matches!(err, LangError::NestedAtomic { .. }));
    }

    #[test]
    fn recursive_macro_hits_depth_limit() {
        let err = expand_macros("macro L(v) { L(v) }\nprocess 0 { L(x) }").unwrap_err();
        assert!(matches!(err, LangError::MacroDepth { .. }));
    }

    #[test]
    fn terms_with_parentheses_are_not_calls() {
        let src = "process 0 { move r (1 + 2); store x (r * 2); jump L (r == 3); L: nop }";
        assert_eq!(expand_macros(src).unwrap(), src);
    }
}

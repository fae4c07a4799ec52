//! Parser for policy files.
//!
//! ```text
//! policy P_OE
//! lattice { L < M < H }
//! input x : int @ H declass f to M
//! group y = (x1, x2) declass avg to L
//! equiv g = f compose a
//! fn f (x : int) -> int = x mod 2
//! ```
//!
//! A `lattice` block makes the policy multi-level; every input then needs a
//! level and every declassifier a target. In `declass f, g to L` an item
//! without its own `to` takes the next target to its right.

use indexmap::IndexMap;

use super::lexer::{tokenize, Tok};
use super::parser::{Parser, SpanTree};
use super::{ParseError, Span};
use crate::lang::TypeExpr;
use crate::policy::{
    validate_policy, Declassifier, EquivWitness, GroupDecl, LevelLattice, MultiLevelPolicy, Policy,
    PolicyError, SimplePolicy,
};
use crate::report::Diagnostic;

const STATEMENT_WORDS: &[&str] = &["policy", "lattice", "input", "group", "equiv"];

/// Levels, `lower < upper` edges and the span of a `lattice` block.
type LatticeDecl = (Vec<String>, Vec<(String, String)>, Span);

/// A parsed and validated policy with the source spans of its declarations.
#[derive(Clone, Debug)]
pub struct PolicySource {
    pub policy: Policy,
    decls: IndexMap<(&'static str, String), Span>,
    fn_bodies: IndexMap<String, SpanTree>,
}

impl PolicySource {
    /// Best source location for a policy error.
    pub fn locate(&self, err: &PolicyError) -> Option<Span> {
        locate_in(&self.decls, &self.fn_bodies, err)
    }
}

fn locate_in(
    decls: &IndexMap<(&'static str, String), Span>,
    fn_bodies: &IndexMap<String, SpanTree>,
    err: &PolicyError,
) -> Option<Span> {
    if let PolicyError::DeclassifierTypeError { name, error } = err {
        if let Some(tree) = fn_bodies.get(name) {
            return Some(tree.locate(&error.path));
        }
    }
    let (kind, name) = err.subject()?;
    let kinds: &[&'static str] = if kind == "any" {
        &["input", "group", "fn", "equiv"]
    } else {
        &[kind]
    };
    kinds
        .iter()
        .find_map(|k| decls.get(&(*k, name.to_string())).copied())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoadError {
    Parse(ParseError),
    Invalid(Vec<Diagnostic>),
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LoadError::Parse(e) => write!(f, "{e}"),
            LoadError::Invalid(ds) => {
                let lines: Vec<String> = ds.iter().map(|d| d.to_string()).collect();
                f.write_str(&lines.join("\n"))
            }
        }
    }
}

impl std::error::Error for LoadError {}

impl From<ParseError> for LoadError {
    fn from(e: ParseError) -> Self {
        LoadError::Parse(e)
    }
}

struct RawInput {
    name: String,
    level: Option<String>,
    releases: Vec<(String, Option<String>)>,
}

/// Parses and validates a policy. `default_name` is used when the file has
/// no `policy` line.
pub fn parse_policy(src: &str, default_name: &str) -> Result<PolicySource, LoadError> {
    let mut p = Parser::new(tokenize(src)?, STATEMENT_WORDS);
    let mut name = default_name.to_string();
    let mut lattice: Option<LatticeDecl> = None;
    let mut inputs: Vec<RawInput> = Vec::new();
    let mut groups = Vec::new();
    let mut equivs = Vec::new();
    let mut fns: IndexMap<String, Declassifier> = IndexMap::new();
    let mut decls = IndexMap::new();
    let mut fn_bodies = IndexMap::new();
    let mut errors: Vec<(PolicyError, Option<Span>)> = Vec::new();

    loop {
        let start = p.span();
        match p.peek().clone() {
            Tok::Eof => break,
            Tok::Semi => {
                p.bump();
            }
            Tok::Ident(w) if w == "policy" => {
                p.bump();
                name = p.ident()?.0;
            }
            Tok::Ident(w) if w == "lattice" => {
                p.bump();
                if lattice.is_some() {
                    return Err(ParseError::at(start, "only one lattice block is allowed").into());
                }
                lattice = Some(parse_lattice(&mut p, start)?);
            }
            Tok::Ident(w) if w == "input" => {
                p.bump();
                let (x, span) = p.ident()?;
                p.expect(Tok::Colon)?;
                let ty_span = p.span();
                if p.ty()? != TypeExpr::Int {
                    return Err(ParseError::at(ty_span, "inputs must have type int").into());
                }
                let level = if p.eat(&Tok::At) { Some(p.ident()?.0) } else { None };
                let mut releases = Vec::new();
                if p.is_word("declass") {
                    p.bump();
                    loop {
                        let f = p.ident()?.0;
                        let target = if p.is_word("to") {
                            p.bump();
                            Some(p.ident()?.0)
                        } else {
                            None
                        };
                        releases.push((f, target));
                        if !p.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                if inputs.iter().any(|i| i.name == x) {
                    errors.push((PolicyError::Duplicate { what: "input", name: x.clone() }, Some(span)));
                }
                decls.insert(("input", x.clone()), span);
                inputs.push(RawInput { name: x, level, releases });
            }
            Tok::Ident(w) if w == "group" => {
                p.bump();
                let (y, span) = p.ident()?;
                p.expect(Tok::Eq)?;
                p.expect(Tok::LParen)?;
                let mut members = vec![p.ident()?.0];
                while p.eat(&Tok::Comma) {
                    members.push(p.ident()?.0);
                }
                p.expect(Tok::RParen)?;
                p.expect_word("declass")?;
                let via = p.ident()?.0;
                let target = if p.is_word("to") {
                    p.bump();
                    Some(p.ident()?.0)
                } else {
                    None
                };
                decls.insert(("group", y.clone()), span);
                groups.push(GroupDecl { group_var: y, members, via, target });
            }
            Tok::Ident(w) if w == "equiv" => {
                p.bump();
                let (target, span) = p.ident()?;
                p.expect(Tok::Eq)?;
                let base = p.ident()?.0;
                p.expect_word("compose")?;
                let adapter = p.ident()?.0;
                decls.insert(("equiv", target.clone()), span);
                equivs.push(EquivWitness { target, base, adapter });
            }
            Tok::Ident(w) if w == "fn" => {
                p.bump();
                let (f, span) = p.ident()?;
                p.expect(Tok::LParen)?;
                let param = p.ident()?.0;
                p.expect(Tok::Colon)?;
                let param_type = p.ty()?;
                p.expect(Tok::RParen)?;
                p.expect(Tok::Arrow)?;
                let result_type = p.ty()?;
                p.expect(Tok::Eq)?;
                let (body, body_spans) = p.term()?;
                if fns.contains_key(&f) {
                    errors.push((PolicyError::Duplicate { what: "declassifier", name: f.clone() }, Some(span)));
                }
                decls.insert(("fn", f.clone()), span);
                fn_bodies.insert(f.clone(), body_spans);
                fns.insert(f.clone(), Declassifier { name: f, param, param_type, body, result_type });
            }
            other => {
                return Err(ParseError::at(
                    start,
                    format!("expected `policy`, `lattice`, `input`, `group`, `equiv` or `fn`, found {other}"),
                )
                .into())
            }
        }
    }

    let policy = match lattice {
        None => {
            for i in &inputs {
                if i.level.is_some() || i.releases.iter().any(|(_, t)| t.is_some()) {
                    errors.push((
                        PolicyError::LevelWithoutLattice {
                            name: i.name.clone(),
                        },
                        decls.get(&("input", i.name.clone())).copied(),
                    ));
                }
            }
            for g in &groups {
                if g.target.is_some() {
                    errors.push((
                        PolicyError::LevelWithoutLattice {
                            name: g.group_var.clone(),
                        },
                        decls.get(&("group", g.group_var.clone())).copied(),
                    ));
                }
            }
            Policy::Simple(SimplePolicy {
                name,
                inputs: inputs.iter().map(|i| i.name.clone()).collect(),
                declass: inputs
                    .iter()
                    .filter(|i| !i.releases.is_empty())
                    .map(|i| {
                        (
                            i.name.clone(),
                            i.releases.iter().map(|(f, _)| f.clone()).collect(),
                        )
                    })
                    .collect(),
                groups,
                equivs,
                fns,
            })
        }
        Some((levels, edges, lattice_span)) => {
            if !equivs.is_empty() {
                errors.push((
                    PolicyError::Unsupported(
                        "equivalence witnesses are only supported in policies without levels"
                            .into(),
                    ),
                    decls.get(&("equiv", equivs[0].target.clone())).copied(),
                ));
            }
            let lattice = match LevelLattice::new(levels, edges) {
                Ok(l) => l,
                Err(e) => {
                    errors.push((e, Some(lattice_span)));
                    return Err(LoadError::Invalid(to_diagnostics(errors)));
                }
            };
            let mut lvl = IndexMap::new();
            let mut declass = IndexMap::new();
            for i in &inputs {
                let span = decls.get(&("input", i.name.clone())).copied();
                match &i.level {
                    Some(l) => {
                        lvl.insert(i.name.clone(), l.clone());
                    }
                    None => errors.push((
                        PolicyError::MissingLevel {
                            what: "input",
                            name: i.name.clone(),
                        },
                        span,
                    )),
                }
                if i.releases.is_empty() {
                    continue;
                }
                let mut resolved = Vec::new();
                let mut carry: Option<String> = None;
                for (f, t) in i.releases.iter().rev() {
                    if t.is_some() {
                        carry = t.clone();
                    }
                    match &carry {
                        Some(t) => resolved.push((f.clone(), t.clone())),
                        None => errors.push((
                            PolicyError::MissingLevel {
                                what: "declassification target of",
                                name: i.name.clone(),
                            },
                            span,
                        )),
                    }
                }
                resolved.reverse();
                declass.insert(i.name.clone(), resolved);
            }
            Policy::MultiLevel(MultiLevelPolicy {
                name,
                lattice,
                inputs: inputs.iter().map(|i| i.name.clone()).collect(),
                lvl,
                declass,
                fns,
                groups,
            })
        }
    };

    if errors.is_empty() {
        for e in validate_policy(&policy) {
            let span = locate_in(&decls, &fn_bodies, &e);
            errors.push((e, span));
        }
    }
    if !errors.is_empty() {
        return Err(LoadError::Invalid(to_diagnostics(errors)));
    }
    Ok(PolicySource {
        policy,
        decls,
        fn_bodies,
    })
}

fn to_diagnostics(errors: Vec<(PolicyError, Option<Span>)>) -> Vec<Diagnostic> {
    errors
        .into_iter()
        .map(|(e, span)| Diagnostic::error(e.code(), e.to_string(), span))
        .collect()
}

fn parse_lattice(p: &mut Parser<'_>, start: Span) -> Result<LatticeDecl, ParseError> {
    p.expect(Tok::LBrace)?;
    let mut levels: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    let note = |l: &String, levels: &mut Vec<String>| {
        if !levels.contains(l) {
            levels.push(l.clone());
        }
    };
    while *p.peek() != Tok::RBrace {
        if p.eat(&Tok::Semi) || p.eat(&Tok::Comma) {
            continue;
        }
        let mut prev = p.ident()?.0;
        note(&prev, &mut levels);
        while p.eat(&Tok::Lt) {
            let next = p.ident()?.0;
            note(&next, &mut levels);
            edges.push((prev, next.clone()));
            prev = next;
        }
    }
    let end = p.expect(Tok::RBrace)?;
    Ok((
        levels,
        edges,
        Span {
            end: end.end,
            ..start
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const P_M1: &str = "
        lattice { L < M1 < H; L < M2 < H }
        input hi : int @ H declass f1 to M1, f2 to M2
        input lo : int @ L
        fn f1 (x : int) -> int = x mod 2
        fn f2 (x : int) -> int = x mod 3
    ";

    #[test]
    fn multilevel_policy_with_per_function_targets() {
        let src = parse_policy(P_M1, "P_M1").unwrap();
        let Policy::MultiLevel(m) = &src.policy else {
            panic!("expected multi-level")
        };
        assert_eq!(
            m.declass["hi"],
            vec![("f1".into(), "M1".into()), ("f2".into(), "M2".into())]
        );
        assert_eq!(
            m.lattice.topo_order().first().map(String::as_str),
            Some("L")
        );
        assert_eq!(m.name, "P_M1");
    }

    #[test]
    fn shared_target_applies_to_earlier_items() {
        let src = "lattice { L < H } input x : int @ H declass f, g to L
                   fn f (x:int) -> int = x mod 2  fn g (x:int) -> int = x mod 3";
        let Policy::MultiLevel(m) = parse_policy(src, "P").unwrap().policy else {
            panic!()
        };
        assert_eq!(
            m.declass["x"],
            vec![("f".into(), "L".into()), ("g".into(), "L".into())]
        );
    }

    #[test]
    fn invalid_policies_produce_located_diagnostics() {
        let src = "input x : int declass f\nfn f (y : int) -> int -> int = fn y:int => z";
        match parse_policy(src, "P") {
            Err(LoadError::Invalid(ds)) => {
                assert_eq!(ds[0].code, "OpenDeclassifier");
                assert_eq!(ds[0].location.as_ref().map(|l| l.line), Some(2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cycles_are_reported() {
        match parse_policy("lattice { A < B < A }", "P") {
            Err(LoadError::Invalid(ds)) => assert_eq!(ds[0].code, "CyclicOrder"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_have_positions() {
        match parse_policy("input x : unit", "P") {
            Err(LoadError::Parse(e)) => assert_eq!((e.line, e.column), (1, 11)),
            other => panic!("unexpected {other:?}"),
        }
    }
}

//! Concrete syntax rendering. The output parses back to the same tree.

use std::fmt::{self, Write};

use num_traits::Signed;

use super::term::{PrimOp, Side, TermExpr};
use super::types::TypeExpr;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum TyCtx {
    Top,
    ArrowLeft,
    ProdRight,
    ProdLeft,
}

pub(crate) fn write_type(f: &mut impl Write, t: &TypeExpr) -> fmt::Result {
    ty(f, t, TyCtx::Top)
}

fn ty(f: &mut impl Write, t: &TypeExpr, ctx: TyCtx) -> fmt::Result {
    match t {
        TypeExpr::Int => f.write_str("int"),
        TypeExpr::Unit => f.write_str("unit"),
        TypeExpr::Var(a) => f.write_str(a),
        TypeExpr::Forall(a, body) => paren(f, ctx > TyCtx::Top, |f| {
            write!(f, "forall {a}. ")?;
            ty(f, body, TyCtx::Top)
        }),
        TypeExpr::Arrow(l, r) => paren(f, ctx > TyCtx::Top, |f| {
            ty(f, l, TyCtx::ArrowLeft)?;
            f.write_str(" -> ")?;
            ty(f, r, TyCtx::Top)
        }),
        TypeExpr::Prod(l, r) => paren(f, ctx > TyCtx::ProdRight, |f| {
            ty(f, l, TyCtx::ProdLeft)?;
            f.write_str(" * ")?;
            ty(f, r, TyCtx::ProdRight)
        }),
    }
}

fn paren<W: Write>(f: &mut W, wrap: bool, body: impl FnOnce(&mut W) -> fmt::Result) -> fmt::Result {
    if wrap {
        f.write_char('(')?;
    }
    body(f)?;
    if wrap {
        f.write_char(')')?;
    }
    Ok(())
}

// Term precedence, loosest first.
const TOP: u8 = 0;
const EQ: u8 = 1;
const ADD: u8 = 2;
const MUL: u8 = 3;
const APP: u8 = 4;
const PREFIX: u8 = 5;
const ATOM: u8 = 6;

pub(crate) fn write_term(f: &mut impl Write, e: &TermExpr) -> fmt::Result {
    term(f, e, TOP)
}

fn level(op: PrimOp) -> u8 {
    match op {
        PrimOp::Eq => EQ,
        PrimOp::Add | PrimOp::Sub => ADD,
        PrimOp::Mul | PrimOp::Div | PrimOp::Mod => MUL,
    }
}

fn term(f: &mut impl Write, e: &TermExpr, ctx: u8) -> fmt::Result {
    match e {
        TermExpr::Int(n) if n.is_negative() => write!(f, "({n})"),
        TermExpr::Int(n) => write!(f, "{n}"),
        TermExpr::Unit => f.write_str("()"),
        TermExpr::Var(x) => f.write_str(x),
        TermExpr::Pair(l, r) => {
            f.write_char('(')?;
            term(f, l, TOP)?;
            f.write_str(", ")?;
            term(f, r, TOP)?;
            f.write_char(')')
        }
        TermExpr::Lam(x, t, body) => paren(f, ctx > TOP, |f| {
            write!(f, "fn {x}:")?;
            ty(f, t, TyCtx::Top)?;
            f.write_str(" => ")?;
            term(f, body, TOP)
        }),
        TermExpr::TyLam(a, body) => paren(f, ctx > TOP, |f| {
            write!(f, "tfn {a} => ")?;
            term(f, body, TOP)
        }),
        TermExpr::IfZero(c, t, el) => paren(f, ctx > TOP, |f| {
            f.write_str("ifz ")?;
            term(f, c, TOP)?;
            f.write_str(" then ")?;
            term(f, t, TOP)?;
            f.write_str(" else ")?;
            term(f, el, TOP)
        }),
        TermExpr::Prim(op, l, r) => {
            let lv = level(*op);
            paren(f, ctx > lv, |f| {
                term(f, l, lv)?;
                write!(f, " {} ", op.symbol())?;
                term(f, r, lv + 1)
            })
        }
        TermExpr::App(fun, arg) => paren(f, ctx > APP, |f| {
            term(f, fun, APP)?;
            f.write_char(' ')?;
            term(f, arg, ATOM)
        }),
        TermExpr::TyApp(fun, t) => paren(f, ctx > APP, |f| {
            term(f, fun, APP)?;
            f.write_str(" [")?;
            ty(f, t, TyCtx::Top)?;
            f.write_char(']')
        }),
        TermExpr::Proj(side, inner) => paren(f, ctx > PREFIX, |f| {
            f.write_str(if *side == Side::First { "fst " } else { "snd " })?;
            term(f, inner, PREFIX)
        }),
    }
}

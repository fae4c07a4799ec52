//! Recursive-descent parser for types and terms.
//!
//! Precedence, loosest first: `fn`/`tfn`/`ifz` (extend to the right), `==`,
//! `+ -`, `* / mod`, application and type application, `fst`/`snd`.
//! `->` and `*` on types both associate to the right.

use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, Span};
use crate::lang::{PrimOp, Side, TermExpr, TypeExpr};

const KEYWORDS: &[&str] = &[
    "fn", "tfn", "ifz", "then", "else", "fst", "snd", "mod", "forall", "int", "unit",
];

/// Source spans of a term and its children, mirroring the term's shape.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanTree {
    pub span: Span,
    pub children: Vec<SpanTree>,
}

impl SpanTree {
    fn leaf(span: Span) -> Self {
        SpanTree {
            span,
            children: vec![],
        }
    }

    /// Span of the subterm at `path`, or of the deepest existing ancestor.
    pub fn locate(&self, path: &[usize]) -> Span {
        match path.split_first() {
            Some((&i, rest)) => self.children.get(i).map_or(self.span, |c| c.locate(rest)),
            None => self.span,
        }
    }
}

/// A parsed program together with its source spans.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub term: TermExpr,
    pub spans: SpanTree,
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(tokenize(src)?, &[]);
    let (term, spans) = p.term()?;
    p.expect_eof()?;
    Ok(Program { term, spans })
}

pub fn parse_term(src: &str) -> Result<TermExpr, ParseError> {
    parse_program(src).map(|p| p.term)
}

pub fn parse_type(src: &str) -> Result<TypeExpr, ParseError> {
    let mut p = Parser::new(tokenize(src)?, &[]);
    let t = p.ty()?;
    p.expect_eof()?;
    Ok(t)
}

pub(crate) struct Parser<'s> {
    toks: Vec<Token>,
    pos: usize,
    /// Identifiers that end a term (keywords of an enclosing grammar).
    stop: &'s [&'s str],
}

fn join(a: Span, b: Span) -> Span {
    Span {
        start: a.start,
        end: b.end.max(a.end),
        line: a.line,
        column: a.column,
    }
}

impl<'s> Parser<'s> {
    pub(crate) fn new(toks: Vec<Token>, stop: &'s [&'s str]) -> Self {
        Parser { toks, pos: 0, stop }
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    pub(crate) fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    pub(crate) fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    pub(crate) fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::at(self.span(), msg)
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> Result<Span, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            Err(self.error(format!("expected {tok}, found {}", self.peek())))
        }
    }

    pub(crate) fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub(crate) fn is_word(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    pub(crate) fn expect_word(&mut self, word: &str) -> Result<Span, ParseError> {
        if self.is_word(word) {
            Ok(self.bump().span)
        } else {
            Err(self.error(format!("expected `{word}`, found {}", self.peek())))
        }
    }

    pub(crate) fn expect_eof(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(format!(
                "unexpected {} after the end of the term",
                self.peek()
            )))
        }
    }

    fn is_reserved(&self, s: &str) -> bool {
        KEYWORDS.contains(&s) || self.stop.contains(&s)
    }

    /// A non-keyword identifier.
    pub(crate) fn ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !self.is_reserved(&s) => {
                let span = self.bump().span;
                Ok((s, span))
            }
            other => Err(self.error(format!("expected an identifier, found {other}"))),
        }
    }

    pub(crate) fn ty(&mut self) -> Result<TypeExpr, ParseError> {
        if self.is_word("forall") {
            self.bump();
            let mut binders = vec![self.ident()?.0];
            while !matches!(self.peek(), Tok::Dot) {
                binders.push(self.ident()?.0);
            }
            self.expect(Tok::Dot)?;
            let body = self.ty()?;
            return Ok(binders
                .into_iter()
                .rev()
                .fold(body, |acc, b| TypeExpr::forall(b, acc)));
        }
        let left = self.prod_ty()?;
        if self.eat(&Tok::Arrow) {
            Ok(TypeExpr::arrow(left, self.ty()?))
        } else {
            Ok(left)
        }
    }

    fn prod_ty(&mut self) -> Result<TypeExpr, ParseError> {
        let left = self.atom_ty()?;
        if self.eat(&Tok::Star) {
            Ok(TypeExpr::prod(left, self.prod_ty()?))
        } else {
            Ok(left)
        }
    }

    fn atom_ty(&mut self) -> Result<TypeExpr, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "int" => {
                self.bump();
                Ok(TypeExpr::Int)
            }
            Tok::Ident(s) if s == "unit" => {
                self.bump();
                Ok(TypeExpr::Unit)
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            Tok::Ident(_) => Ok(TypeExpr::Var(self.ident()?.0)),
            other => Err(self.error(format!("expected a type, found {other}"))),
        }
    }

    pub(crate) fn term(&mut self) -> Result<(TermExpr, SpanTree), ParseError> {
        let start = self.span();
        if self.is_word("fn") {
            self.bump();
            let (x, _) = self.ident()?;
            self.expect(Tok::Colon)?;
            let t = self.ty()?;
            self.expect(Tok::FatArrow)?;
            let (body, bs) = self.term()?;
            let span = join(start, bs.span);
            return Ok((
                TermExpr::lam(x, t, body),
                SpanTree {
                    span,
                    children: vec![bs],
                },
            ));
        }
        if self.is_word("tfn") {
            self.bump();
            let (a, _) = self.ident()?;
            self.expect(Tok::FatArrow)?;
            let (body, bs) = self.term()?;
            let span = join(start, bs.span);
            return Ok((
                TermExpr::ty_lam(a, body),
                SpanTree {
                    span,
                    children: vec![bs],
                },
            ));
        }
        if self.is_word("ifz") {
            self.bump();
            let (c, cs) = self.term()?;
            self.expect_word("then")?;
            let (t, ts) = self.term()?;
            self.expect_word("else")?;
            let (e, es) = self.term()?;
            let span = join(start, es.span);
            return Ok((
                TermExpr::if_zero(c, t, e),
                SpanTree {
                    span,
                    children: vec![cs, ts, es],
                },
            ));
        }
        self.binary(0)
    }

    fn binop(&self, level: u8) -> Option<PrimOp> {
        match (level, self.peek()) {
            (0, Tok::EqEq) => Some(PrimOp::Eq),
            (1, Tok::Plus) => Some(PrimOp::Add),
            (1, Tok::Minus) => Some(PrimOp::Sub),
            (2, Tok::Star) => Some(PrimOp::Mul),
            (2, Tok::Slash) => Some(PrimOp::Div),
            (2, Tok::Ident(s)) if s == "mod" => Some(PrimOp::Mod),
            _ => None,
        }
    }

    fn binary(&mut self, level: u8) -> Result<(TermExpr, SpanTree), ParseError> {
        if level == 3 {
            return self.application();
        }
        let (mut lhs, mut ls) = self.binary(level + 1)?;
        while let Some(op) = self.binop(level) {
            self.bump();
            let (rhs, rs) = self.binary(level + 1)?;
            let span = join(ls.span, rs.span);
            lhs = TermExpr::prim(op, lhs, rhs);
            ls = SpanTree {
                span,
                children: vec![ls, rs],
            };
        }
        Ok((lhs, ls))
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Int(_) | Tok::LParen => true,
            Tok::Ident(s) => !self.is_reserved(s),
            _ => false,
        }
    }

    fn application(&mut self) -> Result<(TermExpr, SpanTree), ParseError> {
        let (mut f, mut fs) = self.prefix()?;
        loop {
            if *self.peek() == Tok::LBracket {
                self.bump();
                let t = self.ty()?;
                let end = self.expect(Tok::RBracket)?;
                let span = join(fs.span, end);
                f = TermExpr::ty_app(f, t);
                fs = SpanTree {
                    span,
                    children: vec![fs],
                };
            } else if self.starts_atom() {
                let (a, as_) = self.atom()?;
                let span = join(fs.span, as_.span);
                f = TermExpr::app(f, a);
                fs = SpanTree {
                    span,
                    children: vec![fs, as_],
                };
            } else {
                return Ok((f, fs));
            }
        }
    }

    fn prefix(&mut self) -> Result<(TermExpr, SpanTree), ParseError> {
        let side = if self.is_word("fst") {
            Some(Side::First)
        } else if self.is_word("snd") {
            Some(Side::Second)
        } else {
            None
        };
        match side {
            Some(side) => {
                let start = self.bump().span;
                let (e, es) = self.prefix()?;
                let span = join(start, es.span);
                Ok((
                    TermExpr::proj(side, e),
                    SpanTree {
                        span,
                        children: vec![es],
                    },
                ))
            }
            None => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<(TermExpr, SpanTree), ParseError> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok((TermExpr::Int(n), SpanTree::leaf(start)))
            }
            Tok::Minus if matches!(self.peek_at(1), Tok::Int(_)) => {
                self.bump();
                let Tok::Int(n) = self.bump().tok else {
                    unreachable!()
                };
                Ok((
                    TermExpr::Int(-n),
                    SpanTree::leaf(join(start, self.prev_span())),
                ))
            }
            Tok::LParen => {
                self.bump();
                if *self.peek() == Tok::RParen {
                    let end = self.bump().span;
                    return Ok((TermExpr::Unit, SpanTree::leaf(join(start, end))));
                }
                let mut items = vec![self.term()?];
                while self.eat(&Tok::Comma) {
                    items.push(self.term()?);
                }
                let end = self.expect(Tok::RParen)?;
                if items.len() == 1 {
                    let (e, mut s) = items.pop().expect("one item");
                    s.span = join(start, end);
                    return Ok((e, s));
                }
                // Right-nested pairs; an inner pair spans from its first
                // component to the closing parenthesis.
                let (mut acc, mut acc_span) = items.pop().expect("two or more items");
                while let Some((e, s)) = items.pop() {
                    let first = if items.is_empty() { start } else { s.span };
                    let span = join(first, end);
                    acc = TermExpr::pair(e, acc);
                    acc_span = SpanTree {
                        span,
                        children: vec![s, acc_span],
                    };
                }
                Ok((acc, acc_span))
            }
            Tok::Ident(_) if self.starts_atom() => {
                let (x, span) = self.ident()?;
                Ok((TermExpr::Var(x), SpanTree::leaf(span)))
            }
            other => Err(self.error(format!("expected a term, found {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn precedence_and_associativity() {
        let e = parse_term("1 + 2 * 3 == 7").unwrap();
        assert_eq!(e.to_string(), "1 + 2 * 3 == 7");
        let TermExpr::Prim(PrimOp::Eq, l, _) = &e else {
            panic!()
        };
        assert!(matches!(**l, TermExpr::Prim(PrimOp::Add, ..)));
        let s = parse_term("10 - 3 - 2").unwrap();
        assert_eq!(crate::lang::evaluate(&s, 10).unwrap(), TermExpr::int(5));
    }

    #[test]
    fn application_projection_and_type_application() {
        let e = parse_term("comp_L [int][int] li (fn c:int => wrap_L [int] (c + 1))").unwrap();
        assert_eq!(
            e.to_string(),
            "comp_L [int] [int] li (fn c:int => wrap_L [int] (c + 1))"
        );
        let p = parse_term("fst p q").unwrap();
        assert!(
            matches!(p, TermExpr::App(ref f, _) if matches!(**f, TermExpr::Proj(Side::First, _)))
        );
    }

    #[test]
    fn tuples_nest_right_and_unit_parses() {
        let e = parse_term("(1, (), x)").unwrap();
        assert_eq!(
            e,
            TermExpr::pair(
                TermExpr::int(1),
                TermExpr::pair(TermExpr::Unit, TermExpr::var("x"))
            )
        );
    }

    #[test]
    fn types_parse_with_right_associativity() {
        let t = parse_type("forall b1 b2. (a_L -> b1) -> (b1 -> a_L -> b2) -> a_L -> b2").unwrap();
        assert_eq!(
            t.to_string(),
            "forall b1. forall b2. (a_L -> b1) -> (b1 -> a_L -> b2) -> a_L -> b2"
        );
        assert_eq!(
            parse_type("int * int * int").unwrap(),
            TypeExpr::int_tuple(3)
        );
    }

    #[test]
    fn negative_literals_and_subtraction() {
        assert_eq!(parse_term("-3").unwrap(), TermExpr::int(-3));
        assert_eq!(
            parse_term("x - 3").unwrap(),
            TermExpr::prim(PrimOp::Sub, TermExpr::var("x"), TermExpr::int(3))
        );
    }

    #[test]
    fn spans_locate_subterms() {
        let p = parse_program("x_f (x mod 3)").unwrap();
        let s = p.spans.locate(&[1, 0]);
        assert_eq!((s.line, s.column, s.end - s.start), (1, 6, 1));
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_term("fn x:int =>").unwrap_err();
        assert_eq!((err.line, err.column), (1, 12));
        assert!(parse_term("fn then:int => 1").is_err());
        assert!(parse_term("1 2 )").is_err());
    }

    fn arb_type() -> impl Strategy<Value = TypeExpr> {
        let leaf = prop_oneof![
            Just(TypeExpr::Int),
            Just(TypeExpr::Unit),
            "[a-c]".prop_map(TypeExpr::Var),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| TypeExpr::arrow(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| TypeExpr::prod(a, b)),
                ("[a-c]", inner).prop_map(|(v, b)| TypeExpr::forall(v, b)),
            ]
        })
    }

    fn arb_term() -> impl Strategy<Value = TermExpr> {
        let leaf = prop_oneof![
            (-20i64..20).prop_map(TermExpr::int),
            Just(TermExpr::Unit),
            "[xyz]".prop_map(TermExpr::Var),
        ];
        leaf.prop_recursive(4, 32, 3, |inner| {
            let op = prop_oneof![
                Just(PrimOp::Add),
                Just(PrimOp::Sub),
                Just(PrimOp::Mul),
                Just(PrimOp::Div),
                Just(PrimOp::Mod),
                Just(PrimOp::Eq)
            ];
            prop_oneof![
                ("[xyz]", arb_type(), inner.clone()).prop_map(|(x, t, b)| TermExpr::lam(x, t, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| TermExpr::app(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| TermExpr::pair(a, b)),
                (any::<bool>(), inner.clone()).prop_map(|(f, e)| TermExpr::proj(
                    if f { Side::First } else { Side::Second },
                    e
                )),
                ("[ab]", inner.clone()).prop_map(|(a, b)| TermExpr::ty_lam(a, b)),
                (inner.clone(), arb_type()).prop_map(|(e, t)| TermExpr::ty_app(e, t)),
                (op, inner.clone(), inner.clone()).prop_map(|(o, a, b)| TermExpr::prim(o, a, b)),
                (inner.clone(), inner.clone(), inner)
                    .prop_map(|(c, t, e)| TermExpr::if_zero(c, t, e)),
            ]
        })
    }

    proptest! {
        #[test]
        fn printed_types_parse_back(t in arb_type()) {
            prop_assert_eq!(parse_type(&t.to_string()).unwrap(), t);
        }

        #[test]
        fn printed_terms_parse_back(e in arb_term()) {
            prop_assert_eq!(parse_term(&e.to_string()).unwrap(), e);
        }
    }
}

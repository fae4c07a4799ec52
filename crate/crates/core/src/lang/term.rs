//! Terms of the calculus.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;

use super::types::TypeExpr;

/// Binary integer primitives. `Eq` yields 1 when the operands are equal and
/// 0 otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrimOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
}

impl PrimOp {
    pub fn symbol(self) -> &'static str {
        match self {
            PrimOp::Add => "+",
            PrimOp::Sub => "-",
            PrimOp::Mul => "*",
            PrimOp::Div => "/",
            PrimOp::Mod => "mod",
            PrimOp::Eq => "==",
        }
    }
}

/// Which component a projection selects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TermExpr {
    Int(BigInt),
    Unit,
    Var(String),
    Lam(String, TypeExpr, Box<TermExpr>),
    App(Box<TermExpr>, Box<TermExpr>),
    Pair(Box<TermExpr>, Box<TermExpr>),
    Proj(Side, Box<TermExpr>),
    TyLam(String, Box<TermExpr>),
    TyApp(Box<TermExpr>, TypeExpr),
    Prim(PrimOp, Box<TermExpr>, Box<TermExpr>),
    IfZero(Box<TermExpr>, Box<TermExpr>, Box<TermExpr>),
}

impl TermExpr {
    pub fn int(n: impl Into<BigInt>) -> Self {
        TermExpr::Int(n.into())
    }

    pub fn var(name: impl Into<String>) -> Self {
        TermExpr::Var(name.into())
    }

    pub fn lam(param: impl Into<String>, ty: TypeExpr, body: TermExpr) -> Self {
        TermExpr::Lam(param.into(), ty, Box::new(body))
    }

    pub fn app(fun: TermExpr, arg: TermExpr) -> Self {
        TermExpr::App(Box::new(fun), Box::new(arg))
    }

    pub fn pair(left: TermExpr, right: TermExpr) -> Self {
        TermExpr::Pair(Box::new(left), Box::new(right))
    }

    pub fn proj(side: Side, inner: TermExpr) -> Self {
        TermExpr::Proj(side, Box::new(inner))
    }

    pub fn ty_lam(binder: impl Into<String>, body: TermExpr) -> Self {
        TermExpr::TyLam(binder.into(), Box::new(body))
    }

    pub fn ty_app(fun: TermExpr, ty: TypeExpr) -> Self {
        TermExpr::TyApp(Box::new(fun), ty)
    }

    pub fn prim(op: PrimOp, left: TermExpr, right: TermExpr) -> Self {
        TermExpr::Prim(op, Box::new(left), Box::new(right))
    }

    pub fn if_zero(cond: TermExpr, then: TermExpr, otherwise: TermExpr) -> Self {
        TermExpr::IfZero(Box::new(cond), Box::new(then), Box::new(otherwise))
    }

    /// Right-nested pair of the given components.
    pub fn tuple(components: Vec<TermExpr>) -> Self {
        let mut it = components.into_iter().rev();
        let last = it.next().expect("tuple of at least one term");
        it.fold(last, |acc, t| TermExpr::pair(t, acc))
    }

    /// `fn _:unit => body`, the constant wrapper used for keyed inputs.
    pub fn constant_wrapper(body: TermExpr) -> Self {
        TermExpr::lam("_", TypeExpr::Unit, body)
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            TermExpr::Int(n) => Some(n),
            _ => None,
        }
    }

    pub fn is_value(&self) -> bool {
        match self {
            TermExpr::Int(_) | TermExpr::Unit | TermExpr::Lam(..) | TermExpr::TyLam(..) => true,
            TermExpr::Pair(l, r) => l.is_value() && r.is_value(),
            _ => false,
        }
    }

    /// The immediate term children, in the order used for subterm paths.
    pub fn children(&self) -> Vec<&TermExpr> {
        match self {
            TermExpr::Int(_) | TermExpr::Unit | TermExpr::Var(_) => vec![],
            TermExpr::Lam(_, _, b) | TermExpr::TyLam(_, b) => vec![b],
            TermExpr::Proj(_, e) | TermExpr::TyApp(e, _) => vec![e],
            TermExpr::App(a, b) | TermExpr::Pair(a, b) | TermExpr::Prim(_, a, b) => vec![a, b],
            TermExpr::IfZero(c, t, e) => vec![c, t, e],
        }
    }

    /// The subterm at `path`, if the path is valid.
    pub fn at_path(&self, path: &[usize]) -> Option<&TermExpr> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children().get(i).and_then(|c| c.at_path(rest)),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_vars(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            TermExpr::Var(x) => {
                if !bound.iter().any(|b| b == x) {
                    out.insert(x.clone());
                }
            }
            TermExpr::Lam(x, _, body) => {
                bound.push(x.clone());
                body.collect_free_vars(bound, out);
                bound.pop();
            }
            other => {
                for c in other.children() {
                    c.collect_free_vars(bound, out);
                }
            }
        }
    }

    /// Type variables occurring free in annotations and type arguments.
    pub fn free_type_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free_type_vars(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_type_vars(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            TermExpr::Lam(_, ty, body) => {
                ty.collect_free(bound, out);
                body.collect_free_type_vars(bound, out);
            }
            TermExpr::TyApp(f, ty) => {
                ty.collect_free(bound, out);
                f.collect_free_type_vars(bound, out);
            }
            TermExpr::TyLam(a, body) => {
                bound.push(a.clone());
                body.collect_free_type_vars(bound, out);
                bound.pop();
            }
            other => {
                for c in other.children() {
                    c.collect_free_type_vars(bound, out);
                }
            }
        }
    }

    /// Whether any type variable, bound or free, occurs in the term.
    pub fn mentions_type_vars(&self) -> bool {
        match self {
            TermExpr::TyLam(..) => true,
            TermExpr::Lam(_, ty, body) => {
                !all_type_vars(ty).is_empty() || body.mentions_type_vars()
            }
            TermExpr::TyApp(f, ty) => !all_type_vars(ty).is_empty() || f.mentions_type_vars(),
            other => other.children().iter().any(|c| c.mentions_type_vars()),
        }
    }

    /// Every term and type variable name occurring anywhere in the term.
    pub(crate) fn collect_all_names(&self, out: &mut BTreeSet<String>) {
        match self {
            TermExpr::Var(x) => {
                out.insert(x.clone());
            }
            TermExpr::Lam(x, ty, _) => {
                out.insert(x.clone());
                ty.collect_all_vars(out);
            }
            TermExpr::TyLam(a, _) => {
                out.insert(a.clone());
            }
            TermExpr::TyApp(_, ty) => ty.collect_all_vars(out),
            _ => {}
        }
        for c in self.children() {
            c.collect_all_names(out);
        }
    }

    /// Number of nodes, used to bound generated programs.
    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

fn all_type_vars(ty: &TypeExpr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    ty.collect_all_vars(&mut out);
    out
}

impl fmt::Display for TermExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::lang::print::write_term(f, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_are_recognised_structurally() {
        assert!(TermExpr::pair(TermExpr::int(1), TermExpr::Unit).is_value());
        assert!(!TermExpr::pair(TermExpr::int(1), TermExpr::var("x")).is_value());
        assert!(TermExpr::lam("x", TypeExpr::Int, TermExpr::var("y")).is_value());
    }

    #[test]
    fn free_variables_respect_binders() {
        let e = TermExpr::app(
            TermExpr::lam("x", TypeExpr::Int, TermExpr::var("x")),
            TermExpr::var("y"),
        );
        assert_eq!(e.free_vars(), BTreeSet::from(["y".to_string()]));
    }

    #[test]
    fn free_type_variables_respect_type_binders() {
        let e = TermExpr::ty_lam(
            "a",
            TermExpr::lam(
                "x",
                TypeExpr::arrow(TypeExpr::var("a"), TypeExpr::var("b")),
                TermExpr::Unit,
            ),
        );
        assert_eq!(e.free_type_vars(), BTreeSet::from(["b".to_string()]));
    }

    #[test]
    fn paths_select_children_in_order() {
        let e = TermExpr::if_zero(TermExpr::int(0), TermExpr::int(1), TermExpr::int(2));
        assert_eq!(e.at_path(&[2]), Some(&TermExpr::int(2)));
        assert_eq!(e.at_path(&[3]), None);
    }
}

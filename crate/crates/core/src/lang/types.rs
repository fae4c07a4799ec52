//! Types of the calculus and the operations on them that do not involve terms.

use std::collections::BTreeSet;
use std::fmt;

/// A type: `int`, `unit`, a type variable, a product, a function type or a
/// universally quantified type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TypeExpr {
    Int,
    Unit,
    Var(String),
    Prod(Box<TypeExpr>, Box<TypeExpr>),
    Arrow(Box<TypeExpr>, Box<TypeExpr>),
    Forall(String, Box<TypeExpr>),
}

impl TypeExpr {
    pub fn var(name: impl Into<String>) -> Self {
        TypeExpr::Var(name.into())
    }

    pub fn arrow(dom: TypeExpr, cod: TypeExpr) -> Self {
        TypeExpr::Arrow(Box::new(dom), Box::new(cod))
    }

    pub fn prod(left: TypeExpr, right: TypeExpr) -> Self {
        TypeExpr::Prod(Box::new(left), Box::new(right))
    }

    pub fn forall(binder: impl Into<String>, body: TypeExpr) -> Self {
        TypeExpr::Forall(binder.into(), Box::new(body))
    }

    /// Right-nested product of the given components; a single component is
    /// returned as is. Panics on an empty slice.
    pub fn tuple(components: &[TypeExpr]) -> Self {
        let (last, init) = components.split_last().expect("tuple of at least one type");
        init.iter()
            .rev()
            .fold(last.clone(), |acc, t| TypeExpr::prod(t.clone(), acc))
    }

    /// The n-fold product `int * ... * int` (just `int` when n is 1).
    pub fn int_tuple(arity: usize) -> Self {
        TypeExpr::tuple(&vec![TypeExpr::Int; arity.max(1)])
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    pub(crate) fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            TypeExpr::Int | TypeExpr::Unit => {}
            TypeExpr::Var(a) => {
                if !bound.iter().any(|b| b == a) {
                    out.insert(a.clone());
                }
            }
            TypeExpr::Prod(l, r) | TypeExpr::Arrow(l, r) => {
                l.collect_free(bound, out);
                r.collect_free(bound, out);
            }
            TypeExpr::Forall(a, body) => {
                bound.push(a.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Every variable name occurring in the type, bound or free.
    pub(crate) fn collect_all_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            TypeExpr::Int | TypeExpr::Unit => {}
            TypeExpr::Var(a) => {
                out.insert(a.clone());
            }
            TypeExpr::Prod(l, r) | TypeExpr::Arrow(l, r) => {
                l.collect_all_vars(out);
                r.collect_all_vars(out);
            }
            TypeExpr::Forall(a, body) => {
                out.insert(a.clone());
                body.collect_all_vars(out);
            }
        }
    }

    /// Capture-avoiding substitution of `replacement` for the free occurrences
    /// of `var`.
    pub fn substitute(&self, var: &str, replacement: &TypeExpr) -> TypeExpr {
        let fv = replacement.free_vars();
        self.subst_with(var, replacement, &fv)
    }

    pub(crate) fn subst_with(
        &self,
        var: &str,
        replacement: &TypeExpr,
        replacement_fv: &BTreeSet<String>,
    ) -> TypeExpr {
        match self {
            TypeExpr::Int | TypeExpr::Unit => self.clone(),
            TypeExpr::Var(a) if a == var => replacement.clone(),
            TypeExpr::Var(_) => self.clone(),
            TypeExpr::Prod(l, r) => TypeExpr::prod(
                l.subst_with(var, replacement, replacement_fv),
                r.subst_with(var, replacement, replacement_fv),
            ),
            TypeExpr::Arrow(l, r) => TypeExpr::arrow(
                l.subst_with(var, replacement, replacement_fv),
                r.subst_with(var, replacement, replacement_fv),
            ),
            TypeExpr::Forall(a, _) if a == var => self.clone(),
            TypeExpr::Forall(a, body) => {
                if replacement_fv.contains(a) && body.free_vars().contains(var) {
                    let mut avoid = replacement_fv.clone();
                    body.collect_all_vars(&mut avoid);
                    avoid.insert(var.to_string());
                    let fresh = fresh_name(a, &avoid);
                    let renamed = body.substitute(a, &TypeExpr::Var(fresh.clone()));
                    TypeExpr::forall(fresh, renamed.subst_with(var, replacement, replacement_fv))
                } else {
                    TypeExpr::forall(a.clone(), body.subst_with(var, replacement, replacement_fv))
                }
            }
        }
    }

    /// Simultaneous substitution of several variables (used for the
    /// public-to-confidential collapse).
    pub fn substitute_all(&self, map: &TypeSubst) -> TypeExpr {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            TypeExpr::Int | TypeExpr::Unit => self.clone(),
            TypeExpr::Var(a) => map.get(a).cloned().unwrap_or_else(|| self.clone()),
            TypeExpr::Prod(l, r) => TypeExpr::prod(l.substitute_all(map), r.substitute_all(map)),
            TypeExpr::Arrow(l, r) => TypeExpr::arrow(l.substitute_all(map), r.substitute_all(map)),
            TypeExpr::Forall(a, body) => {
                let mut inner = map.clone();
                inner.shift_remove(a);
                let captures = inner.values().any(|t| t.free_vars().contains(a));
                if captures {
                    let mut avoid = BTreeSet::new();
                    body.collect_all_vars(&mut avoid);
                    for (k, t) in &inner {
                        avoid.insert(k.clone());
                        t.collect_all_vars(&mut avoid);
                    }
                    let fresh = fresh_name(a, &avoid);
                    let renamed = body.substitute(a, &TypeExpr::Var(fresh.clone()));
                    TypeExpr::forall(fresh, renamed.substitute_all(&inner))
                } else {
                    TypeExpr::forall(a.clone(), body.substitute_all(&inner))
                }
            }
        }
    }

    /// Equality up to renaming of bound type variables.
    pub fn alpha_eq(&self, other: &TypeExpr) -> bool {
        alpha_eq_in(self, other, &mut Vec::new())
    }
}

/// An ordered substitution from type variables to types.
pub type TypeSubst = indexmap::IndexMap<String, TypeExpr>;

fn alpha_eq_in(a: &TypeExpr, b: &TypeExpr, binders: &mut Vec<(String, String)>) -> bool {
    match (a, b) {
        (TypeExpr::Int, TypeExpr::Int) | (TypeExpr::Unit, TypeExpr::Unit) => true,
        (TypeExpr::Var(x), TypeExpr::Var(y)) => {
            let lx = binders.iter().rposition(|(l, _)| l == x);
            let ry = binders.iter().rposition(|(_, r)| r == y);
            match (lx, ry) {
                (None, None) => x == y,
                (Some(i), Some(j)) => i == j,
                _ => false,
            }
        }
        (TypeExpr::Prod(l1, r1), TypeExpr::Prod(l2, r2))
        | (TypeExpr::Arrow(l1, r1), TypeExpr::Arrow(l2, r2)) => {
            alpha_eq_in(l1, l2, binders) && alpha_eq_in(r1, r2, binders)
        }
        (TypeExpr::Forall(x, b1), TypeExpr::Forall(y, b2)) => {
            binders.push((x.clone(), y.clone()));
            let eq = alpha_eq_in(b1, b2, binders);
            binders.pop();
            eq
        }
        _ => false,
    }
}

/// A name derived from `base` that is not in `avoid`: the base with any
/// trailing digits replaced by the smallest free numeric suffix.
pub fn fresh_name(base: &str, avoid: &BTreeSet<String>) -> String {
    if !avoid.contains(base) {
        return base.to_string();
    }
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "v" } else { stem };
    (1u64..)
        .map(|n| format!("{stem}{n}"))
        .find(|cand| !avoid.contains(cand))
        .expect("unbounded supply of names")
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::lang::print::write_type(f, self)
    }
}

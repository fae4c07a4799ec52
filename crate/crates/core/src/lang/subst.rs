//! Capture-avoiding substitution of terms for term variables and of types for
//! type variables inside terms.

use std::collections::BTreeSet;

use super::term::TermExpr;
use super::types::{fresh_name, TypeExpr, TypeSubst};

struct Replacement<'a> {
    value: &'a TermExpr,
    free_vars: BTreeSet<String>,
    free_type_vars: BTreeSet<String>,
}

/// `e[v/x]`, renaming binders of `e` that would capture free variables of `v`.
pub fn substitute_term(e: &TermExpr, var: &str, value: &TermExpr) -> TermExpr {
    let mut out = e.clone();
    substitute_term_in_place(&mut out, var, value);
    out
}

/// In-place form of [`substitute_term`].
pub fn substitute_term_in_place(e: &mut TermExpr, var: &str, value: &TermExpr) {
    let rep = Replacement {
        value,
        free_vars: value.free_vars(),
        free_type_vars: value.free_type_vars(),
    };
    subst_term(e, var, &rep);
}

fn subst_term(e: &mut TermExpr, var: &str, rep: &Replacement<'_>) {
    match e {
        TermExpr::Int(_) | TermExpr::Unit => {}
        TermExpr::Var(x) => {
            if x == var {
                *e = rep.value.clone();
            }
        }
        TermExpr::Lam(y, _, body) => {
            if y == var {
                return;
            }
            if rep.free_vars.contains(y.as_str()) && body.free_vars().contains(var) {
                let mut avoid = rep.free_vars.clone();
                body.collect_all_names(&mut avoid);
                avoid.insert(var.to_string());
                let fresh = fresh_name(y, &avoid);
                substitute_term_in_place(body, y, &TermExpr::Var(fresh.clone()));
                *y = fresh;
            }
            subst_term(body, var, rep);
        }
        TermExpr::TyLam(a, body) => {
            if rep.free_type_vars.contains(a.as_str()) && body.free_vars().contains(var) {
                let mut avoid = rep.free_type_vars.clone();
                body.collect_all_names(&mut avoid);
                let fresh = fresh_name(a, &avoid);
                substitute_type_in_place(body, a, &TypeExpr::Var(fresh.clone()));
                *a = fresh;
            }
            subst_term(body, var, rep);
        }
        TermExpr::App(a, b) | TermExpr::Pair(a, b) | TermExpr::Prim(_, a, b) => {
            subst_term(a, var, rep);
            subst_term(b, var, rep);
        }
        TermExpr::Proj(_, a) | TermExpr::TyApp(a, _) => subst_term(a, var, rep),
        TermExpr::IfZero(c, t, f) => {
            subst_term(c, var, rep);
            subst_term(t, var, rep);
            subst_term(f, var, rep);
        }
    }
}

/// `e[s/a]` on the type annotations and type arguments of `e`.
pub fn substitute_type_in_term(e: &TermExpr, var: &str, replacement: &TypeExpr) -> TermExpr {
    let mut out = e.clone();
    substitute_type_in_place(&mut out, var, replacement);
    out
}

/// In-place form of [`substitute_type_in_term`].
pub fn substitute_type_in_place(e: &mut TermExpr, var: &str, replacement: &TypeExpr) {
    let fv = replacement.free_vars();
    subst_type(e, var, replacement, &fv);
}

fn subst_type(e: &mut TermExpr, var: &str, s: &TypeExpr, s_fv: &BTreeSet<String>) {
    match e {
        TermExpr::Int(_) | TermExpr::Unit | TermExpr::Var(_) => {}
        TermExpr::Lam(_, ty, body) => {
            *ty = ty.subst_with(var, s, s_fv);
            subst_type(body, var, s, s_fv);
        }
        TermExpr::TyApp(f, ty) => {
            *ty = ty.subst_with(var, s, s_fv);
            subst_type(f, var, s, s_fv);
        }
        TermExpr::TyLam(a, body) => {
            if a == var {
                return;
            }
            if s_fv.contains(a.as_str()) && body.free_type_vars().contains(var) {
                let mut avoid = s_fv.clone();
                body.collect_all_names(&mut avoid);
                avoid.insert(var.to_string());
                let fresh = fresh_name(a, &avoid);
                substitute_type_in_place(body, a, &TypeExpr::Var(fresh.clone()));
                *a = fresh;
            }
            subst_type(body, var, s, s_fv);
        }
        TermExpr::App(a, b) | TermExpr::Pair(a, b) | TermExpr::Prim(_, a, b) => {
            subst_type(a, var, s, s_fv);
            subst_type(b, var, s, s_fv);
        }
        TermExpr::Proj(_, a) => subst_type(a, var, s, s_fv),
        TermExpr::IfZero(c, t, f) => {
            subst_type(c, var, s, s_fv);
            subst_type(t, var, s, s_fv);
            subst_type(f, var, s, s_fv);
        }
    }
}

/// Applies a type substitution to every free type variable of `e`. The
/// substituted types are expected to be closed, as they are for the
/// public-to-confidential collapse.
pub fn apply_type_subst(e: &TermExpr, map: &TypeSubst) -> TermExpr {
    let mut out = e.clone();
    for (var, ty) in map {
        substitute_type_in_place(&mut out, var, ty);
    }
    out
}

/// Substitutes closed terms for several variables.
pub fn apply_term_subst<'a, I>(e: &TermExpr, bindings: I) -> TermExpr
where
    I: IntoIterator<Item = (&'a String, &'a TermExpr)>,
{
    let mut out = e.clone();
    for (var, value) in bindings {
        substitute_term_in_place(&mut out, var, value);
    }
    out
}

//! Syntax-directed type inference.

use std::collections::BTreeSet;
use std::fmt;

use indexmap::{IndexMap, IndexSet};
use thiserror::Error;

use crate::lang::subst::substitute_type_in_term;
use crate::lang::{fresh_name, Side, TermExpr, TypeExpr};

/// Type variables in scope.
pub type TypeContext = IndexSet<String>;
/// Term variables in scope with their types.
pub type TermContext = IndexMap<String, TypeExpr>;

/// A typing failure located at a subterm.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub struct TypeError {
    /// Child indices from the root to the offending subterm.
    pub path: Vec<usize>,
    /// Name of the typing rule that could not be applied.
    pub rule: &'static str,
    pub message: String,
    pub expected: Option<String>,
    pub found: Option<String>,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.message)?;
        match (&self.expected, &self.found) {
            (Some(e), Some(x)) => write!(f, " (expected {e}, found {x})"),
            (Some(e), None) => write!(f, " (expected {e})"),
            (None, Some(x)) => write!(f, " (found {x})"),
            (None, None) => Ok(()),
        }
    }
}

/// Checks that every free type variable of `t` is in scope.
pub fn check_wf_type(delta: &TypeContext, t: &TypeExpr) -> Result<(), TypeError> {
    let unbound: Vec<String> = t
        .free_vars()
        .into_iter()
        .filter(|a| !delta.contains(a))
        .collect();
    if unbound.is_empty() {
        Ok(())
    } else {
        Err(TypeError {
            path: vec![],
            rule: "WF-Type",
            message: format!(
                "type {t} mentions unbound type variable(s) {}",
                unbound.join(", ")
            ),
            expected: None,
            found: None,
        })
    }
}

/// Infers the type of `e` under the given contexts.
pub fn infer_type(
    delta: &TypeContext,
    gamma: &TermContext,
    e: &TermExpr,
) -> Result<TypeExpr, TypeError> {
    let mut cx = Checker {
        delta: delta.iter().cloned().collect(),
        gamma: gamma.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
        path: Vec::new(),
    };
    cx.infer(e)
}

/// Checks `e` against an expected type, up to renaming of bound variables.
pub fn check_type(
    delta: &TypeContext,
    gamma: &TermContext,
    e: &TermExpr,
    expected: &TypeExpr,
) -> Result<TypeExpr, TypeError> {
    let found = infer_type(delta, gamma, e)?;
    if found.alpha_eq(expected) {
        Ok(found)
    } else {
        Err(TypeError {
            path: vec![],
            rule: "Check",
            message: "program type differs from the requested type".into(),
            expected: Some(expected.to_string()),
            found: Some(found.to_string()),
        })
    }
}

struct Checker {
    delta: Vec<String>,
    gamma: Vec<(String, TypeExpr)>,
    path: Vec<usize>,
}

impl Checker {
    fn err(&self, rule: &'static str, message: impl Into<String>) -> TypeError {
        TypeError {
            path: self.path.clone(),
            rule,
            message: message.into(),
            expected: None,
            found: None,
        }
    }

    fn mismatch(
        &self,
        rule: &'static str,
        message: &str,
        expected: impl fmt::Display,
        found: &TypeExpr,
    ) -> TypeError {
        TypeError {
            expected: Some(expected.to_string()),
            found: Some(found.to_string()),
            ..self.err(rule, message)
        }
    }

    fn child(&mut self, index: usize, e: &TermExpr) -> Result<TypeExpr, TypeError> {
        self.path.push(index);
        let out = self.infer(e);
        self.path.pop();
        out
    }

    fn wf(&self, rule: &'static str, t: &TypeExpr) -> Result<(), TypeError> {
        let unbound: Vec<String> = t
            .free_vars()
            .into_iter()
            .filter(|a| !self.delta.iter().any(|d| d == a))
            .collect();
        if unbound.is_empty() {
            Ok(())
        } else {
            Err(self.err(
                rule,
                format!(
                    "type {t} mentions unbound type variable(s) {}",
                    unbound.join(", ")
                ),
            ))
        }
    }

    fn infer(&mut self, e: &TermExpr) -> Result<TypeExpr, TypeError> {
        match e {
            TermExpr::Int(_) => Ok(TypeExpr::Int),
            TermExpr::Unit => Ok(TypeExpr::Unit),
            TermExpr::Var(x) => self
                .gamma
                .iter()
                .rev()
                .find(|(y, _)| y == x)
                .map(|(_, t)| t.clone())
                .ok_or_else(|| self.err("FT-Var", format!("unbound variable {x}"))),
            TermExpr::Lam(x, t, body) => {
                self.wf("FT-Fun", t)?;
                self.gamma.push((x.clone(), t.clone()));
                let out = self.child(0, body);
                self.gamma.pop();
                Ok(TypeExpr::arrow(t.clone(), out?))
            }
            TermExpr::App(f, a) => {
                let ft = self.child(0, f)?;
                let at = self.child(1, a)?;
                match ft {
                    TypeExpr::Arrow(dom, cod) => {
                        if dom.alpha_eq(&at) {
                            Ok(*cod)
                        } else {
                            self.path.push(1);
                            let err = self.mismatch(
                                "FT-App",
                                "argument type does not match parameter type",
                                &dom,
                                &at,
                            );
                            self.path.pop();
                            Err(err)
                        }
                    }
                    other => {
                        self.path.push(0);
                        let err = self.mismatch(
                            "FT-App",
                            "applied term is not a function",
                            "a function type",
                            &other,
                        );
                        self.path.pop();
                        Err(err)
                    }
                }
            }
            TermExpr::Pair(l, r) => {
                let lt = self.child(0, l)?;
                let rt = self.child(1, r)?;
                Ok(TypeExpr::prod(lt, rt))
            }
            TermExpr::Proj(side, p) => match self.child(0, p)? {
                TypeExpr::Prod(l, r) => Ok(if *side == Side::First { *l } else { *r }),
                other => {
                    self.path.push(0);
                    let err = self.mismatch(
                        "FT-Prj",
                        "projection from a non-product",
                        "a product type",
                        &other,
                    );
                    self.path.pop();
                    Err(err)
                }
            },
            TermExpr::TyLam(a, body) => {
                if self.delta.iter().any(|d| d == a) {
                    let mut avoid: BTreeSet<String> = self.delta.iter().cloned().collect();
                    body.collect_all_names(&mut avoid);
                    let fresh = fresh_name(a, &avoid);
                    let renamed = substitute_type_in_term(body, a, &TypeExpr::Var(fresh.clone()));
                    self.delta.push(fresh.clone());
                    let out = self.child(0, &renamed);
                    self.delta.pop();
                    Ok(TypeExpr::forall(fresh, out?))
                } else {
                    self.delta.push(a.clone());
                    let out = self.child(0, body);
                    self.delta.pop();
                    Ok(TypeExpr::forall(a.clone(), out?))
                }
            }
            TermExpr::TyApp(f, t) => {
                self.wf("FT-TApp", t)?;
                match self.child(0, f)? {
                    TypeExpr::Forall(a, body) => Ok(body.substitute(&a, t)),
                    other => {
                        self.path.push(0);
                        let err = self.mismatch(
                            "FT-TApp",
                            "type application of a non-polymorphic term",
                            "a forall type",
                            &other,
                        );
                        self.path.pop();
                        Err(err)
                    }
                }
            }
            TermExpr::Prim(op, l, r) => {
                for (i, operand) in [l, r].into_iter().enumerate() {
                    let t = self.child(i, operand)?;
                    if t != TypeExpr::Int {
                        self.path.push(i);
                        let err = self.mismatch(
                            "FT-Prim",
                            &format!("operand of {} must be an integer", op.symbol()),
                            TypeExpr::Int,
                            &t,
                        );
                        self.path.pop();
                        return Err(err);
                    }
                }
                Ok(TypeExpr::Int)
            }
            TermExpr::IfZero(c, t, f) => {
                let ct = self.child(0, c)?;
                if ct != TypeExpr::Int {
                    self.path.push(0);
                    let err =
                        self.mismatch("FT-Ifz", "condition must be an integer", TypeExpr::Int, &ct);
                    self.path.pop();
                    return Err(err);
                }
                let tt = self.child(1, t)?;
                let ft = self.child(2, f)?;
                if tt.alpha_eq(&ft) {
                    Ok(tt)
                } else {
                    self.path.push(2);
                    let err = self.mismatch("FT-Ifz", "branches have different types", &tt, &ft);
                    self.path.pop();
                    Err(err)
                }
            }
        }
    }
}

//! Call-by-value, left-to-right small-step reduction.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use thiserror::Error;

use super::subst::{substitute_term_in_place, substitute_type_in_place};
use super::term::{PrimOp, Side, TermExpr};

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("evaluation did not finish within {0} steps")]
    FuelExhausted(u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("stuck term: {0}")]
    StuckTerm(String),
}

/// Default step bound used by the oracle and the CLI.
pub const DEFAULT_FUEL: u64 = 1_000_000;

/// One reduction step. `Ok(None)` means `e` is already a value.
pub fn step(e: &TermExpr) -> Result<Option<TermExpr>, EvalError> {
    let mut next = e.clone();
    if step_in_place(&mut next)? {
        Ok(Some(next))
    } else {
        Ok(None)
    }
}

/// Reduces `e` to a value, taking at most `fuel` steps.
pub fn evaluate(e: &TermExpr, fuel: u64) -> Result<TermExpr, EvalError> {
    let mut cur = e.clone();
    let mut used = 0u64;
    while step_in_place(&mut cur)? {
        used += 1;
        if used > fuel {
            return Err(EvalError::FuelExhausted(fuel));
        }
    }
    Ok(cur)
}

/// Performs one step on `e` in place. Returns `false` when `e` is a value.
fn step_in_place(e: &mut TermExpr) -> Result<bool, EvalError> {
    match e {
        TermExpr::Int(_) | TermExpr::Unit | TermExpr::Lam(..) | TermExpr::TyLam(..) => Ok(false),
        TermExpr::Var(x) => Err(EvalError::StuckTerm(format!("free variable {x}"))),
        TermExpr::Pair(l, r) => Ok(step_in_place(l)? || step_in_place(r)?),
        TermExpr::App(f, a) => {
            if step_in_place(f)? || step_in_place(a)? {
                return Ok(true);
            }
            if !matches!(**f, TermExpr::Lam(..)) {
                return Err(EvalError::StuckTerm(format!(
                    "application of non-function {f}"
                )));
            }
            let TermExpr::App(f, arg) = std::mem::replace(e, TermExpr::Unit) else {
                unreachable!()
            };
            let TermExpr::Lam(param, _, mut body) = *f else {
                unreachable!()
            };
            substitute_term_in_place(&mut body, &param, &arg);
            *e = *body;
            Ok(true)
        }
        TermExpr::Proj(side, p) => {
            if step_in_place(p)? {
                return Ok(true);
            }
            let side = *side;
            match std::mem::replace(e, TermExpr::Unit) {
                TermExpr::Proj(_, inner) => match *inner {
                    TermExpr::Pair(l, r) => {
                        *e = if side == Side::First { *l } else { *r };
                        Ok(true)
                    }
                    other => Err(EvalError::StuckTerm(format!(
                        "projection from non-pair {other}"
                    ))),
                },
                _ => unreachable!(),
            }
        }
        TermExpr::TyApp(f, _) => {
            if step_in_place(f)? {
                return Ok(true);
            }
            if !matches!(**f, TermExpr::TyLam(..)) {
                return Err(EvalError::StuckTerm(format!("type application of {f}")));
            }
            let TermExpr::TyApp(f, ty) = std::mem::replace(e, TermExpr::Unit) else {
                unreachable!()
            };
            let TermExpr::TyLam(binder, mut body) = *f else {
                unreachable!()
            };
            substitute_type_in_place(&mut body, &binder, &ty);
            *e = *body;
            Ok(true)
        }
        TermExpr::Prim(op, l, r) => {
            if step_in_place(l)? || step_in_place(r)? {
                return Ok(true);
            }
            match (l.as_int(), r.as_int()) {
                (Some(a), Some(b)) => {
                    *e = TermExpr::Int(apply_prim(*op, a, b)?);
                    Ok(true)
                }
                _ => Err(EvalError::StuckTerm(format!(
                    "{} applied to non-integers {l} and {r}",
                    op.symbol()
                ))),
            }
        }
        TermExpr::IfZero(c, ..) => {
            if step_in_place(c)? {
                return Ok(true);
            }
            let zero = match c.as_int() {
                Some(n) => n.is_zero(),
                None => return Err(EvalError::StuckTerm(format!("ifz on non-integer {c}"))),
            };
            let TermExpr::IfZero(_, t, f) = std::mem::replace(e, TermExpr::Unit) else {
                unreachable!()
            };
            *e = if zero { *t } else { *f };
            Ok(true)
        }
    }
}

/// Integer primitives. Division and remainder round toward negative
/// infinity, so `mod` by a positive divisor is never negative.
pub fn apply_prim(op: PrimOp, a: &BigInt, b: &BigInt) -> Result<BigInt, EvalError> {
    Ok(match op {
        PrimOp::Add => a + b,
        PrimOp::Sub => a - b,
        PrimOp::Mul => a * b,
        PrimOp::Div | PrimOp::Mod if b.is_zero() => return Err(EvalError::DivisionByZero),
        PrimOp::Div => a.div_floor(b),
        PrimOp::Mod => a.mod_floor(b),
        PrimOp::Eq => BigInt::from(u8::from(a == b)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::types::TypeExpr;

    fn n(i: i64) -> TermExpr {
        TermExpr::int(i)
    }

    #[test]
    fn arithmetic_and_equality() {
        let e = TermExpr::prim(PrimOp::Eq, TermExpr::prim(PrimOp::Add, n(2), n(3)), n(5));
        assert_eq!(evaluate(&e, 100).unwrap(), n(1));
    }

    #[test]
    fn division_rounds_down_and_mod_follows_divisor_sign() {
        let div = |a, b| apply_prim(PrimOp::Div, &BigInt::from(a), &BigInt::from(b)).unwrap();
        let md = |a, b| apply_prim(PrimOp::Mod, &BigInt::from(a), &BigInt::from(b)).unwrap();
        assert_eq!(div(7, 2), BigInt::from(3));
        assert_eq!(div(-7, 2), BigInt::from(-4));
        assert_eq!(md(-3, 2), BigInt::from(1));
        assert_eq!(md(7, -2), BigInt::from(-1));
        assert_eq!(
            apply_prim(PrimOp::Mod, &BigInt::from(1), &BigInt::zero()),
            Err(EvalError::DivisionByZero)
        );
    }

    #[test]
    fn application_reduces_left_then_right() {
        let id = TermExpr::lam("x", TypeExpr::Int, TermExpr::var("x"));
        let e = TermExpr::app(id, TermExpr::prim(PrimOp::Mul, n(6), n(7)));
        let s1 = step(&e).unwrap().unwrap();
        assert!(matches!(s1, TermExpr::App(_, ref a) if **a == n(42)));
        assert_eq!(evaluate(&e, 10).unwrap(), n(42));
    }

    #[test]
    fn ifz_selects_then_branch_only_on_zero() {
        let e = |c| TermExpr::if_zero(n(c), n(10), n(20));
        assert_eq!(evaluate(&e(0), 10).unwrap(), n(10));
        assert_eq!(evaluate(&e(-1), 10).unwrap(), n(20));
    }

    #[test]
    fn type_application_substitutes_into_annotations() {
        let poly = TermExpr::ty_lam(
            "a",
            TermExpr::lam("x", TypeExpr::var("a"), TermExpr::var("x")),
        );
        let e = TermExpr::ty_app(poly, TypeExpr::Unit);
        assert_eq!(
            step(&e).unwrap().unwrap(),
            TermExpr::lam("x", TypeExpr::Unit, TermExpr::var("x"))
        );
    }

    #[test]
    fn stuck_and_fuel_errors() {
        let e = TermExpr::app(n(1), n(2));
        assert!(matches!(evaluate(&e, 10), Err(EvalError::StuckTerm(_))));
        let nested_sum = TermExpr::prim(PrimOp::Add, TermExpr::prim(PrimOp::Add, n(1), n(1)), n(1));
        assert_eq!(evaluate(&nested_sum, 1), Err(EvalError::FuelExhausted(1)));
        assert_eq!(evaluate(&nested_sum, 2).unwrap(), n(3));
    }

    #[test]
    fn values_do_not_step() {
        assert_eq!(step(&n(3)).unwrap(), None);
    }
}

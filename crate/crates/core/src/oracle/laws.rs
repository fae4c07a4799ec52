//! Randomised check of the monad laws for the level interface (`comp` as
//! bind, `wrap` as return) in the confidential view, where keys are `unit`.

use std::fmt;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::relation::{Outcome, Relator};
use super::{Domain, EnumBudget, OracleError};
use crate::lang::{PrimOp, TermExpr, TypeExpr};
use crate::views::{comp_impl, wrap_impl};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Law {
    LeftUnit,
    RightUnit,
    Associativity,
}

impl Law {
    pub const ALL: [Law; 3] = [Law::LeftUnit, Law::RightUnit, Law::Associativity];
}

impl fmt::Display for Law {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Law::LeftUnit => "left unit",
            Law::RightUnit => "right unit",
            Law::Associativity => "associativity",
        })
    }
}

/// One instance whose two sides disagreed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LawFailure {
    pub law: Law,
    pub trial: usize,
    pub lhs: TermExpr,
    pub rhs: TermExpr,
    pub lhs_value: Outcome,
    pub rhs_value: Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LawReport {
    pub seed: u64,
    pub trials_per_law: usize,
    pub checked: usize,
    pub failures: Vec<LawFailure>,
}

impl LawReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks the laws for the standard interface implementations.
pub fn check_monad_laws(seed: u64, trials: usize) -> Result<LawReport, OracleError> {
    check_monad_laws_with(
        &comp_impl(),
        &wrap_impl(),
        seed,
        trials,
        Domain::symmetric(8),
    )
}

/// Checks the laws for given `comp` and `wrap` implementations. Random
/// integer literals are drawn from `domain`.
pub fn check_monad_laws_with(
    comp: &TermExpr,
    wrap: &TermExpr,
    seed: u64,
    trials: usize,
    domain: Domain,
) -> Result<LawReport, OracleError> {
    let mut gen = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        domain,
        comp: comp.clone(),
        wrap: wrap.clone(),
        fresh: 0,
    };
    let relator = Relator::new(domain, EnumBudget::default());
    let mut report = LawReport {
        seed,
        trials_per_law: trials,
        checked: 0,
        failures: Vec::new(),
    };
    for trial in 0..trials {
        for law in Law::ALL {
            let (lhs, rhs) = gen.instance(law);
            let lhs_value = relator.run(&TermExpr::app(lhs.clone(), TermExpr::Unit))?;
            let rhs_value = relator.run(&TermExpr::app(rhs.clone(), TermExpr::Unit))?;
            report.checked += 1;
            if lhs_value != rhs_value {
                report.failures.push(LawFailure {
                    law,
                    trial,
                    lhs,
                    rhs,
                    lhs_value,
                    rhs_value,
                });
            }
        }
    }
    Ok(report)
}

struct Gen {
    rng: ChaCha8Rng,
    domain: Domain,
    comp: TermExpr,
    wrap: TermExpr,
    fresh: usize,
}

impl Gen {
    fn bind(&self, m: TermExpr, k: TermExpr) -> TermExpr {
        let c = TermExpr::ty_app(
            TermExpr::ty_app(self.comp.clone(), TypeExpr::Int),
            TypeExpr::Int,
        );
        TermExpr::app(TermExpr::app(c, m), k)
    }

    fn unit(&self, e: TermExpr) -> TermExpr {
        TermExpr::app(TermExpr::ty_app(self.wrap.clone(), TypeExpr::Int), e)
    }

    fn literal(&mut self) -> TermExpr {
        TermExpr::int(self.rng.random_range(self.domain.lo..=self.domain.hi))
    }

    fn nonzero(&mut self) -> TermExpr {
        let n: i64 = self.rng.random_range(1..=self.domain.hi.max(2));
        TermExpr::int(if self.rng.random_bool(0.5) { n } else { -n })
    }

    /// An integer expression over the given integer variables.
    fn int_expr(&mut self, vars: &[String], depth: u32) -> TermExpr {
        let leaf = depth == 0 || self.rng.random_bool(0.3);
        if leaf {
            return if !vars.is_empty() && self.rng.random_bool(0.6) {
                TermExpr::var(vars[self.rng.random_range(0..vars.len())].clone())
            } else {
                self.literal()
            };
        }
        match self.rng.random_range(0..6) {
            0 => TermExpr::prim(
                PrimOp::Add,
                self.int_expr(vars, depth - 1),
                self.int_expr(vars, depth - 1),
            ),
            1 => TermExpr::prim(
                PrimOp::Sub,
                self.int_expr(vars, depth - 1),
                self.int_expr(vars, depth - 1),
            ),
            2 => TermExpr::prim(
                PrimOp::Mul,
                self.int_expr(vars, depth - 1),
                self.int_expr(vars, depth - 1),
            ),
            3 => {
                let op = if self.rng.random_bool(0.5) {
                    PrimOp::Div
                } else {
                    PrimOp::Mod
                };
                TermExpr::prim(op, self.int_expr(vars, depth - 1), self.nonzero())
            }
            4 => TermExpr::prim(
                PrimOp::Eq,
                self.int_expr(vars, depth - 1),
                self.int_expr(vars, depth - 1),
            ),
            _ => TermExpr::if_zero(
                self.int_expr(vars, depth - 1),
                self.int_expr(vars, depth - 1),
                self.int_expr(vars, depth - 1),
            ),
        }
    }

    /// A computation of type `unit -> int`.
    fn computation(&mut self, vars: &[String], depth: u32) -> TermExpr {
        match if depth == 0 {
            self.rng.random_range(0..2)
        } else {
            self.rng.random_range(0..3)
        } {
            0 => TermExpr::constant_wrapper(self.int_expr(vars, depth)),
            1 => {
                let e = self.int_expr(vars, depth);
                self.unit(e)
            }
            _ => {
                let m = self.computation(vars, depth - 1);
                let k = self.continuation(vars, depth - 1);
                self.bind(m, k)
            }
        }
    }

    /// A function of type `int -> unit -> int`.
    fn continuation(&mut self, vars: &[String], depth: u32) -> TermExpr {
        let x = format!("v{}", self.fresh);
        self.fresh += 1;
        let mut inner = vars.to_vec();
        inner.push(x.clone());
        TermExpr::lam(x, TypeExpr::Int, self.computation(&inner, depth))
    }

    fn instance(&mut self, law: Law) -> (TermExpr, TermExpr) {
        match law {
            Law::LeftUnit => {
                let e = self.int_expr(&[], 2);
                let f = self.continuation(&[], 2);
                (
                    self.bind(self.unit(e.clone()), f.clone()),
                    TermExpr::app(f, e),
                )
            }
            Law::RightUnit => {
                let m = self.computation(&[], 2);
                let ret = TermExpr::ty_app(self.wrap.clone(), TypeExpr::Int);
                (self.bind(m.clone(), ret), m)
            }
            Law::Associativity => {
                let m = self.computation(&[], 2);
                let f = self.continuation(&[], 2);
                let g = self.continuation(&[], 2);
                let x = format!("v{}", self.fresh);
                self.fresh += 1;
                let lhs = self.bind(self.bind(m.clone(), f.clone()), g.clone());
                let inner = TermExpr::lam(
                    x.clone(),
                    TypeExpr::Int,
                    self.bind(TermExpr::app(f, TermExpr::var(x)), g),
                );
                (lhs, self.bind(m, inner))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::typecheck::{infer_type, TermContext, TypeContext};

    #[test]
    fn generated_instances_are_well_typed() {
        let mut gen = Gen {
            rng: ChaCha8Rng::seed_from_u64(3),
            domain: Domain::symmetric(5),
            comp: comp_impl(),
            wrap: wrap_impl(),
            fresh: 0,
        };
        let want = TypeExpr::arrow(TypeExpr::Unit, TypeExpr::Int);
        for _ in 0..20 {
            for law in Law::ALL {
                let (l, r) = gen.instance(law);
                for side in [l, r] {
                    let t = infer_type(&TypeContext::new(), &TermContext::new(), &side).unwrap();
                    assert!(t.alpha_eq(&want), "{law}: {t}");
                }
            }
        }
    }

    #[test]
    fn standard_interface_satisfies_the_laws() {
        let report = check_monad_laws(7, 10).unwrap();
        assert_eq!(report.checked, 30);
        assert!(report.passed(), "{:?}", report.failures.first());
    }

    #[test]
    fn a_bind_that_perturbs_results_is_caught() {
        // Only meaningful at int; adds one to every bound result.
        let int_thunk = TypeExpr::arrow(TypeExpr::Unit, TypeExpr::Int);
        let bad = TermExpr::ty_lam(
            "b1",
            TermExpr::ty_lam(
                "b2",
                TermExpr::lam(
                    "x",
                    int_thunk.clone(),
                    TermExpr::lam(
                        "f",
                        TypeExpr::arrow(TypeExpr::Int, int_thunk),
                        TermExpr::constant_wrapper(TermExpr::prim(
                            PrimOp::Add,
                            TermExpr::app(
                                TermExpr::app(
                                    TermExpr::var("f"),
                                    TermExpr::app(TermExpr::var("x"), TermExpr::Unit),
                                ),
                                TermExpr::Unit,
                            ),
                            TermExpr::int(1),
                        )),
                    ),
                ),
            ),
        );
        let report = check_monad_laws_with(&bad, &wrap_impl(), 1, 5, Domain::symmetric(4)).unwrap();
        assert!(report.failures.iter().any(|f| f.law == Law::LeftUnit));
    }
}

//! Relational interpretation of types and enumeration of related pairs.

use std::fmt;

use indexmap::IndexMap;

use super::{Domain, EnumBudget, OracleError};
use crate::lang::{evaluate, EvalError, TermExpr, TypeExpr};
use crate::policy::Declassifier;

/// Interpretation of one type variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RelDescriptor {
    /// Every pair of values of the carrier type.
    FullAt(TypeExpr),
    /// No pair at all.
    EmptyAt(TypeExpr),
    /// Equal values of the carrier type.
    Id(TypeExpr),
    /// Integers on which every listed function agrees.
    ViaFns(Vec<Declassifier>),
    /// Tuples on which the function agrees.
    DecTuple(Declassifier),
}

impl RelDescriptor {
    pub fn id_int() -> Self {
        RelDescriptor::Id(TypeExpr::Int)
    }

    /// The concrete type the related values inhabit.
    pub fn carrier(&self) -> TypeExpr {
        match self {
            RelDescriptor::FullAt(t) | RelDescriptor::EmptyAt(t) | RelDescriptor::Id(t) => {
                t.clone()
            }
            RelDescriptor::ViaFns(fs) => fs
                .first()
                .map(|f| f.param_type.clone())
                .unwrap_or(TypeExpr::Int),
            RelDescriptor::DecTuple(f) => f.param_type.clone(),
        }
    }
}

impl fmt::Display for RelDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |fs: &[Declassifier]| {
            fs.iter()
                .map(|d| d.name.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        };
        match self {
            RelDescriptor::FullAt(t) => write!(f, "full({t})"),
            RelDescriptor::EmptyAt(t) => write!(f, "empty({t})"),
            RelDescriptor::Id(t) => write!(f, "id({t})"),
            RelDescriptor::ViaFns(fs) => write!(f, "via({})", names(fs)),
            RelDescriptor::DecTuple(d) => write!(f, "tuple-via({})", d.name),
        }
    }
}

/// Interpretations of type variables plus the pinned term pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RelEnv {
    pub types: IndexMap<String, RelDescriptor>,
    pub terms: IndexMap<String, (TermExpr, TermExpr)>,
}

/// Result of running a term: a value, or a division by zero, which is
/// treated as an observable outcome.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Value(TermExpr),
    DivisionByZero,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Value(v) => write!(f, "{v}"),
            Outcome::DivisionByZero => f.write_str("<division by zero>"),
        }
    }
}

/// Why two values are not related.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    /// Name of the relational clause that rejected the pair.
    pub clause: &'static str,
    pub detail: String,
}

/// The relational interpreter, parameterised by the integer domain that
/// function arguments are sampled from.
#[derive(Clone, Copy, Debug)]
pub struct Relator {
    pub domain: Domain,
    pub budget: EnumBudget,
}

fn forall_bank() -> [RelDescriptor; 4] {
    [
        RelDescriptor::id_int(),
        RelDescriptor::FullAt(TypeExpr::Int),
        RelDescriptor::EmptyAt(TypeExpr::Int),
        RelDescriptor::FullAt(TypeExpr::Unit),
    ]
}

impl Relator {
    pub fn new(domain: Domain, budget: EnumBudget) -> Self {
        Relator { domain, budget }
    }

    pub fn run(&self, e: &TermExpr) -> Result<Outcome, OracleError> {
        match evaluate(e, self.budget.fuel) {
            Ok(v) => Ok(Outcome::Value(v)),
            Err(EvalError::DivisionByZero) => Ok(Outcome::DivisionByZero),
            Err(other) => Err(other.into()),
        }
    }

    pub fn related_values(
        &self,
        env: &RelEnv,
        ty: &TypeExpr,
        v1: &TermExpr,
        v2: &TermExpr,
    ) -> Result<bool, OracleError> {
        Ok(self.value_mismatch(env, ty, v1, v2)?.is_none())
    }

    pub fn related_terms(
        &self,
        env: &RelEnv,
        ty: &TypeExpr,
        e1: &TermExpr,
        e2: &TermExpr,
    ) -> Result<bool, OracleError> {
        Ok(self.term_mismatch(env, ty, e1, e2)?.is_none())
    }

    /// Evaluates both terms and compares the outcomes.
    pub fn term_mismatch(
        &self,
        env: &RelEnv,
        ty: &TypeExpr,
        e1: &TermExpr,
        e2: &TermExpr,
    ) -> Result<Option<Mismatch>, OracleError> {
        let o1 = self.run(e1)?;
        let o2 = self.run(e2)?;
        self.outcome_mismatch(env, ty, &o1, &o2)
    }

    pub fn outcome_mismatch(
        &self,
        env: &RelEnv,
        ty: &TypeExpr,
        o1: &Outcome,
        o2: &Outcome,
    ) -> Result<Option<Mismatch>, OracleError> {
        match (o1, o2) {
            (Outcome::Value(v1), Outcome::Value(v2)) => self.value_mismatch(env, ty, v1, v2),
            (Outcome::DivisionByZero, Outcome::DivisionByZero) => Ok(None),
            _ => Ok(Some(Mismatch {
                clause: "Eq-Term",
                detail: format!("one run yields {o1}, the other {o2}"),
            })),
        }
    }

    /// `None` when the values are related at `ty`; otherwise the reason.
    pub fn value_mismatch(
        &self,
        env: &RelEnv,
        ty: &TypeExpr,
        v1: &TermExpr,
        v2: &TermExpr,
    ) -> Result<Option<Mismatch>, OracleError> {
        match ty {
            TypeExpr::Int => Ok((v1 != v2).then(|| Mismatch {
                clause: "Eq-Int",
                detail: format!("{v1} differs from {v2}"),
            })),
            TypeExpr::Unit => {
                Ok(
                    (v1 != &TermExpr::Unit || v2 != &TermExpr::Unit).then(|| Mismatch {
                        clause: "Eq-Unit",
                        detail: format!("{v1} and {v2} are not both ()"),
                    }),
                )
            }
            TypeExpr::Prod(lt, rt) => match (v1, v2) {
                (TermExpr::Pair(l1, r1), TermExpr::Pair(l2, r2)) => {
                    if let Some(m) = self.value_mismatch(env, lt, l1, l2)? {
                        return Ok(Some(Mismatch {
                            detail: format!("first component: {}", m.detail),
                            ..m
                        }));
                    }
                    Ok(self.value_mismatch(env, rt, r1, r2)?.map(|m| Mismatch {
                        detail: format!("second component: {}", m.detail),
                        ..m
                    }))
                }
                _ => Err(OracleError::Stuck(format!(
                    "expected pairs at {ty}, got {v1} and {v2}"
                ))),
            },
            TypeExpr::Var(a) => {
                let desc = env
                    .types
                    .get(a)
                    .ok_or_else(|| OracleError::UnboundTypeVar(a.clone()))?;
                self.descriptor_mismatch(a, desc, v1, v2)
            }
            TypeExpr::Arrow(dom, cod) => {
                for (a1, a2) in self.enumerate_related_pairs(env, dom)? {
                    let r1 = self.run(&TermExpr::app(v1.clone(), a1.clone()))?;
                    let r2 = self.run(&TermExpr::app(v2.clone(), a2.clone()))?;
                    if let Some(m) = self.outcome_mismatch(env, cod, &r1, &r2)? {
                        return Ok(Some(Mismatch {
                            detail: format!("applied to {a1} and {a2}: {}", m.detail),
                            ..m
                        }));
                    }
                }
                Ok(None)
            }
            TypeExpr::Forall(b, body) => {
                for desc in forall_bank() {
                    let carrier = desc.carrier();
                    let mut inner = env.clone();
                    inner.types.insert(b.clone(), desc.clone());
                    let r1 = self.run(&TermExpr::ty_app(v1.clone(), carrier.clone()))?;
                    let r2 = self.run(&TermExpr::ty_app(v2.clone(), carrier))?;
                    if let Some(m) = self.outcome_mismatch(&inner, body, &r1, &r2)? {
                        return Ok(Some(Mismatch {
                            detail: format!("instantiating {b} with {desc}: {}", m.detail),
                            ..m
                        }));
                    }
                }
                Ok(None)
            }
        }
    }

    fn descriptor_mismatch(
        &self,
        var: &str,
        desc: &RelDescriptor,
        v1: &TermExpr,
        v2: &TermExpr,
    ) -> Result<Option<Mismatch>, OracleError> {
        match desc {
            RelDescriptor::FullAt(_) => Ok(None),
            RelDescriptor::EmptyAt(_) => Ok(Some(Mismatch {
                clause: "Eq-Empty",
                detail: format!("{var} relates nothing for this observer"),
            })),
            RelDescriptor::Id(_) => Ok((v1 != v2).then(|| Mismatch {
                clause: "Eq-Id",
                detail: format!("{var} requires equal values but {v1} differs from {v2}"),
            })),
            RelDescriptor::ViaFns(fs) => {
                let clause = if fs.len() == 1 { "Eq-Var2" } else { "Eq-Var4" };
                for f in fs {
                    if let Some(m) = self.through(f, v1, v2)? {
                        return Ok(Some(Mismatch { clause, detail: m }));
                    }
                }
                Ok(None)
            }
            RelDescriptor::DecTuple(f) => Ok(self.through(f, v1, v2)?.map(|detail| Mismatch {
                clause: "Eq-Var5",
                detail,
            })),
        }
    }

    /// Compares `f v1` with `f v2` at the declassifier's result type.
    fn through(
        &self,
        f: &Declassifier,
        v1: &TermExpr,
        v2: &TermExpr,
    ) -> Result<Option<String>, OracleError> {
        let lam = f.as_lambda();
        let r1 = self.run(&TermExpr::app(lam.clone(), v1.clone()))?;
        let r2 = self.run(&TermExpr::app(lam, v2.clone()))?;
        for (v, r) in [(v1, &r1), (v2, &r2)] {
            if *r == Outcome::DivisionByZero {
                return Err(OracleError::PartialDeclassifier {
                    name: f.name.clone(),
                    value: v.to_string(),
                });
            }
        }
        Ok(self
            .outcome_mismatch(&RelEnv::default(), &f.result_type, &r1, &r2)?
            .map(|_| format!("{name} {v1} = {r1} but {name} {v2} = {r2}", name = f.name)))
    }

    /// The concrete type a (possibly abstract) type stands for under `env`.
    pub fn carrier(&self, env: &RelEnv, ty: &TypeExpr) -> Result<TypeExpr, OracleError> {
        Ok(match ty {
            TypeExpr::Int | TypeExpr::Unit => ty.clone(),
            TypeExpr::Var(a) => env
                .types
                .get(a)
                .ok_or_else(|| OracleError::UnboundTypeVar(a.clone()))?
                .carrier(),
            TypeExpr::Prod(l, r) => TypeExpr::prod(self.carrier(env, l)?, self.carrier(env, r)?),
            TypeExpr::Arrow(l, r) => TypeExpr::arrow(self.carrier(env, l)?, self.carrier(env, r)?),
            TypeExpr::Forall(..) => return Err(OracleError::UnenumerableDomain(ty.clone())),
        })
    }

    /// All values of a concrete first-order type over the domain, in sweep
    /// order.
    pub fn values_of(&self, ty: &TypeExpr) -> Result<Vec<TermExpr>, OracleError> {
        match ty {
            TypeExpr::Int => Ok(self
                .domain
                .values()
                .into_iter()
                .map(TermExpr::Int)
                .collect()),
            TypeExpr::Unit => Ok(vec![TermExpr::Unit]),
            TypeExpr::Prod(l, r) => {
                let ls = self.values_of(l)?;
                let rs = self.values_of(r)?;
                self.check_size(ls.len().saturating_mul(rs.len()), ty)?;
                Ok(ls
                    .iter()
                    .flat_map(|a| rs.iter().map(move |b| TermExpr::pair(a.clone(), b.clone())))
                    .collect())
            }
            _ => Err(OracleError::UnenumerableDomain(ty.clone())),
        }
    }

    fn check_size(&self, n: usize, ty: &TypeExpr) -> Result<(), OracleError> {
        if n > self.budget.max_pairs {
            Err(OracleError::BudgetExceeded(format!(
                "{n} candidates at type {ty}"
            )))
        } else {
            Ok(())
        }
    }

    fn square(
        &self,
        values: &[TermExpr],
        ty: &TypeExpr,
    ) -> Result<Vec<(TermExpr, TermExpr)>, OracleError> {
        self.check_size(values.len().saturating_mul(values.len()), ty)?;
        Ok(values
            .iter()
            .flat_map(|a| values.iter().map(move |b| (a.clone(), b.clone())))
            .collect())
    }

    /// Every pair of values related at `ty` within the domain, in sweep
    /// order. Functions are only enumerated when their domain is a key type,
    /// in which case constant functions are produced.
    pub fn enumerate_related_pairs(
        &self,
        env: &RelEnv,
        ty: &TypeExpr,
    ) -> Result<Vec<(TermExpr, TermExpr)>, OracleError> {
        match ty {
            TypeExpr::Int => Ok(self
                .values_of(ty)?
                .into_iter()
                .map(|v| (v.clone(), v))
                .collect()),
            TypeExpr::Unit => Ok(vec![(TermExpr::Unit, TermExpr::Unit)]),
            TypeExpr::Prod(l, r) => {
                let ls = self.enumerate_related_pairs(env, l)?;
                let rs = self.enumerate_related_pairs(env, r)?;
                self.check_size(ls.len().saturating_mul(rs.len()), ty)?;
                Ok(ls
                    .iter()
                    .flat_map(|(a1, a2)| {
                        rs.iter().map(move |(b1, b2)| {
                            (
                                TermExpr::pair(a1.clone(), b1.clone()),
                                TermExpr::pair(a2.clone(), b2.clone()),
                            )
                        })
                    })
                    .collect())
            }
            TypeExpr::Var(a) => {
                let desc = env
                    .types
                    .get(a)
                    .ok_or_else(|| OracleError::UnboundTypeVar(a.clone()))?;
                match desc {
                    RelDescriptor::EmptyAt(_) => Ok(vec![]),
                    RelDescriptor::Id(t) => Ok(self
                        .values_of(t)?
                        .into_iter()
                        .map(|v| (v.clone(), v))
                        .collect()),
                    RelDescriptor::FullAt(t) => self.square(&self.values_of(t)?, ty),
                    RelDescriptor::ViaFns(_) | RelDescriptor::DecTuple(_) => {
                        let mut out = Vec::new();
                        for (v1, v2) in self.square(&self.values_of(&desc.carrier())?, ty)? {
                            if self.descriptor_mismatch(a, desc, &v1, &v2)?.is_none() {
                                out.push((v1, v2));
                            }
                        }
                        Ok(out)
                    }
                }
            }
            TypeExpr::Arrow(dom, cod) if self.carrier(env, dom)? == TypeExpr::Unit => {
                let keys = self.enumerate_related_pairs(env, dom)?;
                let payloads = if keys.is_empty() {
                    self.square(&self.values_of(&self.carrier(env, cod)?)?, ty)?
                } else {
                    self.enumerate_related_pairs(env, cod)?
                };
                Ok(payloads
                    .into_iter()
                    .map(|(a, b)| (TermExpr::constant_wrapper(a), TermExpr::constant_wrapper(b)))
                    .collect())
            }
            _ => Err(OracleError::UnenumerableDomain(ty.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::PrimOp;

    fn parity() -> Declassifier {
        Declassifier {
            name: "f".into(),
            param: "x".into(),
            param_type: TypeExpr::Int,
            body: TermExpr::prim(PrimOp::Mod, TermExpr::var("x"), TermExpr::int(2)),
            result_type: TypeExpr::Int,
        }
    }

    fn relator(lo: i64, hi: i64) -> Relator {
        Relator::new(Domain::new(lo, hi), EnumBudget::default())
    }

    fn env_with(var: &str, d: RelDescriptor) -> RelEnv {
        let mut env = RelEnv::default();
        env.types.insert(var.into(), d);
        env
    }

    #[test]
    fn parity_relation_pairs_on_small_domain() {
        let env = env_with("a_f", RelDescriptor::ViaFns(vec![parity()]));
        let pairs = relator(0, 3)
            .enumerate_related_pairs(&env, &TypeExpr::var("a_f"))
            .unwrap();
        let mut got: Vec<(i64, i64)> = pairs
            .iter()
            .map(|(a, b)| {
                (
                    a.as_int().unwrap().try_into().unwrap(),
                    b.as_int().unwrap().try_into().unwrap(),
                )
            })
            .collect();
        got.sort();
        assert_eq!(
            got,
            vec![
                (0, 0),
                (0, 2),
                (1, 1),
                (1, 3),
                (2, 0),
                (2, 2),
                (3, 1),
                (3, 3)
            ]
        );
    }

    #[test]
    fn failing_clause_is_reported() {
        let env = env_with("a_f", RelDescriptor::ViaFns(vec![parity()]));
        let m = relator(0, 4)
            .value_mismatch(
                &env,
                &TypeExpr::var("a_f"),
                &TermExpr::int(2),
                &TermExpr::int(1),
            )
            .unwrap()
            .unwrap();
        assert_eq!(m.clause, "Eq-Var2");
    }

    #[test]
    fn empty_key_relates_any_keyed_functions() {
        let ty = TypeExpr::arrow(TypeExpr::var("a_M"), TypeExpr::Int);
        let zero = TermExpr::constant_wrapper(TermExpr::int(0));
        let one = TermExpr::constant_wrapper(TermExpr::int(1));
        let r = relator(-2, 2);
        let low = env_with("a_M", RelDescriptor::EmptyAt(TypeExpr::Unit));
        let high = env_with("a_M", RelDescriptor::FullAt(TypeExpr::Unit));
        assert!(r.related_values(&low, &ty, &zero, &one).unwrap());
        assert!(!r.related_values(&high, &ty, &zero, &one).unwrap());
        assert_eq!(r.enumerate_related_pairs(&low, &ty).unwrap().len(), 25);
        assert_eq!(r.enumerate_related_pairs(&high, &ty).unwrap().len(), 5);
    }

    #[test]
    fn higher_order_domains_are_unenumerable() {
        let ty = TypeExpr::arrow(TypeExpr::Int, TypeExpr::Int);
        assert!(matches!(
            relator(0, 1).enumerate_related_pairs(&RelEnv::default(), &ty),
            Err(OracleError::UnenumerableDomain(_))
        ));
    }

    #[test]
    fn polymorphic_identity_is_related_to_itself() {
        let id = TermExpr::ty_lam(
            "b",
            TermExpr::lam("x", TypeExpr::var("b"), TermExpr::var("x")),
        );
        let ty = TypeExpr::forall("b", TypeExpr::arrow(TypeExpr::var("b"), TypeExpr::var("b")));
        assert!(relator(-1, 1)
            .related_values(&RelEnv::default(), &ty, &id, &id)
            .unwrap());
        let konst = TermExpr::ty_lam(
            "b",
            TermExpr::lam("x", TypeExpr::var("b"), TermExpr::int(0)),
        );
        let ty_int = TypeExpr::forall("b", TypeExpr::arrow(TypeExpr::var("b"), TypeExpr::Int));
        assert!(relator(-1, 1)
            .related_values(&RelEnv::default(), &ty_int, &konst, &konst)
            .unwrap());
    }

    #[test]
    fn division_by_zero_on_one_side_only_is_observable() {
        let r = relator(0, 0);
        let m = r
            .outcome_mismatch(
                &RelEnv::default(),
                &TypeExpr::Int,
                &Outcome::DivisionByZero,
                &Outcome::Value(TermExpr::int(1)),
            )
            .unwrap();
        assert_eq!(m.unwrap().clause, "Eq-Term");
        assert!(r
            .outcome_mismatch(
                &RelEnv::default(),
                &TypeExpr::Int,
                &Outcome::DivisionByZero,
                &Outcome::DivisionByZero
            )
            .unwrap()
            .is_none());
    }
}

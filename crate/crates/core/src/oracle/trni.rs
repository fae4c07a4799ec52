use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use indexmap::IndexMap;
use num_bigint::BigInt;
use rayon::prelude::*;

use super::relation::{Mismatch, Outcome, RelDescriptor, RelEnv, Relator};
use super::{Domain, EnumBudget, OracleError};
use crate::lang::subst::{apply_term_subst, apply_type_subst};
use crate::lang::{TermExpr, TypeExpr};
use crate::policy::{Declassifier, MultiLevelPolicy, Policy};
use crate::typecheck::{check_wf_type, infer_type, TypeContext};
use crate::views::{encode, GroupView, TypeVarRole, ViewPair};

/// Settings for one semantic check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleOptions {
    pub domain: Domain,
    pub budget: EnumBudget,
    /// Observer level; required to pick a single observer of a multi-level
    /// policy, ignored for simple policies.
    pub observer: Option<String>,
}

impl OracleOptions {
    pub fn new(domain: Domain) -> Self {
        OracleOptions {
            domain,
            budget: EnumBudget::default(),
            observer: None,
        }
    }

    pub fn observer(mut self, level: impl Into<String>) -> Self {
        self.observer = Some(level.into());
        self
    }
}

/// Two runs whose results the policy says must be indistinguishable but are
/// not.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub observer: Option<String>,
    pub gamma_left: IndexMap<String, TermExpr>,
    pub gamma_right: IndexMap<String, TermExpr>,
    pub out_left: Outcome,
    pub out_right: Outcome,
    pub at_type: TypeExpr,
    pub clause: String,
    pub detail: String,
}

impl Counterexample {
    /// Re-runs the program on both recorded substitutions.
    pub fn replay(
        &self,
        p: &Policy,
        program: &TermExpr,
        opts: &OracleOptions,
    ) -> Result<(Outcome, Outcome), OracleError> {
        let views = encode(p)?;
        let relator = Relator::new(opts.domain, opts.budget);
        let body = apply_type_subst(program, &views.delta);
        let run = |gamma: &IndexMap<String, TermExpr>| {
            let e = apply_term_subst(&body, gamma.iter().chain(views.pinned.iter()));
            relator.run(&e)
        };
        Ok((run(&self.gamma_left)?, run(&self.gamma_right)?))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// Every enumerated substitution pair produced related results.
    Pass(usize),
    Fail(Box<Counterexample>),
    /// The check could not be completed within the enumeration limits.
    Unsupported(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass(_))
    }
}

/// One pair of input substitutions (inputs and group variables only).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstitutionPair {
    pub left: IndexMap<String, TermExpr>,
    pub right: IndexMap<String, TermExpr>,
}

fn lookup_fn<'a>(
    fns: &'a IndexMap<String, Declassifier>,
    name: &str,
) -> Result<&'a Declassifier, OracleError> {
    fns.get(name)
        .ok_or_else(|| OracleError::Precondition(format!("unknown declassifier {name}")))
}

fn pinned_terms(views: &ViewPair) -> IndexMap<String, (TermExpr, TermExpr)> {
    views
        .pinned
        .iter()
        .map(|(k, v)| (k.clone(), (v.clone(), v.clone())))
        .collect()
}

/// Relational interpretation of the public view of a simple policy.
pub fn rho_pol(p: &Policy, views: &ViewPair) -> Result<RelEnv, OracleError> {
    let fns = p.fns();
    let mut types = IndexMap::new();
    for (var, role) in &views.roles {
        let desc = match role {
            TypeVarRole::Opaque { .. } => RelDescriptor::FullAt(TypeExpr::Int),
            TypeVarRole::Released { fns: names } => RelDescriptor::ViaFns(
                names
                    .iter()
                    .map(|f| lookup_fn(fns, f).cloned())
                    .collect::<Result<_, _>>()?,
            ),
            TypeVarRole::Group { via, .. } => RelDescriptor::DecTuple(lookup_fn(fns, via)?.clone()),
            other => {
                return Err(OracleError::Precondition(format!(
                    "{var} ({other:?}) needs an observer level"
                )))
            }
        };
        types.insert(var.clone(), desc);
    }
    Ok(RelEnv {
        types,
        terms: pinned_terms(views),
    })
}

/// Relational interpretation of the public view of a multi-level policy as
/// seen by an observer at `observer`.
pub fn observer_env(
    p: &MultiLevelPolicy,
    views: &ViewPair,
    observer: &str,
) -> Result<RelEnv, OracleError> {
    if !p.lattice.contains(observer) {
        return Err(OracleError::UnknownObserver(observer.to_string()));
    }
    let sees = |l: &str| p.lattice.leq(l, observer).unwrap_or(false);
    let mut types = IndexMap::new();
    for (var, role) in &views.roles {
        let desc = match role {
            TypeVarRole::Level(l) => {
                if sees(l) {
                    RelDescriptor::FullAt(TypeExpr::Unit)
                } else {
                    RelDescriptor::EmptyAt(TypeExpr::Unit)
                }
            }
            TypeVarRole::Key { levels, targets } => {
                if levels.iter().all(|l| sees(l)) || targets.iter().any(|t| sees(t)) {
                    RelDescriptor::FullAt(TypeExpr::Unit)
                } else {
                    RelDescriptor::EmptyAt(TypeExpr::Unit)
                }
            }
            TypeVarRole::Payload {
                levels,
                releases,
                carrier,
                group,
            } => {
                let visible: Vec<&String> = releases
                    .iter()
                    .filter(|(_, t)| sees(t))
                    .map(|(f, _)| f)
                    .collect();
                if levels.iter().all(|l| sees(l)) {
                    RelDescriptor::Id(carrier.clone())
                } else if visible.is_empty() {
                    RelDescriptor::FullAt(carrier.clone())
                } else if *group {
                    RelDescriptor::DecTuple(lookup_fn(&p.fns, visible[0])?.clone())
                } else {
                    RelDescriptor::ViaFns(
                        visible
                            .iter()
                            .map(|f| lookup_fn(&p.fns, f).cloned())
                            .collect::<Result<_, _>>()?,
                    )
                }
            }
            other => {
                return Err(OracleError::Precondition(format!(
                    "{var} ({other:?}) does not belong to a multi-level policy"
                )))
            }
        };
        types.insert(var.clone(), desc);
    }
    Ok(RelEnv {
        types,
        terms: pinned_terms(views),
    })
}

/// The set of substitution pairs to sweep, stored per input so that each
/// side's substitution can be evaluated once and shared by many pairs.
struct SubstitutionSpace {
    names: Vec<String>,
    values: Vec<Vec<TermExpr>>,
    pairs: Vec<Vec<(usize, usize)>>,
    groups: Vec<(GroupView, TypeExpr, Vec<usize>)>,
    total_pairs: usize,
    total_sides: usize,
}

impl SubstitutionSpace {
    fn build(
        relator: &Relator,
        views: &ViewPair,
        env: &RelEnv,
        only: Option<&BTreeSet<String>>,
    ) -> Result<Self, OracleError> {
        let mut relevant: BTreeSet<String> = match only {
            Some(set) => set.clone(),
            None => views
                .inputs
                .iter()
                .chain(views.groups.iter().map(|g| &g.var))
                .cloned()
                .collect(),
        };
        // A group constrains its members, so members of a relevant group are
        // relevant, and a group with a relevant member is relevant.
        loop {
            let before = relevant.len();
            for g in &views.groups {
                if relevant.contains(&g.var) || g.members.iter().any(|m| relevant.contains(m)) {
                    relevant.insert(g.var.clone());
                    relevant.extend(g.members.iter().cloned());
                }
            }
            if relevant.len() == before {
                break;
            }
        }
        let mut names: Vec<String> = views
            .inputs
            .iter()
            .filter(|x| relevant.contains(*x))
            .cloned()
            .collect();
        names.sort();
        let mut values = Vec::new();
        let mut pairs = Vec::new();
        let mut total_pairs = 1usize;
        let mut total_sides = 1usize;
        for x in &names {
            let ty = &views.public_gamma[x];
            let related = relator.enumerate_related_pairs(env, ty)?;
            let mut distinct: Vec<TermExpr> = Vec::new();
            let mut index: HashMap<TermExpr, usize> = HashMap::new();
            let mut idx_pairs = Vec::with_capacity(related.len());
            for (a, b) in related {
                let mut id = |v: TermExpr| {
                    *index.entry(v.clone()).or_insert_with(|| {
                        distinct.push(v);
                        distinct.len() - 1
                    })
                };
                let ia = id(a);
                let ib = id(b);
                idx_pairs.push((ia, ib));
            }
            total_pairs = total_pairs.saturating_mul(idx_pairs.len());
            total_sides = total_sides.saturating_mul(distinct.len());
            values.push(distinct);
            pairs.push(idx_pairs);
        }
        let limit = relator.budget.max_pairs;
        if total_pairs > limit || total_sides > limit {
            return Err(OracleError::BudgetExceeded(format!(
                "{total_pairs} substitution pairs over {} exceed the limit of {limit}",
                relator.domain
            )));
        }
        let groups = views
            .groups
            .iter()
            .filter(|g| relevant.contains(&g.var))
            .map(|g| {
                let positions = g
                    .members
                    .iter()
                    .map(|m| {
                        names
                            .iter()
                            .position(|n| n == m)
                            .expect("members are relevant inputs")
                    })
                    .collect();
                (g.clone(), views.public_gamma[&g.var].clone(), positions)
            })
            .collect();
        Ok(SubstitutionSpace {
            names,
            values,
            pairs,
            groups,
            total_pairs,
            total_sides,
        })
    }

    /// Value indices of the `k`-th pair, the first input varying slowest.
    fn pair_at(&self, mut k: usize) -> (Vec<usize>, Vec<usize>) {
        let n = self.names.len();
        let mut left = vec![0; n];
        let mut right = vec![0; n];
        for i in (0..n).rev() {
            let m = self.pairs[i].len();
            let (a, b) = self.pairs[i][k % m];
            left[i] = a;
            right[i] = b;
            k /= m;
        }
        (left, right)
    }

    fn side_index(&self, side: &[usize]) -> usize {
        side.iter()
            .zip(&self.values)
            .fold(0, |acc, (&i, vs)| acc * vs.len() + i)
    }

    fn side_from_index(&self, mut k: usize) -> Vec<usize> {
        let mut out = vec![0; self.names.len()];
        for i in (0..self.names.len()).rev() {
            let m = self.values[i].len();
            out[i] = k % m;
            k /= m;
        }
        out
    }

    fn group_value(group: &GroupView, members: Vec<TermExpr>) -> TermExpr {
        if group.keyed {
            let forced = members
                .into_iter()
                .map(|m| TermExpr::app(m, TermExpr::Unit))
                .collect();
            TermExpr::constant_wrapper(TermExpr::tuple(forced))
        } else {
            TermExpr::tuple(members)
        }
    }

    fn substitution(&self, side: &[usize]) -> IndexMap<String, TermExpr> {
        let mut out: IndexMap<String, TermExpr> = self
            .names
            .iter()
            .zip(side)
            .enumerate()
            .map(|(i, (n, &j))| (n.clone(), self.values[i][j].clone()))
            .collect();
        for (g, _, positions) in &self.groups {
            let members = positions
                .iter()
                .map(|&p| self.values[p][side[p]].clone())
                .collect();
            out.insert(g.var.clone(), Self::group_value(g, members));
        }
        out
    }

    /// Whether the synthesised group values are related.
    fn groups_related(
        &self,
        relator: &Relator,
        env: &RelEnv,
        left: &[usize],
        right: &[usize],
    ) -> Result<bool, OracleError> {
        for (g, ty, positions) in &self.groups {
            let l = Self::group_value(
                g,
                positions
                    .iter()
                    .map(|&p| self.values[p][left[p]].clone())
                    .collect(),
            );
            let r = Self::group_value(
                g,
                positions
                    .iter()
                    .map(|&p| self.values[p][right[p]].clone())
                    .collect(),
            );
            if !relator.related_values(env, ty, &l, &r)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// All substitution pairs in sweep order: inputs sorted by name, the first
/// varying slowest, each input's related pairs in descending value order.
/// Group variables are assembled from their members and pairs whose groups
/// are unrelated are dropped.
pub fn enumerate_substitution_pairs(
    relator: &Relator,
    views: &ViewPair,
    env: &RelEnv,
) -> Result<Vec<SubstitutionPair>, OracleError> {
    let space = SubstitutionSpace::build(relator, views, env, None)?;
    let mut out = Vec::new();
    for k in 0..space.total_pairs {
        let (l, r) = space.pair_at(k);
        if space.groups_related(relator, env, &l, &r)? {
            out.push(SubstitutionPair {
                left: space.substitution(&l),
                right: space.substitution(&r),
            });
        }
    }
    Ok(out)
}

enum Step {
    Skip,
    Ok,
    Fail(Mismatch),
}

fn sweep(
    relator: &Relator,
    views: &ViewPair,
    env: &RelEnv,
    body: &TermExpr,
    at: &TypeExpr,
    observer: Option<&str>,
) -> Result<Verdict, OracleError> {
    let relevant: BTreeSet<String> = body.free_vars();
    let space = SubstitutionSpace::build(relator, views, env, Some(&relevant))?;
    let closed = apply_term_subst(body, views.pinned.iter());
    let outcomes: Vec<Outcome> = (0..space.total_sides)
        .into_par_iter()
        .map(|k| {
            relator.run(&apply_term_subst(
                &closed,
                space.substitution(&space.side_from_index(k)).iter(),
            ))
        })
        .collect::<Result<_, _>>()?;

    let check = |k: usize| -> Result<Step, OracleError> {
        let (l, r) = space.pair_at(k);
        if !space.groups_related(relator, env, &l, &r)? {
            return Ok(Step::Skip);
        }
        let o1 = &outcomes[space.side_index(&l)];
        let o2 = &outcomes[space.side_index(&r)];
        Ok(match relator.outcome_mismatch(env, at, o1, o2)? {
            None => Step::Ok,
            Some(m) => Step::Fail(m),
        })
    };
    let first_failure = (0..space.total_pairs)
        .into_par_iter()
        .map(check)
        .enumerate()
        .find_first(|(_, s)| !matches!(s, Ok(Step::Ok) | Ok(Step::Skip)));
    match first_failure {
        Some((_, Err(e))) => Err(e),
        Some((k, Ok(Step::Fail(m)))) => {
            let (mut l, mut r) = space.pair_at(k);
            let mut m = m;
            let gl = space.substitution(&l);
            let gr = space.substitution(&r);
            // Relations are symmetric, so report the orientation with the
            // smaller left substitution.
            if compare_substitutions(&gl, &gr) == Ordering::Greater {
                let o1 = &outcomes[space.side_index(&r)];
                let o2 = &outcomes[space.side_index(&l)];
                if let Some(swapped) = relator.outcome_mismatch(env, at, o1, o2)? {
                    std::mem::swap(&mut l, &mut r);
                    m = swapped;
                }
            }
            Ok(Verdict::Fail(Box::new(Counterexample {
                observer: observer.map(str::to_string),
                gamma_left: space.substitution(&l),
                gamma_right: space.substitution(&r),
                out_left: outcomes[space.side_index(&l)].clone(),
                out_right: outcomes[space.side_index(&r)].clone(),
                at_type: at.clone(),
                clause: m.clause.to_string(),
                detail: m.detail,
            })))
        }
        Some((_, Ok(_))) => unreachable!("find_first only stops on failures"),
        None => {
            let mut tested = 0usize;
            for k in 0..space.total_pairs {
                let (l, r) = space.pair_at(k);
                if space.groups_related(relator, env, &l, &r)? {
                    tested += 1;
                }
            }
            Ok(Verdict::Pass(tested))
        }
    }
}

fn integers_of(v: &TermExpr, out: &mut Vec<BigInt>) {
    if let TermExpr::Int(n) = v {
        out.push(n.clone());
    }
    for c in v.children() {
        integers_of(c, out);
    }
}

fn compare_substitutions(
    a: &IndexMap<String, TermExpr>,
    b: &IndexMap<String, TermExpr>,
) -> Ordering {
    let flat = |m: &IndexMap<String, TermExpr>| {
        let mut out = Vec::new();
        for v in m.values() {
            integers_of(v, &mut out);
        }
        out
    };
    flat(a).cmp(&flat(b))
}

/// Checks that `at` is well formed publicly and that the collapsed program has
/// the collapsed type in the confidential view. Returns the collapsed program.
pub fn preconditions(
    p: &Policy,
    views: &ViewPair,
    e: &TermExpr,
    at: &TypeExpr,
) -> Result<TermExpr, OracleError> {
    check_wf_type(&views.public_delta, at).map_err(|err| {
        OracleError::Precondition(format!(
            "type {at} is not well formed in the public view: {}",
            err.message
        ))
    })?;
    if !p.is_multilevel() && e.mentions_type_vars() {
        return Err(OracleError::Precondition(
            "the program must not mention type variables for a policy without levels".into(),
        ));
    }
    let body = apply_type_subst(e, &views.delta);
    let want = views.collapse(at);
    match infer_type(&TypeContext::new(), &views.confidential, &body) {
        Ok(t) if t.alpha_eq(&want) => Ok(body),
        Ok(t) => Err(OracleError::Precondition(format!(
            "the program has type {t} in the confidential view, expected {want}"
        ))),
        Err(err) => Err(OracleError::Precondition(format!(
            "the program does not typecheck in the confidential view: {err}"
        ))),
    }
}

fn unsupported_or(result: Result<Verdict, OracleError>) -> Result<Verdict, OracleError> {
    match result {
        Err(e) if e.is_unsupported() => Ok(Verdict::Unsupported(e.to_string())),
        other => other,
    }
}

/// Checks by enumeration that `e` maps related inputs to results related
/// at `at`. For a multi-level policy without an observer in `opts`, every
/// observer is checked and the first failure is returned.
pub fn semantic_trni(
    p: &Policy,
    e: &TermExpr,
    at: &TypeExpr,
    opts: &OracleOptions,
) -> Result<Verdict, OracleError> {
    match p {
        Policy::MultiLevel(_) if opts.observer.is_none() => {
            let mut total = 0usize;
            for (_, verdict) in semantic_trni_per_observer(p, e, at, opts)? {
                match verdict {
                    Verdict::Pass(n) => total += n,
                    other => return Ok(other),
                }
            }
            Ok(Verdict::Pass(total))
        }
        _ => {
            let views = encode(p)?;
            let body = preconditions(p, &views, e, at)?;
            let relator = Relator::new(opts.domain, opts.budget);
            let env = match (p, &opts.observer) {
                (Policy::MultiLevel(m), Some(obs)) => observer_env(m, &views, obs)?,
                _ => rho_pol(p, &views)?,
            };
            unsupported_or(sweep(
                &relator,
                &views,
                &env,
                &body,
                at,
                opts.observer.as_deref(),
            ))
        }
    }
}

/// One verdict per observer level of a multi-level policy, lowest first.
pub fn semantic_trni_per_observer(
    p: &Policy,
    e: &TermExpr,
    at: &TypeExpr,
    opts: &OracleOptions,
) -> Result<Vec<(String, Verdict)>, OracleError> {
    let Policy::MultiLevel(m) = p else {
        return Ok(vec![(String::new(), semantic_trni(p, e, at, opts)?)]);
    };
    let views = encode(p)?;
    let body = preconditions(p, &views, e, at)?;
    let relator = Relator::new(opts.domain, opts.budget);
    let mut out = Vec::new();
    for level in m.lattice.topo_order() {
        let env = observer_env(m, &views, level)?;
        out.push((
            level.clone(),
            unsupported_or(sweep(&relator, &views, &env, &body, at, Some(level)))?,
        ));
    }
    Ok(out)
}

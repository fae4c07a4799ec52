//! Declassification policies: which inputs may be released, through which
//! functions, and (for multi-level policies) to which observer levels.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::{IndexMap, IndexSet};
use thiserror::Error;

use crate::lang::{TermExpr, TypeExpr};
use crate::typecheck::{infer_type, TermContext, TypeContext, TypeError};

/// A named release function `fn name (param : param_type) -> result_type = body`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Declassifier {
    pub name: String,
    pub param: String,
    pub param_type: TypeExpr,
    pub body: TermExpr,
    pub result_type: TypeExpr,
}

impl Declassifier {
    /// The declassifier as a closed lambda.
    pub fn as_lambda(&self) -> TermExpr {
        TermExpr::lam(
            self.param.clone(),
            self.param_type.clone(),
            self.body.clone(),
        )
    }

    /// `param_type -> result_type`.
    pub fn signature(&self) -> TypeExpr {
        TypeExpr::arrow(self.param_type.clone(), self.result_type.clone())
    }
}

/// Several inputs released together through one function over their tuple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupDecl {
    pub group_var: String,
    pub members: Vec<String>,
    pub via: String,
    /// Target level; only meaningful in multi-level policies.
    pub target: Option<String>,
}

/// States that `target = base ∘ adapter` as functions on integers, so that an
/// input released through `target` may be turned into a value released
/// through `base`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquivWitness {
    pub target: String,
    pub base: String,
    pub adapter: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SimplePolicy {
    pub name: String,
    pub inputs: Vec<String>,
    /// Declassifiers allowed for each declassifiable input, in order.
    pub declass: IndexMap<String, Vec<String>>,
    pub groups: Vec<GroupDecl>,
    pub equivs: Vec<EquivWitness>,
    pub fns: IndexMap<String, Declassifier>,
}

impl SimplePolicy {
    pub fn declassifiers_of(&self, input: &str) -> &[String] {
        self.declass.get(input).map(Vec::as_slice).unwrap_or(&[])
    }
}

/// A finite partial order of security levels, lowest first in `topo_order`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelLattice {
    levels: Vec<String>,
    edges: Vec<(String, String)>,
    below: BTreeMap<String, BTreeSet<String>>,
    topo: Vec<String>,
}

impl LevelLattice {
    /// Builds the order from declared levels and `lower < higher` edges,
    /// rejecting unknown endpoints and cycles.
    pub fn new(levels: Vec<String>, edges: Vec<(String, String)>) -> Result<Self, PolicyError> {
        let known: IndexSet<&String> = levels.iter().collect();
        for (lo, hi) in &edges {
            for l in [lo, hi] {
                if !known.contains(l) {
                    return Err(PolicyError::UnknownLevel { level: l.clone() });
                }
            }
        }
        // Reflexive-transitive closure: below[l] = every level <= l.
        let mut below: BTreeMap<String, BTreeSet<String>> = levels
            .iter()
            .map(|l| (l.clone(), BTreeSet::from([l.clone()])))
            .collect();
        loop {
            let mut changed = false;
            for (lo, hi) in &edges {
                let add: Vec<String> = below[lo].iter().cloned().collect();
                let set = below.get_mut(hi).expect("known level");
                for l in add {
                    changed |= set.insert(l);
                }
            }
            if !changed {
                break;
            }
        }
        for (lo, hi) in &edges {
            if below[lo].contains(hi) {
                return Err(PolicyError::CyclicOrder {
                    levels: vec![lo.clone(), hi.clone()],
                });
            }
        }
        // Kahn's algorithm, ties broken by declaration order.
        let mut topo = Vec::with_capacity(levels.len());
        let mut placed = BTreeSet::new();
        while topo.len() < levels.len() {
            let next = levels
                .iter()
                .find(|l| {
                    !placed.contains(*l) && below[*l].iter().all(|m| m == *l || placed.contains(m))
                })
                .expect("acyclic order has a minimal element")
                .clone();
            placed.insert(next.clone());
            topo.push(next);
        }
        Ok(LevelLattice {
            levels,
            edges,
            below,
            topo,
        })
    }

    /// Levels in declaration order.
    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    /// Levels ordered so that every level comes after the levels below it.
    pub fn topo_order(&self) -> &[String] {
        &self.topo
    }

    pub fn contains(&self, level: &str) -> bool {
        self.below.contains_key(level)
    }

    /// `lo ⊑ hi`.
    pub fn leq(&self, lo: &str, hi: &str) -> Result<bool, PolicyError> {
        if !self.contains(lo) {
            return Err(PolicyError::UnknownLevel {
                level: lo.to_string(),
            });
        }
        self.below
            .get(hi)
            .map(|set| set.contains(lo))
            .ok_or_else(|| PolicyError::UnknownLevel {
                level: hi.to_string(),
            })
    }

    /// Every pair `(lo, hi)` with `lo ⊏ hi`, in topological order.
    pub fn strict_pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for lo in &self.topo {
            for hi in &self.topo {
                if lo != hi && self.below[hi].contains(lo) {
                    out.push((lo.clone(), hi.clone()));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiLevelPolicy {
    pub name: String,
    pub lattice: LevelLattice,
    pub inputs: Vec<String>,
    pub lvl: IndexMap<String, String>,
    /// For each declassifiable input, its declassifiers with target levels.
    pub declass: IndexMap<String, Vec<(String, String)>>,
    pub fns: IndexMap<String, Declassifier>,
    pub groups: Vec<GroupDecl>,
}

impl MultiLevelPolicy {
    pub fn level_of(&self, input: &str) -> Option<&str> {
        self.lvl.get(input).map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Policy {
    Simple(SimplePolicy),
    MultiLevel(MultiLevelPolicy),
}

impl Policy {
    pub fn name(&self) -> &str {
        match self {
            Policy::Simple(p) => &p.name,
            Policy::MultiLevel(p) => &p.name,
        }
    }

    pub fn fns(&self) -> &IndexMap<String, Declassifier> {
        match self {
            Policy::Simple(p) => &p.fns,
            Policy::MultiLevel(p) => &p.fns,
        }
    }

    pub fn is_multilevel(&self) -> bool {
        matches!(self, Policy::MultiLevel(_))
    }
}

/// A reason a policy is rejected.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("declassifier {name} mentions free variable(s) {}", free.join(", "))]
    OpenDeclassifier { name: String, free: Vec<String> },
    #[error("declassifier {name} does not typecheck: {error}")]
    DeclassifierTypeError { name: String, error: Box<TypeError> },
    #[error("declassifier {name} has type {found}, declared {declared}")]
    DeclassifierResultMismatch {
        name: String,
        declared: String,
        found: String,
    },
    #[error("declassifier {name} has a signature with free type variables")]
    OpenSignature { name: String },
    #[error("declassifier {name} takes {found} but is used on {expected}")]
    ParamTypeMismatch {
        name: String,
        expected: String,
        found: String,
    },
    #[error("unknown declassifier {name} (used by {used_by})")]
    UnknownDeclassifier { name: String, used_by: String },
    #[error("unknown input {name} (referenced by {used_by})")]
    UnknownInput { name: String, used_by: String },
    #[error("{what} {name} is declared more than once")]
    Duplicate { what: &'static str, name: String },
    #[error("group member {member} of {group} also has its own declassifiers")]
    GroupMemberDeclassified { group: String, member: String },
    #[error("group {group} needs at least two members")]
    GroupTooSmall { group: String },
    #[error("equivalence {target} = {base} compose {adapter} is ill-typed: {reason}")]
    EquivTypeMismatch {
        target: String,
        base: String,
        adapter: String,
        reason: String,
    },
    #[error("equivalence {target} = {base} compose {adapter}: {reason}")]
    EquivUnusable {
        target: String,
        base: String,
        adapter: String,
        reason: String,
    },
    #[error("input {input} at {level} cannot be declassified to {target}, which is already at or above its level")]
    DowngradeConstraint {
        input: String,
        level: String,
        target: String,
    },
    #[error("unknown security level {level}")]
    UnknownLevel { level: String },
    #[error("{what} {name} needs a security level")]
    MissingLevel { what: &'static str, name: String },
    #[error("levels are only allowed in policies with a lattice ({name})")]
    LevelWithoutLattice { name: String },
    #[error("the security order has a cycle through {}", levels.join(", "))]
    CyclicOrder { levels: Vec<String> },
    #[error("generated name {name} is produced both by {first} and by {second}")]
    NameCollision {
        name: String,
        first: String,
        second: String,
    },
    #[error("{0}")]
    Unsupported(String),
}

impl PolicyError {
    /// Stable diagnostic code.
    pub fn code(&self) -> &'static str {
        match self {
            PolicyError::OpenDeclassifier { .. } => "OpenDeclassifier",
            PolicyError::DeclassifierTypeError { .. } => "DeclassifierTypeError",
            PolicyError::DeclassifierResultMismatch { .. } => "DeclassifierResultMismatch",
            PolicyError::OpenSignature { .. } => "OpenSignature",
            PolicyError::ParamTypeMismatch { .. } => "ParamTypeMismatch",
            PolicyError::UnknownDeclassifier { .. } => "UnknownDeclassifier",
            PolicyError::UnknownInput { .. } => "UnknownInput",
            PolicyError::Duplicate { .. } => "Duplicate",
            PolicyError::GroupMemberDeclassified { .. } => "GroupMemberDeclassified",
            PolicyError::GroupTooSmall { .. } => "GroupTooSmall",
            PolicyError::EquivTypeMismatch { .. } => "EquivTypeMismatch",
            PolicyError::EquivUnusable { .. } => "EquivUnusable",
            PolicyError::DowngradeConstraint { .. } => "DowngradeConstraint",
            PolicyError::UnknownLevel { .. } => "UnknownLevel",
            PolicyError::MissingLevel { .. } => "MissingLevel",
            PolicyError::LevelWithoutLattice { .. } => "LevelWithoutLattice",
            PolicyError::CyclicOrder { .. } => "CyclicOrder",
            PolicyError::NameCollision { .. } => "NameCollision",
            PolicyError::Unsupported(_) => "Unsupported",
        }
    }

    /// The declaration the error is about, as `(kind, name)`, for locating it
    /// in a source file.
    pub fn subject(&self) -> Option<(&'static str, &str)> {
        match self {
            PolicyError::OpenDeclassifier { name, .. }
            | PolicyError::DeclassifierTypeError { name, .. }
            | PolicyError::DeclassifierResultMismatch { name, .. }
            | PolicyError::OpenSignature { name } => Some(("fn", name)),
            PolicyError::UnknownDeclassifier { used_by, .. }
            | PolicyError::UnknownInput { used_by, .. } => Some(("any", used_by)),
            PolicyError::DowngradeConstraint { input, .. } => Some(("any", input)),
            PolicyError::GroupMemberDeclassified { group, .. }
            | PolicyError::GroupTooSmall { group } => Some(("group", group)),
            PolicyError::EquivTypeMismatch { target, .. }
            | PolicyError::EquivUnusable { target, .. } => Some(("equiv", target)),
            PolicyError::MissingLevel { name, .. } | PolicyError::LevelWithoutLattice { name } => {
                Some(("any", name))
            }
            _ => None,
        }
    }
}

/// Checks a declassifier in isolation: closed body, closed signature, and a
/// body whose type matches the declared result.
pub fn validate_declassifier(d: &Declassifier) -> Vec<PolicyError> {
    let mut errs = Vec::new();
    if !d.param_type.is_closed() || !d.result_type.is_closed() {
        errs.push(PolicyError::OpenSignature {
            name: d.name.clone(),
        });
    }
    let free: Vec<String> = d
        .body
        .free_vars()
        .into_iter()
        .filter(|v| *v != d.param)
        .collect();
    if !free.is_empty() {
        errs.push(PolicyError::OpenDeclassifier {
            name: d.name.clone(),
            free,
        });
        return errs;
    }
    let gamma: TermContext = [(d.param.clone(), d.param_type.clone())]
        .into_iter()
        .collect();
    match infer_type(&TypeContext::new(), &gamma, &d.body) {
        Ok(t) if t.alpha_eq(&d.result_type) => {}
        Ok(t) => errs.push(PolicyError::DeclassifierResultMismatch {
            name: d.name.clone(),
            declared: d.result_type.to_string(),
            found: t.to_string(),
        }),
        Err(error) => errs.push(PolicyError::DeclassifierTypeError {
            name: d.name.clone(),
            error: Box::new(error),
        }),
    }
    errs
}

/// All problems with a policy; empty when the policy is valid.
pub fn validate_policy(p: &Policy) -> Vec<PolicyError> {
    let mut errs = match p {
        Policy::Simple(s) => validate_simple(s),
        Policy::MultiLevel(m) => validate_multilevel(m),
    };
    if errs.is_empty() {
        if let Err(e) = crate::views::encode(p) {
            errs.push(e);
        }
    }
    errs
}

fn check_duplicates(inputs: &[String], errs: &mut Vec<PolicyError>) {
    let mut seen = BTreeSet::new();
    for x in inputs {
        if !seen.insert(x) {
            errs.push(PolicyError::Duplicate {
                what: "input",
                name: x.clone(),
            });
        }
    }
}

fn check_fns(fns: &IndexMap<String, Declassifier>, errs: &mut Vec<PolicyError>) {
    for d in fns.values() {
        errs.extend(validate_declassifier(d));
    }
}

fn require_fn<'a>(
    fns: &'a IndexMap<String, Declassifier>,
    name: &str,
    used_by: &str,
    param: &TypeExpr,
    errs: &mut Vec<PolicyError>,
) -> Option<&'a Declassifier> {
    match fns.get(name) {
        None => {
            errs.push(PolicyError::UnknownDeclassifier {
                name: name.into(),
                used_by: used_by.into(),
            });
            None
        }
        Some(d) if !d.param_type.alpha_eq(param) => {
            errs.push(PolicyError::ParamTypeMismatch {
                name: name.into(),
                expected: param.to_string(),
                found: d.param_type.to_string(),
            });
            None
        }
        Some(d) => Some(d),
    }
}

fn check_groups(
    groups: &[GroupDecl],
    inputs: &[String],
    individually_declassified: impl Fn(&str) -> bool,
    fns: &IndexMap<String, Declassifier>,
    errs: &mut Vec<PolicyError>,
) {
    let mut seen = BTreeSet::new();
    for g in groups {
        if !seen.insert(&g.group_var) {
            errs.push(PolicyError::Duplicate {
                what: "group",
                name: g.group_var.clone(),
            });
        }
        if g.members.len() < 2 {
            errs.push(PolicyError::GroupTooSmall {
                group: g.group_var.clone(),
            });
        }
        for m in &g.members {
            if !inputs.contains(m) {
                errs.push(PolicyError::UnknownInput {
                    name: m.clone(),
                    used_by: g.group_var.clone(),
                });
            } else if individually_declassified(m) {
                errs.push(PolicyError::GroupMemberDeclassified {
                    group: g.group_var.clone(),
                    member: m.clone(),
                });
            }
        }
        require_fn(
            fns,
            &g.via,
            &g.group_var,
            &TypeExpr::int_tuple(g.members.len()),
            errs,
        );
    }
}

fn validate_simple(p: &SimplePolicy) -> Vec<PolicyError> {
    let mut errs = Vec::new();
    check_duplicates(&p.inputs, &mut errs);
    check_fns(&p.fns, &mut errs);
    for (x, fs) in &p.declass {
        if !p.inputs.contains(x) {
            errs.push(PolicyError::UnknownInput {
                name: x.clone(),
                used_by: x.clone(),
            });
        }
        for f in fs {
            require_fn(&p.fns, f, x, &TypeExpr::Int, &mut errs);
        }
    }
    check_groups(
        &p.groups,
        &p.inputs,
        |m| !p.declassifiers_of(m).is_empty(),
        &p.fns,
        &mut errs,
    );
    for w in &p.equivs {
        let mk = |reason: String| PolicyError::EquivTypeMismatch {
            target: w.target.clone(),
            base: w.base.clone(),
            adapter: w.adapter.clone(),
            reason,
        };
        let g = require_fn(&p.fns, &w.target, &w.target, &TypeExpr::Int, &mut errs);
        let f = require_fn(&p.fns, &w.base, &w.target, &TypeExpr::Int, &mut errs);
        let a = require_fn(&p.fns, &w.adapter, &w.target, &TypeExpr::Int, &mut errs);
        if let (Some(g), Some(f), Some(a)) = (g, f, a) {
            if a.result_type != TypeExpr::Int {
                errs.push(mk(format!("adapter {} must return int", a.name)));
            }
            if !g.result_type.alpha_eq(&f.result_type) {
                errs.push(mk(format!(
                    "{} returns {} but {} returns {}",
                    g.name, g.result_type, f.name, f.result_type
                )));
            }
        }
        let unusable = |reason: &str| PolicyError::EquivUnusable {
            target: w.target.clone(),
            base: w.base.clone(),
            adapter: w.adapter.clone(),
            reason: reason.to_string(),
        };
        if !p.declass.values().any(|fs| fs.contains(&w.target)) {
            errs.push(unusable(
                "no input is declassified through the target function",
            ));
        }
        if !p
            .declass
            .values()
            .any(|fs| fs.len() == 1 && fs[0] == w.base)
        {
            errs.push(unusable(
                "no input is declassified through the base function alone",
            ));
        }
    }
    errs
}

fn validate_multilevel(p: &MultiLevelPolicy) -> Vec<PolicyError> {
    let mut errs = Vec::new();
    check_duplicates(&p.inputs, &mut errs);
    check_fns(&p.fns, &mut errs);
    let level_ok = |l: &str, errs: &mut Vec<PolicyError>| {
        let ok = p.lattice.contains(l);
        if !ok {
            errs.push(PolicyError::UnknownLevel {
                level: l.to_string(),
            });
        }
        ok
    };
    for x in &p.inputs {
        match p.lvl.get(x) {
            None => errs.push(PolicyError::MissingLevel {
                what: "input",
                name: x.clone(),
            }),
            Some(l) => {
                level_ok(l, &mut errs);
            }
        }
    }
    for (x, targets) in &p.declass {
        if !p.inputs.contains(x) {
            errs.push(PolicyError::UnknownInput {
                name: x.clone(),
                used_by: x.clone(),
            });
            continue;
        }
        for (f, target) in targets {
            require_fn(&p.fns, f, x, &TypeExpr::Int, &mut errs);
            if level_ok(target, &mut errs) {
                if let Some(l) = p.lvl.get(x).filter(|l| p.lattice.contains(l)) {
                    if p.lattice.leq(l, target).unwrap_or(false) {
                        errs.push(PolicyError::DowngradeConstraint {
                            input: x.clone(),
                            level: l.clone(),
                            target: target.clone(),
                        });
                    }
                }
            }
        }
    }
    check_groups(
        &p.groups,
        &p.inputs,
        |m| p.declass.contains_key(m),
        &p.fns,
        &mut errs,
    );
    for g in &p.groups {
        let Some(target) = &g.target else {
            errs.push(PolicyError::MissingLevel {
                what: "group",
                name: g.group_var.clone(),
            });
            continue;
        };
        if !level_ok(target, &mut errs) {
            continue;
        }
        for m in &g.members {
            if let Some(l) = p.lvl.get(m).filter(|l| p.lattice.contains(l)) {
                if p.lattice.leq(l, target).unwrap_or(false) {
                    errs.push(PolicyError::DowngradeConstraint {
                        input: g.group_var.clone(),
                        level: l.clone(),
                        target: target.clone(),
                    });
                }
            }
        }
    }
    errs
}

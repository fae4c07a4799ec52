//! Encodes a policy as a pair of typing views: the confidential view, where
//! every input is a plain integer, and the public view, where inputs are
//! abstract and only the declared release functions expose information.

use indexmap::IndexMap;

use crate::lang::subst::substitute_term;
use crate::lang::{TermExpr, TypeExpr, TypeSubst};
use crate::policy::{Declassifier, GroupDecl, MultiLevelPolicy, Policy, PolicyError, SimplePolicy};
use crate::typecheck::{TermContext, TypeContext};

/// What a public type variable stands for; determines its relational
/// interpretation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeVarRole {
    /// A non-declassifiable input: nothing about it may be observed.
    Opaque { input: String },
    /// Inputs released through all of the listed functions.
    Released { fns: Vec<String> },
    /// A tuple of inputs released through one function.
    Group { via: String, arity: usize },
    /// The key type of a security level.
    Level(String),
    /// The key of a declassifiable input (or group) living at `levels`,
    /// released to the `targets` levels.
    Key {
        levels: Vec<String>,
        targets: Vec<String>,
    },
    /// The payload of a keyed declassifiable input (or group).
    Payload {
        levels: Vec<String>,
        releases: Vec<(String, String)>,
        carrier: TypeExpr,
        group: bool,
    },
}

/// A group variable whose value is assembled from its members.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupView {
    pub var: String,
    pub members: Vec<String>,
    /// Members and group are keyed functions `key -> payload`.
    pub keyed: bool,
}

/// The confidential and public typing views of a policy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewPair {
    pub confidential: TermContext,
    pub public_delta: TypeContext,
    pub public_gamma: TermContext,
    /// Variables with a fixed implementation shared by both runs.
    pub pinned: IndexMap<String, TermExpr>,
    /// Concrete type of each public type variable.
    pub delta: TypeSubst,
    pub roles: IndexMap<String, TypeVarRole>,
    pub groups: Vec<GroupView>,
    /// Variables that range over secret values.
    pub inputs: Vec<String>,
}

impl ViewPair {
    /// Applies the public-to-confidential collapse to a type.
    pub fn collapse(&self, t: &TypeExpr) -> TypeExpr {
        t.substitute_all(&self.delta)
    }

    pub fn group(&self, var: &str) -> Option<&GroupView> {
        self.groups.iter().find(|g| g.var == var)
    }
}

/// The substitution sending each public type variable to its concrete type.
pub fn delta_pol(views: &ViewPair) -> TypeSubst {
    views.delta.clone()
}

pub fn encode(p: &Policy) -> Result<ViewPair, PolicyError> {
    match p {
        Policy::Simple(s) => encode_simple(s),
        Policy::MultiLevel(m) => encode_multilevel(m),
    }
}

#[derive(Default)]
struct Builder {
    views: ViewPairParts,
    type_origin: IndexMap<String, String>,
    term_origin: IndexMap<String, String>,
}

#[derive(Default)]
struct ViewPairParts {
    confidential: TermContext,
    public_delta: TypeContext,
    public_gamma: TermContext,
    pinned: IndexMap<String, TermExpr>,
    delta: TypeSubst,
    roles: IndexMap<String, TypeVarRole>,
    groups: Vec<GroupView>,
    inputs: Vec<String>,
}

impl Builder {
    fn type_var(
        &mut self,
        name: String,
        role: TypeVarRole,
        concrete: TypeExpr,
        origin: &str,
    ) -> Result<TypeExpr, PolicyError> {
        if let Some(existing) = self.views.roles.get(&name) {
            if *existing == role {
                return Ok(TypeExpr::Var(name));
            }
            return Err(PolicyError::NameCollision {
                first: self.type_origin[&name].clone(),
                second: origin.to_string(),
                name,
            });
        }
        self.type_origin.insert(name.clone(), origin.to_string());
        self.views.public_delta.insert(name.clone());
        self.views.roles.insert(name.clone(), role);
        self.views.delta.insert(name.clone(), concrete);
        Ok(TypeExpr::Var(name))
    }

    fn claim(&mut self, name: &str, origin: &str) -> Result<(), PolicyError> {
        if let Some(first) = self.term_origin.get(name) {
            return Err(PolicyError::NameCollision {
                name: name.to_string(),
                first: first.clone(),
                second: origin.to_string(),
            });
        }
        self.term_origin
            .insert(name.to_string(), origin.to_string());
        Ok(())
    }

    fn term_var(
        &mut self,
        name: String,
        public: TypeExpr,
        confidential: TypeExpr,
        implementation: Option<TermExpr>,
        origin: &str,
    ) -> Result<(), PolicyError> {
        self.claim(&name, origin)?;
        self.views.public_gamma.insert(name.clone(), public);
        self.views.confidential.insert(name.clone(), confidential);
        match implementation {
            Some(imp) => {
                self.views.pinned.insert(name, imp);
            }
            None => {
                if !self.views.groups.iter().any(|g| g.var == name) {
                    self.views.inputs.push(name);
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> ViewPair {
        let v = self.views;
        ViewPair {
            confidential: v.confidential,
            public_delta: v.public_delta,
            public_gamma: v.public_gamma,
            pinned: v.pinned,
            delta: v.delta,
            roles: v.roles,
            groups: v.groups,
            inputs: v.inputs,
        }
    }
}

fn lookup<'a>(
    fns: &'a IndexMap<String, Declassifier>,
    name: &str,
    used_by: &str,
) -> Result<&'a Declassifier, PolicyError> {
    fns.get(name)
        .ok_or_else(|| PolicyError::UnknownDeclassifier {
            name: name.to_string(),
            used_by: used_by.to_string(),
        })
}

/// Encoding for policies without levels.
pub fn encode_simple(p: &SimplePolicy) -> Result<ViewPair, PolicyError> {
    let mut b = Builder::default();
    for x in &p.inputs {
        let fns = p.declassifiers_of(x);
        if fns.is_empty() {
            let origin = format!("input {x}");
            let a = b.type_var(
                format!("a_{x}"),
                TypeVarRole::Opaque { input: x.clone() },
                TypeExpr::Int,
                &origin,
            )?;
            b.term_var(x.clone(), a, TypeExpr::Int, None, &origin)?;
            continue;
        }
        let witnesses: Vec<_> = p
            .equivs
            .iter()
            .filter(|w| fns.contains(&w.target))
            .collect();
        let mut var_name = format!("a_{}", fns.join("_"));
        for w in &witnesses {
            var_name.push_str(&format!("_{}_{}", w.base, w.adapter));
        }
        let origin = format!("input {x}");
        let var = b.type_var(
            var_name,
            TypeVarRole::Released { fns: fns.to_vec() },
            TypeExpr::Int,
            &origin,
        )?;
        b.term_var(x.clone(), var.clone(), TypeExpr::Int, None, &origin)?;
        for f in fns {
            let d = lookup(&p.fns, f, x)?;
            b.term_var(
                format!("{x}_{f}"),
                TypeExpr::arrow(var.clone(), d.result_type.clone()),
                d.signature(),
                Some(d.as_lambda()),
                &format!("declassifier {f} of {x}"),
            )?;
        }
        for w in witnesses {
            let adapter = lookup(&p.fns, &w.adapter, x)?;
            // The base variable is the one shared by inputs released through
            // the base function alone.
            let base = TypeExpr::Var(format!("a_{}", w.base));
            b.term_var(
                format!("{x}_{}", w.adapter),
                TypeExpr::arrow(var.clone(), base),
                adapter.signature(),
                Some(adapter.as_lambda()),
                &format!("adapter {} of {x}", w.adapter),
            )?;
        }
    }
    for g in &p.groups {
        encode_simple_group(&mut b, p, g)?;
    }
    Ok(b.finish())
}

fn encode_simple_group(
    b: &mut Builder,
    p: &SimplePolicy,
    g: &GroupDecl,
) -> Result<(), PolicyError> {
    let d = lookup(&p.fns, &g.via, &g.group_var)?;
    let arity = g.members.len();
    let carrier = TypeExpr::int_tuple(arity);
    let origin = format!("group {}", g.group_var);
    let var = b.type_var(
        format!("a_{}", g.via),
        TypeVarRole::Group {
            via: g.via.clone(),
            arity,
        },
        carrier.clone(),
        &origin,
    )?;
    b.views.groups.push(GroupView {
        var: g.group_var.clone(),
        members: g.members.clone(),
        keyed: false,
    });
    b.term_var(g.group_var.clone(), var.clone(), carrier, None, &origin)?;
    b.term_var(
        format!("{}_{}", g.group_var, g.via),
        TypeExpr::arrow(var, d.result_type.clone()),
        d.signature(),
        Some(d.as_lambda()),
        &format!("declassifier {} of {}", g.via, g.group_var),
    )
}

fn v(name: &str) -> TypeExpr {
    TypeExpr::var(name)
}

fn thunk(t: TypeExpr) -> TypeExpr {
    TypeExpr::arrow(TypeExpr::Unit, t)
}

fn force(e: TermExpr) -> TermExpr {
    TermExpr::app(e, TermExpr::Unit)
}

/// `tfn b1 => tfn b2 => fn x:unit->b1 => fn f:b1->unit->b2 => f (x ())`
pub fn comp_impl() -> TermExpr {
    TermExpr::ty_lam(
        "b1",
        TermExpr::ty_lam(
            "b2",
            TermExpr::lam(
                "x",
                thunk(v("b1")),
                TermExpr::lam(
                    "f",
                    TypeExpr::arrow(v("b1"), thunk(v("b2"))),
                    TermExpr::app(TermExpr::var("f"), force(TermExpr::var("x"))),
                ),
            ),
        ),
    )
}

/// `tfn b => fn x:b => fn _:unit => x`
pub fn wrap_impl() -> TermExpr {
    TermExpr::ty_lam(
        "b",
        TermExpr::lam("x", v("b"), TermExpr::constant_wrapper(TermExpr::var("x"))),
    )
}

/// `tfn b => fn x:unit->b => x`
pub fn convup_impl() -> TermExpr {
    TermExpr::ty_lam("b", TermExpr::lam("x", thunk(v("b")), TermExpr::var("x")))
}

/// `fn x:unit->carrier => fn _:unit => body[(x ())/param]`
pub fn dec_impl(d: &Declassifier) -> TermExpr {
    let body = substitute_term(&d.body, &d.param, &force(TermExpr::var("x")));
    TermExpr::lam(
        "x",
        thunk(d.param_type.clone()),
        TermExpr::constant_wrapper(body),
    )
}

/// `fn x:unit->int => x`
pub fn conv_impl() -> TermExpr {
    TermExpr::lam("x", thunk(TypeExpr::Int), TermExpr::var("x"))
}

fn comp_type(level_var: &TypeExpr) -> TypeExpr {
    let keyed = |t: TypeExpr| TypeExpr::arrow(level_var.clone(), t);
    TypeExpr::forall(
        "b1",
        TypeExpr::forall(
            "b2",
            TypeExpr::arrow(
                keyed(v("b1")),
                TypeExpr::arrow(TypeExpr::arrow(v("b1"), keyed(v("b2"))), keyed(v("b2"))),
            ),
        ),
    )
}

fn wrap_type(level_var: &TypeExpr) -> TypeExpr {
    TypeExpr::forall(
        "b",
        TypeExpr::arrow(v("b"), TypeExpr::arrow(level_var.clone(), v("b"))),
    )
}

fn convup_type(lo: &TypeExpr, hi: &TypeExpr) -> TypeExpr {
    TypeExpr::forall(
        "b",
        TypeExpr::arrow(
            TypeExpr::arrow(lo.clone(), v("b")),
            TypeExpr::arrow(hi.clone(), v("b")),
        ),
    )
}

/// Encoding for policies over a lattice of levels. Every level gets an
/// abstract key type; a value at level `l` is a function from that key.
pub fn encode_multilevel(p: &MultiLevelPolicy) -> Result<ViewPair, PolicyError> {
    let mut b = Builder::default();
    let mut level_var = IndexMap::new();
    for l in p.lattice.topo_order() {
        let t = b.type_var(
            format!("a_{l}"),
            TypeVarRole::Level(l.clone()),
            TypeExpr::Unit,
            &format!("level {l}"),
        )?;
        level_var.insert(l.clone(), t);
    }
    let level_of = |x: &str| -> Result<String, PolicyError> {
        p.lvl
            .get(x)
            .cloned()
            .ok_or_else(|| PolicyError::MissingLevel {
                what: "input",
                name: x.to_string(),
            })
    };
    let lv = |l: &str| -> Result<TypeExpr, PolicyError> {
        level_var
            .get(l)
            .cloned()
            .ok_or_else(|| PolicyError::UnknownLevel {
                level: l.to_string(),
            })
    };

    for x in &p.inputs {
        let l = level_of(x)?;
        let origin = format!("input {x}");
        let releases = p.declass.get(x).cloned().unwrap_or_default();
        if releases.is_empty() {
            b.term_var(
                x.clone(),
                TypeExpr::arrow(lv(&l)?, TypeExpr::Int),
                thunk(TypeExpr::Int),
                None,
                &origin,
            )?;
            continue;
        }
        let fns: Vec<&str> = releases.iter().map(|(f, _)| f.as_str()).collect();
        let tag = fns.join("_");
        let key = b.type_var(
            format!("a_{l}_{tag}"),
            TypeVarRole::Key {
                levels: vec![l.clone()],
                targets: releases.iter().map(|(_, t)| t.clone()).collect(),
            },
            TypeExpr::Unit,
            &origin,
        )?;
        let payload = b.type_var(
            format!("a__{tag}"),
            TypeVarRole::Payload {
                levels: vec![l.clone()],
                releases: releases.clone(),
                carrier: TypeExpr::Int,
                group: false,
            },
            TypeExpr::Int,
            &origin,
        )?;
        let keyed = TypeExpr::arrow(key, payload);
        b.term_var(
            x.clone(),
            keyed.clone(),
            thunk(TypeExpr::Int),
            None,
            &origin,
        )?;
        for (f, target) in &releases {
            let d = lookup(&p.fns, f, x)?;
            let public = TypeExpr::arrow(
                keyed.clone(),
                TypeExpr::arrow(lv(target)?, d.result_type.clone()),
            );
            let conf = TypeExpr::arrow(thunk(TypeExpr::Int), thunk(d.result_type.clone()));
            b.term_var(
                format!("{x}_{f}"),
                public,
                conf,
                Some(dec_impl(d)),
                &format!("declassifier {f} of {x}"),
            )?;
        }
        b.term_var(
            format!("conv_{x}"),
            TypeExpr::arrow(keyed, TypeExpr::arrow(lv(&l)?, TypeExpr::Int)),
            TypeExpr::arrow(thunk(TypeExpr::Int), thunk(TypeExpr::Int)),
            Some(conv_impl()),
            &format!("conversion of {x}"),
        )?;
    }

    for g in &p.groups {
        let d = lookup(&p.fns, &g.via, &g.group_var)?;
        let target = g.target.clone().ok_or_else(|| PolicyError::MissingLevel {
            what: "group",
            name: g.group_var.clone(),
        })?;
        let levels = g
            .members
            .iter()
            .map(|m| level_of(m))
            .collect::<Result<Vec<_>, _>>()?;
        let carrier = TypeExpr::int_tuple(g.members.len());
        let origin = format!("group {}", g.group_var);
        let key = b.type_var(
            format!("a_{}_{}", levels.join("_"), g.via),
            TypeVarRole::Key {
                levels: levels.clone(),
                targets: vec![target.clone()],
            },
            TypeExpr::Unit,
            &origin,
        )?;
        let payload = b.type_var(
            format!("a__{}", g.via),
            TypeVarRole::Payload {
                levels,
                releases: vec![(g.via.clone(), target.clone())],
                carrier: carrier.clone(),
                group: true,
            },
            carrier.clone(),
            &origin,
        )?;
        let keyed = TypeExpr::arrow(key, payload);
        b.views.groups.push(GroupView {
            var: g.group_var.clone(),
            members: g.members.clone(),
            keyed: true,
        });
        b.term_var(
            g.group_var.clone(),
            keyed.clone(),
            thunk(carrier.clone()),
            None,
            &origin,
        )?;
        b.term_var(
            format!("{}_{}", g.group_var, g.via),
            TypeExpr::arrow(keyed, TypeExpr::arrow(lv(&target)?, d.result_type.clone())),
            TypeExpr::arrow(thunk(carrier), thunk(d.result_type.clone())),
            Some(dec_impl(d)),
            &format!("declassifier {} of {}", g.via, g.group_var),
        )?;
    }

    for l in p.lattice.topo_order() {
        let a = lv(l)?;
        let unit = TypeExpr::Unit;
        b.term_var(
            format!("comp_{l}"),
            comp_type(&a),
            comp_type(&unit),
            Some(comp_impl()),
            &format!("interface of {l}"),
        )?;
        b.term_var(
            format!("wrap_{l}"),
            wrap_type(&a),
            wrap_type(&unit),
            Some(wrap_impl()),
            &format!("interface of {l}"),
        )?;
    }
    for (lo, hi) in p.lattice.strict_pairs() {
        b.term_var(
            format!("convup_{lo}_{hi}"),
            convup_type(&lv(&lo)?, &lv(&hi)?),
            convup_type(&TypeExpr::Unit, &TypeExpr::Unit),
            Some(convup_impl()),
            &format!("conversion from {lo} to {hi}"),
        )?;
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::PrimOp;
    use crate::policy::{EquivWitness, LevelLattice};
    use crate::typecheck::infer_type;

    fn s(x: &str) -> String {
        x.to_string()
    }

    fn decl(name: &str, body: TermExpr, param_type: TypeExpr) -> Declassifier {
        Declassifier {
            name: s(name),
            param: s("x"),
            param_type,
            body,
            result_type: TypeExpr::Int,
        }
    }

    fn modulo(name: &str, k: i64) -> Declassifier {
        decl(
            name,
            TermExpr::prim(PrimOp::Mod, TermExpr::var("x"), TermExpr::int(k)),
            TypeExpr::Int,
        )
    }

    fn render(ctx: &TermContext) -> Vec<String> {
        ctx.iter().map(|(k, t)| format!("{k}:{t}")).collect()
    }

    #[test]
    fn equivalence_witness_views() {
        let p = SimplePolicy {
            name: s("P"),
            inputs: vec![s("x"), s("y")],
            declass: [(s("x"), vec![s("f")]), (s("y"), vec![s("g")])]
                .into_iter()
                .collect(),
            equivs: vec![EquivWitness {
                target: s("g"),
                base: s("f"),
                adapter: s("a"),
            }],
            fns: [
                (s("f"), modulo("f", 2)),
                (s("g"), modulo("g", 2)),
                (
                    s("a"),
                    decl(
                        "a",
                        TermExpr::prim(PrimOp::Add, TermExpr::var("x"), TermExpr::int(2)),
                        TypeExpr::Int,
                    ),
                ),
            ]
            .into_iter()
            .collect(),
            ..Default::default()
        };
        let v = encode_simple(&p).unwrap();
        assert_eq!(
            render(&v.confidential),
            [
                "x:int",
                "x_f:int -> int",
                "y:int",
                "y_g:int -> int",
                "y_a:int -> int"
            ]
        );
        assert_eq!(
            v.public_delta.iter().cloned().collect::<Vec<_>>(),
            ["a_f", "a_g_f_a"]
        );
        assert_eq!(
            render(&v.public_gamma),
            [
                "x:a_f",
                "x_f:a_f -> int",
                "y:a_g_f_a",
                "y_g:a_g_f_a -> int",
                "y_a:a_g_f_a -> a_f"
            ]
        );
        assert_eq!(v.inputs, [s("x"), s("y")]);
    }

    #[test]
    fn multilevel_interface_typechecks_in_confidential_view() {
        let lat = LevelLattice::new(vec![s("L"), s("H")], vec![(s("L"), s("H"))]).unwrap();
        let p = MultiLevelPolicy {
            name: s("P"),
            lattice: lat,
            inputs: vec![s("h")],
            lvl: [(s("h"), s("H"))].into_iter().collect(),
            declass: [(s("h"), vec![(s("f"), s("L"))])].into_iter().collect(),
            fns: [(s("f"), modulo("f", 2))].into_iter().collect(),
            groups: vec![],
        };
        let v = encode_multilevel(&p).unwrap();
        for (name, imp) in &v.pinned {
            let t = infer_type(&TypeContext::new(), &TermContext::new(), imp).unwrap();
            assert!(
                t.alpha_eq(&v.confidential[name]),
                "{name}: {t} vs {}",
                v.confidential[name]
            );
        }
        assert_eq!(
            v.public_gamma["h_f"].to_string(),
            "(a_H_f -> a__f) -> a_L -> int"
        );
        assert_eq!(
            v.public_gamma["comp_H"].to_string(),
            "forall b1. forall b2. (a_H -> b1) -> (b1 -> a_H -> b2) -> a_H -> b2"
        );
        assert_eq!(
            dec_impl(&p.fns["f"]).to_string(),
            "fn x:unit -> int => fn _:unit => x () mod 2"
        );
    }

    #[test]
    fn colliding_generated_names_are_reported() {
        let p = SimplePolicy {
            name: s("P"),
            inputs: vec![s("x"), s("x_f")],
            declass: [(s("x"), vec![s("f")])].into_iter().collect(),
            fns: [(s("f"), modulo("f", 2))].into_iter().collect(),
            ..Default::default()
        };
        assert!(matches!(
            encode_simple(&p),
            Err(PolicyError::NameCollision { .. })
        ));
    }
}

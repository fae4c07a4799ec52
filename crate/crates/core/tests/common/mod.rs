//! Shared helpers for the integration tests: corpus loading, a type-directed
//! program generator and a random policy generator.
#![allow(dead_code)]

use std::path::PathBuf;

use indexmap::IndexMap;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trni::frontend::{parse_policy, parse_program};
use trni::lang::TypeSubst;
use trni::policy::{EquivWitness, GroupDecl};
use trni::{
    infer_type, Declassifier, LevelLattice, MultiLevelPolicy, Policy, PrimOp, SimplePolicy,
    TermExpr, TypeExpr, ViewPair,
};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests")
        .join("data")
        .join(name)
}

pub fn read_data(name: &str) -> String {
    std::fs::read_to_string(data_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn policy(name: &str) -> Policy {
    let stem = name.trim_end_matches(".policy");
    parse_policy(&read_data(name), stem)
        .unwrap_or_else(|e| panic!("{name}: {e}"))
        .policy
}

pub fn program(name: &str) -> TermExpr {
    parse_program(&read_data(name))
        .unwrap_or_else(|e| panic!("{name}: {e}"))
        .term
}

pub fn ty(src: &str) -> TypeExpr {
    trni::frontend::parse_type(src).unwrap()
}

/// Floored remainder, written independently of the evaluator.
pub fn fmod(a: i64, b: i64) -> i64 {
    let r = a % b;
    if r != 0 && (r < 0) != (b < 0) {
        r + b
    } else {
        r
    }
}

/// Generates random programs that typecheck at a requested type in the
/// public view of a policy.
pub struct ProgramGen {
    rng: ChaCha8Rng,
    /// Usable heads: a variable, possibly instantiated at `int`, and its type.
    entries: Vec<(TermExpr, TypeExpr)>,
    locals: Vec<(String, TypeExpr)>,
    fresh: usize,
}

fn instantiate(name: &str, t: &TypeExpr) -> (TermExpr, TypeExpr) {
    let mut head = TermExpr::var(name);
    let mut t = t.clone();
    while let TypeExpr::Forall(b, body) = t {
        head = TermExpr::ty_app(head, TypeExpr::Int);
        t = body.substitute(&b, &TypeExpr::Int);
    }
    (head, t)
}

/// Splits `t` as `args -> rest` for every number of leading arguments.
fn arrow_splits(t: &TypeExpr) -> Vec<(Vec<TypeExpr>, TypeExpr)> {
    let mut out = Vec::new();
    let mut args = Vec::new();
    let mut cur = t;
    while let TypeExpr::Arrow(a, r) = cur {
        args.push((**a).clone());
        out.push((args.clone(), (**r).clone()));
        cur = r;
    }
    out
}

impl ProgramGen {
    /// `hidden` lists public-view variables the generator must not use.
    pub fn new(views: &ViewPair, hidden: &[String], seed: u64) -> Self {
        let entries = views
            .public_gamma
            .iter()
            .filter(|(x, _)| !hidden.contains(x))
            .map(|(x, t)| instantiate(x, t))
            .collect();
        ProgramGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            entries,
            locals: Vec::new(),
            fresh: 0,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    fn heads(&self) -> Vec<(TermExpr, TypeExpr)> {
        let mut hs = self.entries.clone();
        hs.extend(
            self.locals
                .iter()
                .map(|(x, t)| (TermExpr::var(x.as_str()), t.clone())),
        );
        hs
    }

    pub fn term(&mut self, ty: &TypeExpr, depth: u32) -> Option<TermExpr> {
        let mut strategies = vec![0u8, 1, 2, 3];
        strategies.shuffle(&mut self.rng);
        for s in strategies {
            let found = match s {
                0 => self.exact(ty),
                1 if depth > 0 => self.apply(ty, depth),
                2 => self.structural(ty, depth),
                3 if depth > 0 => self.branch(ty, depth),
                _ => None,
            };
            if found.is_some() {
                return found;
            }
        }
        None
    }

    fn exact(&mut self, ty: &TypeExpr) -> Option<TermExpr> {
        let hits: Vec<TermExpr> = self
            .heads()
            .into_iter()
            .filter(|(_, t)| t.alpha_eq(ty))
            .map(|(h, _)| h)
            .collect();
        hits.choose(&mut self.rng).cloned()
    }

    fn apply(&mut self, ty: &TypeExpr, depth: u32) -> Option<TermExpr> {
        let mut options: Vec<(TermExpr, Vec<TypeExpr>)> = Vec::new();
        for (h, t) in self.heads() {
            for (args, rest) in arrow_splits(&t) {
                if rest.alpha_eq(ty) {
                    options.push((h.clone(), args));
                }
            }
        }
        options.shuffle(&mut self.rng);
        'outer: for (head, args) in options.into_iter().take(3) {
            let mut e = head;
            for a in &args {
                match self.term(a, depth - 1) {
                    Some(arg) => e = TermExpr::app(e, arg),
                    None => continue 'outer,
                }
            }
            return Some(e);
        }
        None
    }

    fn structural(&mut self, ty: &TypeExpr, depth: u32) -> Option<TermExpr> {
        match ty {
            TypeExpr::Unit => Some(TermExpr::Unit),
            TypeExpr::Int if depth == 0 || self.rng.random_bool(0.3) => {
                Some(TermExpr::int(self.rng.random_range(-3..=3)))
            }
            TypeExpr::Int => {
                let ops = [
                    PrimOp::Add,
                    PrimOp::Sub,
                    PrimOp::Mul,
                    PrimOp::Div,
                    PrimOp::Mod,
                    PrimOp::Eq,
                ];
                let op = *ops.choose(&mut self.rng).unwrap();
                let l = self.term(&TypeExpr::Int, depth - 1)?;
                let r = self.term(&TypeExpr::Int, depth - 1)?;
                Some(TermExpr::prim(op, l, r))
            }
            TypeExpr::Prod(a, b) => {
                let l = self.term(a, depth)?;
                let r = self.term(b, depth)?;
                Some(TermExpr::pair(l, r))
            }
            TypeExpr::Arrow(a, b) => {
                let v = format!("v{}", self.fresh);
                self.fresh += 1;
                self.locals.push((v.clone(), (**a).clone()));
                let body = self.term(b, depth);
                self.locals.pop();
                Some(TermExpr::lam(v, (**a).clone(), body?))
            }
            TypeExpr::Var(_) | TypeExpr::Forall(..) => None,
        }
    }

    /// `ifz`, a projection out of a pair, or a local binding.
    fn branch(&mut self, ty: &TypeExpr, depth: u32) -> Option<TermExpr> {
        match self.rng.random_range(0..3) {
            0 => {
                let c = self.term(&TypeExpr::Int, depth - 1)?;
                let a = self.term(ty, depth - 1)?;
                let b = self.term(ty, depth - 1)?;
                Some(TermExpr::if_zero(c, a, b))
            }
            1 => {
                let pair = self.term(&TypeExpr::prod(ty.clone(), TypeExpr::Int), depth - 1)?;
                Some(TermExpr::proj(trni::Side::First, pair))
            }
            _ => {
                let v = format!("v{}", self.fresh);
                self.fresh += 1;
                let bound = self.term(&TypeExpr::Int, depth - 1)?;
                self.locals.push((v.clone(), TypeExpr::Int));
                let body = self.term(ty, depth - 1);
                self.locals.pop();
                Some(TermExpr::app(TermExpr::lam(v, TypeExpr::Int, body?), bound))
            }
        }
    }
}

/// Generates `count` programs typable at one of `targets`, using at most
/// `max_inputs` secret inputs each. Every program is checked against the
/// public view before it is returned.
pub fn generate_programs(
    views: &ViewPair,
    targets: &[TypeExpr],
    count: usize,
    max_inputs: usize,
    seed: u64,
) -> Vec<(TermExpr, TypeExpr)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        assert!(
            attempts < count * 200,
            "generator cannot reach {count} programs"
        );
        let mut inputs = views.inputs.clone();
        inputs.shuffle(&mut rng);
        let hidden: Vec<String> = views
            .public_gamma
            .keys()
            .filter(|x| {
                inputs[max_inputs.min(inputs.len())..].iter().any(|d| {
                    *x == d || x.starts_with(&format!("{d}_")) || **x == format!("conv_{d}")
                })
            })
            .cloned()
            .collect();
        let target = targets[out.len() % targets.len()].clone();
        let mut g = ProgramGen::new(views, &hidden, rng.random());
        let depth = g.rng().random_range(1..=3);
        if let Some(e) = g.term(&target, depth) {
            let t = infer_type(&views.public_delta, &views.public_gamma, &e)
                .unwrap_or_else(|err| panic!("generated ill-typed program {e}: {err}"));
            assert!(t.alpha_eq(&target), "generated {e} : {t}, wanted {target}");
            out.push((e, target));
        }
    }
    out
}

fn decl(name: &str, param_type: TypeExpr, body: TermExpr) -> Declassifier {
    Declassifier {
        name: name.into(),
        param: "v".into(),
        param_type,
        body,
        result_type: TypeExpr::Int,
    }
}

fn random_unary(rng: &mut impl Rng, name: &str) -> Declassifier {
    let k = rng.random_range(2..=5);
    let op = [PrimOp::Mod, PrimOp::Div, PrimOp::Add, PrimOp::Mul][rng.random_range(0..4)];
    decl(
        name,
        TypeExpr::Int,
        TermExpr::prim(op, TermExpr::var("v"), TermExpr::int(k)),
    )
}

fn random_tuple_fn(rng: &mut impl Rng, name: &str, arity: usize) -> Declassifier {
    // Sum of the components, optionally divided.
    let mut parts = Vec::new();
    let mut cur = TermExpr::var("v");
    for i in 0..arity {
        if i + 1 == arity {
            parts.push(cur.clone());
        } else {
            parts.push(TermExpr::proj(trni::Side::First, cur.clone()));
            cur = TermExpr::proj(trni::Side::Second, cur);
        }
    }
    let sum = parts
        .into_iter()
        .reduce(|a, b| TermExpr::prim(PrimOp::Add, a, b))
        .unwrap();
    let body = if rng.random_bool(0.5) {
        TermExpr::prim(PrimOp::Div, sum, TermExpr::int(arity as i64))
    } else {
        sum
    };
    decl(name, TypeExpr::int_tuple(arity), body)
}

/// A random policy without levels: opaque and released inputs, optional
/// groups and an optional equivalence witness. May be invalid.
pub fn random_simple_policy(rng: &mut impl Rng, id: usize) -> Policy {
    let n = rng.random_range(1..=5);
    let inputs: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let mut fns = IndexMap::new();
    for f in ["f", "g", "h"] {
        fns.insert(f.to_string(), random_unary(rng, f));
    }
    let mut declass = IndexMap::new();
    let mut opaque = Vec::new();
    for x in &inputs {
        let pick: Vec<String> = ["f", "g", "h"]
            .iter()
            .filter(|_| rng.random_bool(0.35))
            .map(|s| s.to_string())
            .collect();
        if pick.is_empty() {
            opaque.push(x.clone());
        } else {
            declass.insert(x.clone(), pick);
        }
    }
    let mut groups = Vec::new();
    if opaque.len() >= 2 && rng.random_bool(0.5) {
        let arity = rng.random_range(2..=opaque.len().min(3));
        fns.insert("avg".into(), random_tuple_fn(rng, "avg", arity));
        groups.push(GroupDecl {
            group_var: "y".into(),
            members: opaque[..arity].to_vec(),
            via: "avg".into(),
            target: None,
        });
    }
    let mut equivs = Vec::new();
    if rng.random_bool(0.4) {
        // Release one input through k alone and relate k to f through an adapter.
        let x = format!("x{n}");
        let base = format!("b{n}");
        let adapter = decl(
            "ad",
            TypeExpr::Int,
            TermExpr::prim(PrimOp::Add, TermExpr::var("v"), TermExpr::int(1)),
        );
        fns.insert("ad".into(), adapter);
        fns.insert(base.clone(), random_unary(rng, &base));
        fns.insert("k".into(), random_unary(rng, "k"));
        declass.insert(x.clone(), vec!["k".into()]);
        declass.insert(format!("x{}", n + 1), vec![base.clone()]);
        equivs.push(EquivWitness {
            target: "k".into(),
            base,
            adapter: "ad".into(),
        });
        let mut all = inputs.clone();
        all.push(x);
        all.push(format!("x{}", n + 1));
        return Policy::Simple(SimplePolicy {
            name: format!("R{id}"),
            inputs: all,
            declass,
            groups,
            equivs,
            fns,
        });
    }
    Policy::Simple(SimplePolicy {
        name: format!("R{id}"),
        inputs,
        declass,
        groups,
        equivs,
        fns,
    })
}

/// A random multi-level policy over a chain or a diamond. May be invalid.
pub fn random_multilevel_policy(rng: &mut impl Rng, id: usize) -> Policy {
    let s = |v: &str| v.to_string();
    let (levels, edges) = if rng.random_bool(0.5) {
        (
            vec![s("L"), s("M"), s("H")],
            vec![(s("L"), s("M")), (s("M"), s("H"))],
        )
    } else {
        (
            vec![s("B"), s("P"), s("Q"), s("T")],
            vec![
                (s("B"), s("P")),
                (s("B"), s("Q")),
                (s("P"), s("T")),
                (s("Q"), s("T")),
            ],
        )
    };
    let lattice = LevelLattice::new(levels.clone(), edges).unwrap();
    let n = rng.random_range(1..=4);
    let mut fns = IndexMap::new();
    for f in ["f", "g"] {
        fns.insert(f.to_string(), random_unary(rng, f));
    }
    let mut lvl = IndexMap::new();
    let mut declass = IndexMap::new();
    let inputs: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    let mut plain = Vec::new();
    for x in &inputs {
        let level = levels[rng.random_range(0..levels.len())].clone();
        let below: Vec<String> = levels
            .iter()
            .filter(|l| **l != level && lattice.leq(l, &level).unwrap())
            .cloned()
            .collect();
        lvl.insert(x.clone(), level);
        if !below.is_empty() && rng.random_bool(0.6) {
            let mut rel = vec![(s("f"), below[rng.random_range(0..below.len())].clone())];
            if rng.random_bool(0.3) {
                rel.push((s("g"), below[rng.random_range(0..below.len())].clone()));
            }
            declass.insert(x.clone(), rel);
        } else {
            plain.push(x.clone());
        }
    }
    let mut groups = Vec::new();
    let top = levels.last().unwrap().clone();
    let high: Vec<String> = plain.iter().filter(|x| lvl[*x] == top).cloned().collect();
    if high.len() >= 2 && rng.random_bool(0.6) {
        fns.insert("avg".into(), random_tuple_fn(rng, "avg", 2));
        groups.push(GroupDecl {
            group_var: "y".into(),
            members: high[..2].to_vec(),
            via: "avg".into(),
            target: Some(levels[0].clone()),
        });
    }
    Policy::MultiLevel(MultiLevelPolicy {
        name: format!("R{id}"),
        lattice,
        inputs,
        lvl,
        declass,
        fns,
        groups,
    })
}

/// Bindingwise check that collapsing the public view yields the
/// confidential one. Returns the offending bindings.
pub fn collapse_mismatches(views: &ViewPair) -> Vec<String> {
    let mut bad = Vec::new();
    let delta: &TypeSubst = &views.delta;
    for a in &views.public_delta {
        if !delta.contains_key(a) {
            bad.push(format!("{a} has no concrete type"));
        }
    }
    if views.public_gamma.len() != views.confidential.len() {
        bad.push("the views bind different numbers of variables".into());
    }
    for (x, t) in &views.public_gamma {
        match views.confidential.get(x) {
            Some(c) if views.collapse(t).alpha_eq(c) => {}
            Some(c) => bad.push(format!(
                "{x}: {t} collapses to {}, confidential {c}",
                views.collapse(t)
            )),
            None => bad.push(format!("{x} is missing from the confidential view")),
        }
    }
    bad
}

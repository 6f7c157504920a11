//! Verifiers for the semantic theorems, run exhaustively in finite models.
//!
//! Each verifier builds the model it needs from a [`ModelConfig`], checks
//! every instance at the bound and returns a [`VerificationReport`]. The first
//! violation found becomes the report's witness.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::encodings::{
    bang, cbpv_translate_type, elaborate_term, elaborate_type, girard_iso_terms, yoneda_iso_terms, zero_c, CbpvComp,
    CbpvType, CbpvVal,
};
use crate::finmodel::{
    self, admissible_closure, all_relations, check_monad_laws, check_relation_axioms, Alg, AlgOps, ModelConfig,
    MonadKind, MonadSpec, Object, Rel,
};
use crate::interp::{
    apply, arrow_chain, encode_curried, is_hom, table_of, tabulate, Algebra, Dom, Env, Ix, Model, Obj, RelBind, RelEnv, RelTable, SemError,
    SemResult, SemValue,
};
use crate::kernel::{alpha_eq_type, name, subst_type, Judgment, Name, Sort, Term, TyVar, Type};
use crate::surface::{parse_term, parse_type};
use crate::typecheck::gen::{GenConfig, Generator};
use crate::typecheck::{check_substitution_lemma, check_unicity, typecheck};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Verified,
    Counterexample,
    OutOfBound,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    #[serde(rename = "theorem-id")]
    pub theorem_id: String,
    pub config: ModelConfig,
    pub bound: u32,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<Value>,
    /// Number of instances examined.
    pub checked: u64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(rename = "runtime-ms")]
    pub runtime_ms: u64,
}

impl VerificationReport {
    pub fn verified(&self) -> bool {
        self.status == Status::Verified
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{:<20} {:<15} bound {} ({} checked, {} ms)", self.theorem_id, status_word(self.status), self.bound, self.checked, self.runtime_ms);
        if let Some(c) = &self.counts {
            s.push_str(&format!(" counts {c}"));
        }
        if let Some(w) = &self.witness {
            s.push_str(&format!("\n  witness: {w}"));
        }
        for n in &self.notes {
            s.push_str(&format!("\n  note: {n}"));
        }
        s
    }
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Verified => "verified",
        Status::Counterexample => "counterexample",
        Status::OutOfBound => "out-of-bound",
    }
}

/// A verifier was asked to run in a model it does not apply to.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

/// Knobs for individual verifiers; `None` picks the default for the model.
#[derive(Clone, Debug)]
pub struct Params {
    /// Arity for the algebraic-operation correspondence.
    pub arity: Option<u32>,
    /// Set sizes for the cardinality check.
    pub sizes: Option<Vec<u32>>,
    pub seed: u64,
    /// Number of generated terms for randomized suites.
    pub terms: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params { arity: None, sizes: None, seed: 0, terms: 100 }
    }
}

/// Instance counts, notes and model adjustments accumulated by a verifier.
#[derive(Default)]
struct Tally {
    checked: u64,
    counts: BTreeMap<String, Value>,
    notes: Vec<String>,
}

impl Tally {
    fn count(&mut self, key: &str, n: u64) {
        let e = self.counts.entry(key.to_string()).or_insert(json!(0));
        *e = json!(e.as_u64().unwrap_or(0) + n);
        self.checked += n;
    }
}

type Found = SemResult<Option<Value>>;

fn run(id: &str, cfg: &ModelConfig, f: impl FnOnce(&mut Tally) -> Found) -> VerificationReport {
    let start = Instant::now();
    let mut t = Tally::default();
    let (status, witness) = match f(&mut t) {
        Ok(None) => (Status::Verified, None),
        Ok(Some(w)) => (Status::Counterexample, Some(w)),
        Err(SemError::OutOfBound(m)) => (Status::OutOfBound, Some(json!({ "reason": m }))),
        Err(e) => (Status::Counterexample, Some(json!({ "error": e.to_string() }))),
    };
    VerificationReport {
        theorem_id: id.to_string(),
        config: cfg.clone(),
        bound: cfg.bound,
        status,
        witness,
        counts: (!t.counts.is_empty()).then(|| json!(t.counts)),
        checked: t.checked,
        notes: t.notes,
        runtime_ms: start.elapsed().as_millis() as u64,
    }
}

/// The configured model with the free algebras on `need` added.
fn model_with_free(cfg: &ModelConfig, need: impl IntoIterator<Item = u32>, t: &mut Tally) -> Model {
    let mut free: Vec<u32> = if cfg.include_free_algebras { (0..=cfg.bound).collect() } else { Vec::new() };
    let mut added = Vec::new();
    for n in need {
        if !free.contains(&n) {
            free.push(n);
            added.push(n);
        }
    }
    if !added.is_empty() {
        t.notes.push(format!("free algebras on sets of size {added:?} added to the model"));
    }
    Model::with_free_algebras(cfg.spec(), cfg.bound, &free)
}

fn ill(msg: impl Into<String>) -> SemError {
    SemError::IllFormed(msg.into())
}

fn ty(text: &str) -> SemResult<Type> {
    let s = parse_type(text).map_err(|e| ill(e.to_string()))?;
    elaborate_type(&s).map_err(|e| ill(e.error.to_string()))
}

fn ctx(decls: &[(&str, &str)]) -> SemResult<Vec<(Name, Type)>> {
    decls.iter().map(|(x, t)| Ok((name(x), ty(t)?))).collect()
}

fn term(model: &Model, gamma: &[(Name, Type)], text: &str) -> SemResult<(Term, Type)> {
    let s = parse_term(text).map_err(|e| ill(e.to_string()))?;
    elaborate_term(&model.sig, &gamma.to_vec(), None, &s).map_err(|e| ill(format!("{text}: {e}")))
}

type TermEnv = Vec<(Name, Type, Ix)>;

/// Every assignment of elements to the variables of `gamma`.
fn assignments(model: &Model, env: &Env, gamma: &[(Name, Type)], cap: u64) -> SemResult<Vec<TermEnv>> {
    let mut out: Vec<TermEnv> = vec![Vec::new()];
    for (x, t) in gamma {
        let m = model.dom(env, t)?.members()?;
        if (out.len() as u64).saturating_mul(m.len() as u64) > cap {
            return Err(SemError::OutOfBound(format!("more than {cap} assignments to the context")));
        }
        out = out.iter().flat_map(|a| m.iter().map(move |&v| [a.clone(), vec![(x.clone(), t.clone(), v)]].concat())).collect();
    }
    Ok(out)
}

fn show(model: &Model, env: &Env, t: &Type, x: Ix) -> Value {
    match model.dom(env, t).and_then(|d| model.sem_value(&d, x)) {
        Ok(v) => json!(v),
        Err(_) => json!(x),
    }
}

fn show_tenv(model: &Model, env: &Env, tenv: &TermEnv) -> Value {
    let m: BTreeMap<String, Value> = tenv.iter().map(|(x, t, v)| (x.to_string(), show(model, env, t, *v))).collect();
    json!(m)
}

fn show_env(model: &Model, binds: &[(&str, &Obj)]) -> Value {
    let m: BTreeMap<String, String> = binds.iter().map(|(v, o)| (v.to_string(), model.alg_label(o))).collect();
    json!(m)
}

fn small_sets(model: &Model, max: u32) -> Vec<Obj> {
    model.sets.iter().take(max as usize + 1).cloned().collect()
}

/// Elements of a free algebra as labels: `inl aK`, `inr e`, or subsets.
pub fn t_label(spec: &MonadSpec, n: u32, t: u32) -> String {
    match spec.kind {
        MonadKind::Identity => format!("a{t}"),
        MonadKind::Exception if t < n => format!("inl a{t}"),
        MonadKind::Exception => format!("inr {}", spec.exceptions[(t - n) as usize]),
        MonadKind::Powerset => {
            let items: Vec<String> = (0..n).filter(|i| (t + 1) & (1 << i) != 0).map(|i| format!("a{i}")).collect();
            format!("{{{}}}", items.join(","))
        }
    }
}

// ---------------------------------------------------------------------------
// !A and T A

/// The bijection `!A -> T A`, `k |-> k(TA)(eta)`, with `A` of size `n`.
pub struct BangIso {
    pub env: Env,
    pub bang_ty: Type,
    pub members: Arc<[Ix]>,
    pub to_t: Vec<u32>,
    pub from_t: HashMap<u32, Ix>,
}

pub fn bang_iso(model: &Model, n: u32, var: &str) -> SemResult<BangIso> {
    let x = Type::vvar(var);
    let env = Env::new().with(TyVar::v(var), model.set(n)?.clone());
    let bang_ty = bang(&x);
    let Type::ForallC(y, body) = &bang_ty else { unreachable!() };
    let v = TyVar { sort: Sort::Computation, name: y.clone() };
    let d = model.dom(&env, &bang_ty)?;
    let target = match model.free_algebra(n) {
        Ok(o) => o.clone(),
        Err(_) => Obj::Alg(Algebra::base(model.spec.free_algebra(n))),
    };
    let e2 = env.extend(v.clone(), target.clone());
    let k_dom = model.dom(&e2, &Type::arrow(x.clone(), Type::CVar(y.clone())))?;
    let eta = tabulate(&k_dom, &model.spec.unit(n).iter().map(|&t| t as Ix).collect::<Vec<_>>())?;
    let body_dom = model.dom(&e2, body)?;
    let members = d.members()?;
    let mut to_t = Vec::with_capacity(members.len());
    for &k in members.iter() {
        let c = model.project(&env, &v, body, k, &target)?;
        to_t.push(apply(&body_dom, c, eta)? as u32);
    }
    let from_t = to_t.iter().zip(members.iter()).map(|(&t, &k)| (t, k)).collect();
    Ok(BangIso { env, bang_ty, members, to_t, from_t })
}

impl BangIso {
    fn is_bijective(&self, t_size: u64) -> bool {
        let image: BTreeSet<u32> = self.to_t.iter().copied().collect();
        image.len() == self.to_t.len() && self.to_t.len() as u64 == t_size
    }

    fn index_of(&self, k: Ix) -> usize {
        self.members.binary_search(&k).expect("element of !A")
    }
}

// ---------------------------------------------------------------------------
// Bang laws

struct LawInstance {
    law: &'static str,
    gamma: &'static [(&'static str, &'static str)],
    lhs: &'static str,
    rhs: &'static str,
}

const BANG_LAWS: &[LawInstance] = &[
    LawInstance { law: "beta", gamma: &[("a", "X"), ("k", "X -> ^B")], lhs: "let x <= bang a in k x", rhs: "k a" },
    LawInstance { law: "beta", gamma: &[("a", "X"), ("k", "X -> X -> ^B")], lhs: "let x <= bang a in k x x", rhs: "k a a" },
    LawInstance {
        law: "beta",
        gamma: &[("a", "X"), ("b", "X"), ("k", "X -> X -> ^B")],
        lhs: "let x <= bang b in k a x",
        rhs: "k a b",
    },
    LawInstance {
        law: "beta",
        gamma: &[("a", "X"), ("f", "X -> X"), ("k", "X -> ^B")],
        lhs: "let x <= bang (f a) in k x",
        rhs: "k (f a)",
    },
    LawInstance { law: "beta", gamma: &[("a", "X")], lhs: "let x <= bang a in bang x", rhs: "bang a" },
    LawInstance { law: "eta", gamma: &[("y", "!X")], lhs: "let x <= y in bang x", rhs: "y" },
    LawInstance {
        law: "kappa",
        gamma: &[("s", "!X"), ("k", "X -> ^B"), ("h", "^B -o ^C")],
        lhs: "h (let x <= s in k x)",
        rhs: "let x <= s in h (k x)",
    },
    LawInstance {
        law: "kappa",
        gamma: &[("s", "!X"), ("k", "X -> ^B"), ("h", "^B -o X -> ^C"), ("a", "X")],
        lhs: "h (let x <= s in k x) a",
        rhs: "let x <= s in h (k x) a",
    },
    LawInstance {
        law: "kappa",
        gamma: &[("s", "!X"), ("t", "!X"), ("k", "X -> X -> ^B"), ("h", "^B -o ^C")],
        lhs: "h (let x <= s in let y <= t in k x y)",
        rhs: "let x <= s in let y <= t in h (k x y)",
    },
    LawInstance { law: "kappa", gamma: &[("s", "!X"), ("k", "X -> !X")], lhs: "let y <= (let x <= s in k x) in bang y", rhs: "let x <= s in let y <= k x in bang y" },
];

/// Effect-specific instances, built from the constants the model has.
fn effect_laws(model: &Model) -> Vec<(String, Vec<(&'static str, &'static str)>, String, String)> {
    let mut out = Vec::new();
    for e in &model.spec.exceptions {
        if model.spec.kind == MonadKind::Exception {
            out.push((
                "beta".to_string(),
                vec![("a", "X")],
                format!("let x <= bang a in raise[{e}] @[^B]"),
                format!("raise[{e}] @[^B]"),
            ));
            out.push((
                "kappa".to_string(),
                vec![("h", "^B -o ^C")],
                format!("h (raise[{e}] @[^B])"),
                format!("raise[{e}] @[^C]"),
            ));
        }
    }
    if model.spec.kind == MonadKind::Powerset {
        out.push((
            "beta".to_string(),
            vec![("a", "X"), ("b", "X"), ("k", "X -> ^B")],
            "let x <= bang a in or @[^B] (k x) (k b)".to_string(),
            "or @[^B] (k a) (k b)".to_string(),
        ));
        out.push((
            "kappa".to_string(),
            vec![("s", "!X"), ("t", "!X"), ("k", "X -> ^B"), ("h", "^B -o ^C")],
            "h (or @[^B] (let x <= s in k x) (let x <= t in k x))".to_string(),
            "or @[^C] (let x <= s in h (k x)) (let x <= t in h (k x))".to_string(),
        ));
    }
    out
}

/// The three equations of `!`, by extensional equality of both sides in
/// every environment: `X` over sets of size at most 2, `^B`, `^C` over all
/// algebras of the model (free algebras included).
pub fn verify_bang_laws(cfg: &ModelConfig) -> VerificationReport {
    run("bang-laws", cfg, |t| {
        let model = model_with_free(cfg, 0..=cfg.bound.min(2), t);
        let mut battery: Vec<(String, Vec<(&str, &str)>, String, String)> =
            BANG_LAWS.iter().map(|l| (l.law.to_string(), l.gamma.to_vec(), l.lhs.to_string(), l.rhs.to_string())).collect();
        battery.extend(effect_laws(&model));
        for (law, gamma, lhs, rhs) in &battery {
            let gamma = ctx(gamma)?;
            let (l, lt) = term(&model, &gamma, lhs)?;
            let (r, rt) = term(&model, &gamma, rhs)?;
            if !alpha_eq_type(&lt, &rt) {
                return Ok(Some(json!({ "law": law, "lhs": lhs, "rhs": rhs, "reason": format!("types differ: {lt} vs {rt}") })));
            }
            for x in small_sets(&model, 2) {
                for b in &model.algs {
                    for c in &model.algs {
                        let env = Env::new().with(TyVar::v("X"), x.clone()).with(TyVar::c("B"), b.clone()).with(TyVar::c("C"), c.clone());
                        for tenv in assignments(&model, &env, &gamma, 1 << 20)? {
                            let (lv, _) = model.eval(&env, &tenv, &l)?;
                            let (rv, _) = model.eval(&env, &tenv, &r)?;
                            t.count(law, 1);
                            if lv != rv {
                                return Ok(Some(json!({
                                    "law": law, "lhs": lhs, "rhs": rhs,
                                    "env": show_env(&model, &[("X", &x), ("^B", b), ("^C", c)]),
                                    "assignment": show_tenv(&model, &env, &tenv),
                                    "left": show(&model, &env, &lt, lv), "right": show(&model, &env, &rt, rv),
                                })));
                            }
                        }
                    }
                }
            }
        }
        Ok(None)
    })
}

// ---------------------------------------------------------------------------
// Free algebras

/// The universal property of `cand` with unit `eta : n -> cand` against every
/// algebra of the model: each `f : n -> U B` has exactly one homomorphic
/// extension. Returns the first failure.
fn universal_property(model: &Model, n: u32, cand: &Alg, eta: &[u32], t: &mut Tally) -> SemResult<Option<Value>> {
    for b in &model.algs {
        let bt = b.as_alg()?.table()?;
        let homs = finmodel::homomorphisms(cand, &bt);
        let mut bad = None;
        finmodel::for_each_function(n, bt.carrier, |f| {
            t.count("mediators", 1);
            let ext: Vec<&Vec<u32>> = homs.iter().filter(|h| (0..n as usize).all(|a| h[eta[a] as usize] == f[a])).collect();
            if ext.len() != 1 {
                bad = Some(json!({ "algebra": model.alg_label(b), "f": f, "extensions": ext }));
                return false;
            }
            true
        });
        if bad.is_some() {
            return Ok(bad);
        }
    }
    Ok(None)
}

/// `T A` with `eta` is free over `A`: unique mediating homomorphisms for
/// every algebra of the model, given by `lfun y => let x <= y in f x`.
pub fn verify_free_algebra(cfg: &ModelConfig) -> VerificationReport {
    run("free-algebra", cfg, |t| {
        let sizes: Vec<u32> = (0..=cfg.bound.min(2)).collect();
        let model = model_with_free(cfg, sizes.clone(), t);
        let (lt, _) = {
            let gamma = ctx(&[("f", "X -> ^B")])?;
            term(&model, &gamma, "lfun y:!X => let x <= y in f x")?
        };
        for &n in &sizes {
            let free = model.spec.free_algebra(n);
            let eta = model.spec.unit(n);
            if let Some(w) = universal_property(&model, n, &free, &eta, t)? {
                return Ok(Some(json!({ "size": n, "failure": w })));
            }
            // the mediator is the denotation of the term, read through !A = T A
            let iso = bang_iso(&model, n, "X")?;
            for b in &model.algs {
                let env = iso.env.extend(TyVar::c("B"), b.clone());
                let f_ty = Type::arrow(Type::vvar("X"), Type::cvar("B"));
                let bt = b.as_alg()?.table()?;
                let homs = finmodel::homomorphisms(&free, &bt);
                let fd = model.dom(&env, &f_ty)?;
                for &f in fd.members()?.iter() {
                    let ftab = table_of(&fd, f)?;
                    let h = homs.iter().find(|h| (0..n as usize).all(|a| h[eta[a] as usize] as Ix == ftab[a])).unwrap();
                    let (m, mty) = model.eval(&env, &[(name("f"), f_ty.clone(), f)], &lt)?;
                    let md = model.dom(&env, &mty)?;
                    t.count("term", 1);
                    for (i, &k) in iso.members.iter().enumerate() {
                        if apply(&md, m, k)? != h[iso.to_t[i] as usize] as Ix {
                            return Ok(Some(json!({
                                "size": n, "algebra": model.alg_label(b), "f": ftab,
                                "reason": "the term's denotation differs from the mediating homomorphism",
                            })));
                        }
                    }
                }
            }
        }
        Ok(None)
    })
}

/// The universal property for an arbitrary candidate in place of `T A`;
/// non-free candidates give counterexamples.
pub fn verify_free_algebra_candidate(cfg: &ModelConfig, n: u32, cand: &Alg, eta: &[u32]) -> VerificationReport {
    run("free-algebra", cfg, |t| {
        let model = Model::from_config(cfg);
        Ok(universal_property(&model, n, cand, eta, t)?.map(|w| json!({ "size": n, "candidate": cand, "eta": eta, "failure": w })))
    })
}

/// `|!A| = |T A|`, with `k |-> k(TA)(eta)` a bijection. The free algebra is
/// not added: without it (or an isomorphic representative) the projection
/// at `T A` is out of bound.
pub fn verify_bang_cardinality(cfg: &ModelConfig, sizes: &[u32]) -> VerificationReport {
    run("bang-cardinality", cfg, |t| {
        let model = Model::from_config(cfg);
        let mut table = Vec::new();
        for &n in sizes {
            let iso = bang_iso(&model, n, "X")?;
            let expect = model.spec.t_size(n);
            t.count("sizes", 1);
            table.push(json!({ "A": n, "bang": iso.members.len(), "T": expect }));
            t.counts.insert("table".into(), json!(table));
            if !iso.is_bijective(expect) {
                return Ok(Some(json!({ "A": n, "bang": iso.members.len(), "T": expect, "image": iso.to_t })));
            }
        }
        Ok(None)
    })
}

// ---------------------------------------------------------------------------
// Relational lifting

/// `!R` computed three ways for all `R` between sets of size at most 2,
/// and `(!R -o Q)(f, g)` iff `(R -> Q)(f . eta, g . eta)`.
pub fn verify_rel_lifting(cfg: &ModelConfig) -> VerificationReport {
    run("rel-lifting", cfg, |t| {
        let max = cfg.bound.min(2);
        let model = model_with_free(cfg, 0..=max, t);
        let spec = model.spec.clone();
        let isos: Vec<BangIso> = (0..=max).map(|n| bang_iso(&model, n, "X")).collect::<SemResult<_>>()?;
        let eta_term = term(&model, &ctx(&[])?, "fun x:X => bang x")?.0;
        let bang_x = bang(&Type::vvar("X"));
        let lolli = Type::lolli(bang_x.clone(), Type::cvar("Y"));
        let arrow = Type::arrow(Type::vvar("X"), Type::cvar("Y"));
        for a in 0..=max {
            for b in 0..=max {
                let (ta, tb) = (spec.free_algebra(a), spec.free_algebra(b));
                let (sa, sb) = (model.set(a)?.clone(), model.set(b)?.clone());
                for r in all_relations(a, b) {
                    let rt = Arc::new(RelTable::new(r.pairs.iter().map(|&(x, y)| (x as Ix, y as Ix))));
                    let renv = RelEnv::new().with(TyVar::v("X"), RelBind { left: sa.clone(), right: sb.clone(), rel: rt.clone() });
                    // (i) the relational interpretation of !X
                    let lifted = model.rel(&renv, &bang_x)?;
                    let (ia, ib) = (&isos[a as usize], &isos[b as usize]);
                    let one = Rel::new(
                        ta.carrier,
                        tb.carrier,
                        lifted.pairs().iter().map(|&(k, l)| (ia.to_t[ia.index_of(k)], ib.to_t[ib.index_of(l)])),
                    );
                    // (ii) closure of eta x eta
                    let (ea, eb) = (spec.unit(a), spec.unit(b));
                    let two = admissible_closure(&Rel::new(ta.carrier, tb.carrier, r.pairs.iter().map(|&(x, y)| (ea[x as usize], eb[y as usize]))), &ta, &tb);
                    // (iii) closure of the image of T on the span A <- R -> B
                    let span: Vec<(u32, u32)> = r.pairs.iter().copied().collect();
                    let k = span.len() as u32;
                    let p1: Vec<u32> = span.iter().map(|p| p.0).collect();
                    let p2: Vec<u32> = span.iter().map(|p| p.1).collect();
                    let (tp1, tp2) = (spec.fmap(k, a, &p1), spec.fmap(k, b, &p2));
                    let three = admissible_closure(&Rel::new(ta.carrier, tb.carrier, tp1.iter().zip(&tp2).map(|(&x, &y)| (x, y))), &ta, &tb);
                    t.count("relations", 1);
                    if one != two || two != three {
                        return Ok(Some(json!({
                            "A": a, "B": b, "R": r.pairs,
                            "interpretation": one.pairs, "eta-closure": two.pairs, "span-closure": three.pairs,
                        })));
                    }
                    // item 3
                    let etas = |side: &Env| -> SemResult<(Arc<Dom>, Ix)> {
                        let (v, vt) = model.eval(side, &[], &eta_term)?;
                        Ok((model.dom(side, &vt)?, v))
                    };
                    let (eda, eva) = etas(&renv.left())?;
                    let (edb, evb) = etas(&renv.right())?;
                    for b1 in &model.algs {
                        for b2 in &model.algs {
                            for q in model.admissible(b1, b2)?.iter() {
                                let e = renv.extend(TyVar::c("Y"), RelBind { left: b1.clone(), right: b2.clone(), rel: q.clone() });
                                let (l, rgt) = (e.left(), e.right());
                                let big = model.rel(&e, &lolli)?;
                                let small = model.rel(&e, &arrow)?;
                                let (ld1, ld2) = (model.dom(&l, &lolli)?, model.dom(&rgt, &lolli)?);
                                let (ad1, ad2) = (model.dom(&l, &arrow)?, model.dom(&rgt, &arrow)?);
                                let restrict = |ld: &Dom, ad: &Dom, ed: &Dom, ev: Ix, f: Ix| -> SemResult<Ix> {
                                    let xs = table_of(ed, ev)?;
                                    let vals: Vec<Ix> = xs.iter().map(|&k| apply(ld, f, k)).collect::<SemResult<_>>()?;
                                    tabulate(ad, &vals)
                                };
                                let gs: Vec<(Ix, Ix)> = ld2
                                    .members()?
                                    .iter()
                                    .map(|&g| Ok((g, restrict(&ld2, &ad2, &edb, evb, g)?)))
                                    .collect::<SemResult<_>>()?;
                                for &f in ld1.members()?.iter() {
                                    let fe = restrict(&ld1, &ad1, &eda, eva, f)?;
                                    for &(g, ge) in &gs {
                                        t.count("item-3", 1);
                                        if big.contains(f, g) != small.contains(fe, ge) {
                                            return Ok(Some(json!({
                                                "A": a, "B": b, "R": r.pairs,
                                                "B1": model.alg_label(b1), "B2": model.alg_label(b2), "Q": q.pairs(),
                                                "f": table_of(&ld1, f)?, "g": table_of(&ld2, g)?,
                                                "lifted": big.contains(f, g), "restricted": small.contains(fe, ge),
                                            })));
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(None)
    })
}

// ---------------------------------------------------------------------------
// Parametric elements and algebraic operations

/// The elements of a closed polymorphic type, as polytables.
pub fn enumerate_parametric_elements(model: &Model, poly: &Type) -> SemResult<Vec<SemValue>> {
    if !poly.ftv().is_empty() {
        return Err(ill(format!("{poly} is not closed")));
    }
    let d = model.dom(&Env::new(), poly)?;
    d.members()?.iter().map(|&x| model.sem_value(&d, x)).collect()
}

/// `forall ^X. ^X -> ... -> ^X` with `n` arguments.
pub fn operation_type(n: u32) -> Type {
    let x = Type::cvar("X");
    Type::ForallC(name("X"), Box::new(Type::arrows(vec![x.clone(); n as usize], x)))
}

/// Families `theta_B : B^n -> B` over the algebras of the model commuting
/// with every homomorphism between them.
pub fn natural_operations(model: &Model, n: u32) -> SemResult<Vec<Box<[Ix]>>> {
    let op = operation_type(n);
    let Type::ForallC(x, body) = &op else { unreachable!() };
    let v = TyVar { sort: Sort::Computation, name: x.clone() };
    let args = arrow_chain(body, &v).unwrap();
    let comps: Vec<Arc<Dom>> =
        model.algs.iter().map(|a| model.dom(&Env::new().with(v.clone(), a.clone()), body)).collect::<SemResult<_>>()?;
    let mut graphs = Vec::new();
    for (i, a) in model.algs.iter().enumerate() {
        for (j, b) in model.algs.iter().enumerate() {
            for h in finmodel::homomorphisms(&a.as_alg()?.table()?, &b.as_alg()?.table()?) {
                graphs.push((i, j, Arc::new(RelTable::new(h.iter().enumerate().map(|(p, &q)| (p as Ix, q as Ix))))));
            }
        }
    }
    model.families_along(&Env::new(), &v, &args, &comps, &graphs)
}

/// Apply a curried `n`-ary table to arguments.
fn apply_n(model: &Model, alg: &Obj, n: u32, f: Ix, args: &[Ix]) -> SemResult<Ix> {
    let mut cur = f;
    for (k, &a) in args.iter().enumerate() {
        let rest = Type::arrows(vec![Type::cvar("X"); n as usize - k], Type::cvar("X"));
        let d = model.dom(&Env::new().with(TyVar::c("X"), alg.clone()), &rest)?;
        cur = apply(&d, cur, a)?;
    }
    Ok(cur)
}

/// Generic effects `T(n)`, algebraic operations of arity `n` and parametric
/// elements of `forall ^X. ^X^n -> ^X` are in bijection, with the maps
/// `t |-> (B, f) |-> B's structure applied to T(f)(t)` and
/// `theta |-> theta_{T n}(eta)`.
pub fn verify_algop(cfg: &ModelConfig, n: u32) -> VerificationReport {
    run("algop", cfg, |t| {
        let model = model_with_free(cfg, [n], t);
        let spec = model.spec.clone();
        let generic = spec.t_size(n);
        let op = operation_type(n);
        let pd = model.dom(&Env::new(), &op)?;
        let parametric: BTreeSet<Box<[Ix]>> = pd.rows().unwrap().iter().cloned().collect();
        let natural: BTreeSet<Box<[Ix]>> = natural_operations(&model, n)?.into_iter().collect();
        t.counts.insert("generic".into(), json!(generic));
        t.counts.insert("natural".into(), json!(natural.len()));
        t.counts.insert("parametric".into(), json!(parametric.len()));
        t.checked += generic + natural.len() as u64 + parametric.len() as u64;
        if parametric != natural {
            let only_p: Vec<_> = parametric.difference(&natural).collect();
            let only_n: Vec<_> = natural.difference(&parametric).collect();
            return Ok(Some(json!({ "reason": "parametric and natural families differ", "only-parametric": only_p, "only-natural": only_n })));
        }
        let free_ix = model.free.iter().find(|(m, _)| *m == n).unwrap().1;
        let free = &model.algs[free_ix];
        let gens: Vec<Ix> = spec.unit(n).iter().map(|&g| g as Ix).collect();
        // generic effect -> family
        let mut image = BTreeSet::new();
        for g in 0..generic as u32 {
            let mut row = Vec::with_capacity(model.algs.len());
            for alg in &model.algs {
                let a = alg.as_alg()?.table()?;
                let env = Env::new().with(TyVar::c("X"), alg.clone());
                let body = match &op {
                    Type::ForallC(_, b) => b,
                    _ => unreachable!(),
                };
                let d = model.dom(&env, body)?;
                let mut vals = Vec::new();
                finmodel::for_each_function(n, a.carrier, |args| {
                    vals.push(a.eval_effect(&spec, n, g, args) as Ix);
                    true
                });
                // for_each_function varies the first argument fastest; curried
                // encoding wants the first argument most significant
                let mut by_tuple = vec![0; vals.len()];
                let c = a.carrier as usize;
                for (i, &v) in vals.iter().enumerate() {
                    let mut digits = Vec::with_capacity(n as usize);
                    let mut r = i;
                    for _ in 0..n {
                        digits.push(r % c);
                        r /= c.max(1);
                    }
                    let pos = digits.iter().fold(0usize, |acc, &dgt| acc * c + dgt);
                    by_tuple[pos] = v;
                }
                row.push(encode_curried(&d, &by_tuple)?);
            }
            let row = row.into_boxed_slice();
            let back = apply_n(&model, free, n, row[free_ix], &gens)?;
            if back != g as Ix {
                return Ok(Some(json!({ "reason": "effect -> operation -> effect is not the identity", "effect": t_label(&spec, n, g), "back": t_label(&spec, n, back as u32) })));
            }
            if !natural.contains(&row) {
                return Ok(Some(json!({ "reason": "the operation of a generic effect is not natural", "effect": t_label(&spec, n, g) })));
            }
            image.insert(row);
        }
        // family -> generic effect -> family
        for row in &natural {
            let g = apply_n(&model, free, n, row[free_ix], &gens)?;
            let again: Vec<_> = image.iter().filter(|r| apply_n(&model, free, n, r[free_ix], &gens).ok() == Some(g)).collect();
            if again.len() != 1 || *again[0] != *row {
                return Ok(Some(json!({ "reason": "operation -> effect -> operation is not the identity", "operation": row })));
            }
        }
        Ok(None)
    })
}

// ---------------------------------------------------------------------------
// Exception handling

/// One row of the handler's case split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CaseRow {
    pub exception: String,
    #[serde(rename = "A")]
    pub size: u32,
    pub p: String,
    pub q: String,
    pub result: String,
}

/// The expected case split: `p` unless `p = inr(e)`, in which case `q`.
pub fn expected_case(e: usize, n: u32, p: u32, q: u32) -> u32 {
    if p == n + e as u32 {
        q
    } else {
        p
    }
}

/// `handle[e]` at a set: a homomorphism `(F A)^2 -> F A`, natural in `A`,
/// related to itself at every relation, with the expected case split.
pub fn verify_handler(cfg: &ModelConfig) -> Result<VerificationReport, ConfigError> {
    if cfg.monad != MonadKind::Exception || cfg.exceptions.is_empty() {
        return Err(ConfigError("the handler needs the exception monad with at least one exception".into()));
    }
    Ok(run("handler", cfg, |t| {
        let max = cfg.bound.min(2);
        let model = model_with_free(cfg, 0..=max, t);
        let spec = model.spec.clone();
        let (inl, inr) = model.two()?;
        let mut cases = Vec::new();
        // shared by every exception so the relation caches are reused
        let mut renvs = Vec::new();
        for a in 0..=max {
            for b in 0..=max {
                for r in all_relations(a, b) {
                    let rt = Arc::new(RelTable::new(r.pairs.iter().map(|&(x, y)| (x as Ix, y as Ix))));
                    let renv = RelEnv::new().with(TyVar::v("X"), RelBind { left: model.set(a)?.clone(), right: model.set(b)?.clone(), rel: rt });
                    renvs.push((a, b, r, renv));
                }
            }
        }
        for (ei, e) in spec.exceptions.iter().enumerate() {
            let h_term = |v: &str| Term::ty_app_v(Term::constant(&format!("handle[{e}]")), Type::vvar(v));
            // (a) homomorphism and the case split
            let mut handlers = Vec::new();
            for n in 0..=max {
                let iso = bang_iso(&model, n, "X")?;
                let env = iso.env.clone();
                let (h, hty) = model.eval(&env, &[], &h_term("X"))?;
                let hd = model.dom(&env, &hty)?;
                t.count("homomorphism", 1);
                if !hd.contains(h)? {
                    return Ok(Some(json!({ "exception": e, "A": n, "reason": "not a homomorphism from the product algebra" })));
                }
                let Type::Lolli(kty, _) = &hty else { unreachable!() };
                let kd = model.dom(&env, kty)?;
                let arg_members = match &kd.shape {
                    crate::interp::Shape::Fun { arg, .. } => arg.members()?,
                    _ => unreachable!(),
                };
                if arg_members.len() != 2 {
                    return Err(SemError::OutOfBound("2 = 1 + 1 needs sets of size 2".into()));
                }
                let tn = spec.t_size(n) as u32;
                for p in 0..tn {
                    for q in 0..tn {
                        let vals: Vec<Ix> = arg_members.iter().map(|&m| if m == inl { iso.from_t[&p] } else if m == inr { iso.from_t[&q] } else { unreachable!() }).collect();
                        let k = tabulate(&kd, &vals)?;
                        let res = apply(&hd, h, k)?;
                        let got = iso.to_t[iso.index_of(res)];
                        let want = expected_case(ei, n, p, q);
                        t.count("cases", 1);
                        let row = CaseRow { exception: e.clone(), size: n, p: t_label(&spec, n, p), q: t_label(&spec, n, q), result: t_label(&spec, n, got) };
                        if got != want {
                            return Ok(Some(json!({ "reason": "case split differs", "row": row, "expected": t_label(&spec, n, want) })));
                        }
                        cases.push(row);
                    }
                }
                handlers.push((h, hty));
            }
            // (b) naturality: handle_B . (!f)^2 = !f . handle_A
            let map_term = term(&model, &ctx(&[("f", "X -> Y")])?, "fun z:!X => let x <= z in bang (f x)")?.0;
            for a in 0..=max {
                for b in 0..=max {
                    let env = Env::new().with(TyVar::v("X"), model.set(a)?.clone()).with(TyVar::v("Y"), model.set(b)?.clone());
                    let (ha, haty) = model.eval(&env, &[], &h_term("X"))?;
                    let (hb, hbty) = model.eval(&env, &[], &h_term("Y"))?;
                    let (had, hbd) = (model.dom(&env, &haty)?, model.dom(&env, &hbty)?);
                    let (Type::Lolli(ka, _), Type::Lolli(kb, _)) = (&haty, &hbty) else { unreachable!() };
                    let (kad, kbd) = (model.dom(&env, ka)?, model.dom(&env, kb)?);
                    let f_ty = Type::arrow(Type::vvar("X"), Type::vvar("Y"));
                    for &f in model.dom(&env, &f_ty)?.members()?.iter() {
                        let (bf, bfty) = model.eval(&env, &[(name("f"), f_ty.clone(), f)], &map_term)?;
                        let bfd = model.dom(&env, &bfty)?;
                        for &k in kad.members()?.iter() {
                            let ktab = table_of(&kad, k)?;
                            let pushed: Vec<Ix> = ktab.iter().map(|&x| apply(&bfd, bf, x)).collect::<SemResult<_>>()?;
                            let lhs = apply(&hbd, hb, tabulate(&kbd, &pushed)?)?;
                            let rhs = apply(&bfd, bf, apply(&had, ha, k)?)?;
                            t.count("naturality", 1);
                            if lhs != rhs {
                                return Ok(Some(json!({ "exception": e, "A": a, "B": b, "f": show(&model, &env, &f_ty, f), "k": ktab, "reason": "not natural" })));
                            }
                        }
                    }
                }
            }
            // (c) relation preservation for every R between sets
            let hty = &handlers[0].1;
            for (a, b, r, renv) in &renvs {
                t.count("relations", 1);
                if !model.related(renv, hty, handlers[*a as usize].0, handlers[*b as usize].0)? {
                    return Ok(Some(json!({ "exception": e, "A": a, "B": b, "R": r.pairs, "reason": "not relation-preserving" })));
                }
            }
        }
        t.counts.insert("table".into(), json!(cases));
        Ok(None)
    }))
}

/// The handler's case split for `|A| <= max`, computed from the denotation.
pub fn handler_case_table(cfg: &ModelConfig) -> Result<Vec<CaseRow>, ConfigError> {
    let rep = verify_handler(cfg)?;
    let rows = rep.counts.as_ref().and_then(|c| c.get("table")).cloned().unwrap_or(json!([]));
    Ok(serde_json::from_value::<Vec<Value>>(rows)
        .unwrap_or_default()
        .into_iter()
        .map(|r| CaseRow {
            exception: r["exception"].as_str().unwrap_or_default().to_string(),
            size: r["A"].as_u64().unwrap_or(0) as u32,
            p: r["p"].as_str().unwrap_or_default().to_string(),
            q: r["q"].as_str().unwrap_or_default().to_string(),
            result: r["result"].as_str().unwrap_or_default().to_string(),
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Encodings

fn hom_tables(a: &Algebra, b: &Algebra) -> SemResult<Vec<Vec<u32>>> {
    Ok(finmodel::homomorphisms(&a.table()?, &b.table()?))
}

/// Universal properties of the computation-type encodings: `0°` is initial,
/// `(+)` is a coproduct, `A° = forall ^X. (A° -o ^X) -> ^X`, and the Girard
/// maps between `A -> B°` and `!A -o B°` are mutually inverse.
pub fn verify_encodings(cfg: &ModelConfig) -> VerificationReport {
    run("encodings", cfg, |t| {
        let model = model_with_free(cfg, 0..=cfg.bound.min(2), t);
        // initial object
        let zero = model.alg(&Env::new(), &zero_c())?;
        for b in &model.algs {
            t.count("initial", 1);
            let hs = hom_tables(&zero, b.as_alg()?)?;
            if hs.len() != 1 {
                return Ok(Some(json!({ "reason": "0 is not initial", "algebra": model.alg_label(b), "homomorphisms": hs.len() })));
            }
        }
        // coproducts
        let gamma = ctx(&[("f", "^A -o ^C"), ("g", "^B -o ^C")])?;
        let (inl, _) = term(&model, &[], "lfun a:^A => inlo[^B] a")?;
        let (inr, _) = term(&model, &[], "lfun b:^B => inro[^A] b")?;
        let (med, _) = term(&model, &gamma, "lfun s:^A (+) ^B => s @[^C] f g")?;
        let sum_ty = ty("^A (+) ^B")?;
        // summands and targets within the bound; quantification still sees every algebra
        let within: Vec<&Obj> = model.algs.iter().filter(|a| a.count().is_ok_and(|c| c <= cfg.bound as u64)).collect();
        for &a in &within {
            for &b in &within {
                let env = Env::new().with(TyVar::c("A"), a.clone()).with(TyVar::c("B"), b.clone());
                let s = model.alg(&env, &sum_ty)?;
                let (il, ilty) = model.eval(&env, &[], &inl)?;
                let (ir, irty) = model.eval(&env, &[], &inr)?;
                let il = table_of(&*model.dom(&env, &ilty)?, il)?;
                let ir = table_of(&*model.dom(&env, &irty)?, ir)?;
                for &c in &within {
                    let env = env.extend(TyVar::c("C"), c.clone());
                    let hs = hom_tables(&s, c.as_alg()?)?;
                    let fty = ty("^A -o ^C")?;
                    let gty = ty("^B -o ^C")?;
                    let fd = model.dom(&env, &fty)?;
                    let gd = model.dom(&env, &gty)?;
                    for &f in fd.members()?.iter() {
                        let ft = table_of(&fd, f)?;
                        for &g in gd.members()?.iter() {
                            let gt = table_of(&gd, g)?;
                            t.count("coproduct", 1);
                            let ok: Vec<&Vec<u32>> = hs
                                .iter()
                                .filter(|h| il.iter().enumerate().all(|(x, &y)| h[y as usize] as Ix == ft[x]) && ir.iter().enumerate().all(|(x, &y)| h[y as usize] as Ix == gt[x]))
                                .collect();
                            let tenv = vec![(name("f"), fty.clone(), f), (name("g"), gty.clone(), g)];
                            let (m, mty) = model.eval(&env, &tenv, &med)?;
                            let mt: Vec<u32> = table_of(&*model.dom(&env, &mty)?, m)?.into_iter().map(|x| x as u32).collect();
                            if ok.len() != 1 || *ok[0] != mt {
                                return Ok(Some(json!({
                                    "reason": "coproduct mediator is not unique or differs from the case term",
                                    "A": model.alg_label(a), "B": model.alg_label(b), "C": model.alg_label(c),
                                    "f": ft, "g": gt, "mediators": ok, "term": mt,
                                })));
                            }
                        }
                    }
                }
            }
        }
        // A° = forall ^X. (A° -o ^X) -> ^X
        let (to, from) = yoneda_iso_terms(&Type::cvar("A"));
        for a in &model.algs {
            let env = Env::new().with(TyVar::c("A"), a.clone());
            let (tv, tty) = model.eval(&env, &[], &to)?;
            let (fv, fty) = model.eval(&env, &[], &from)?;
            let (td, fd) = (model.dom(&env, &tty)?, model.dom(&env, &fty)?);
            let Type::Lolli(_, poly) = &tty else { unreachable!() };
            for &x in a.dom().members()?.iter() {
                t.count("yoneda", 1);
                if apply(&fd, fv, apply(&td, tv, x)?)? != x {
                    return Ok(Some(json!({ "reason": "from . to is not the identity", "A": model.alg_label(a), "x": x })));
                }
            }
            for &m in model.dom(&env, poly)?.members()?.iter() {
                t.count("yoneda", 1);
                if apply(&td, tv, apply(&fd, fv, m)?)? != m {
                    return Ok(Some(json!({ "reason": "to . from is not the identity", "A": model.alg_label(a), "m": show(&model, &env, poly, m) })));
                }
            }
        }
        // Girard decomposition
        let (fwd, bwd) = girard_iso_terms(&Type::vvar("X"), &Type::cvar("B"));
        for x in small_sets(&model, 2) {
            for b in &model.algs {
                let env = Env::new().with(TyVar::v("X"), x.clone()).with(TyVar::c("B"), b.clone());
                let (fv, fty) = model.eval(&env, &[], &fwd)?;
                let (bv, bty) = model.eval(&env, &[], &bwd)?;
                let (fd, bd) = (model.dom(&env, &fty)?, model.dom(&env, &bty)?);
                let Type::Arrow(arrow_ty, lolli_ty) = &fty else { unreachable!() };
                for &f in model.dom(&env, arrow_ty)?.members()?.iter() {
                    t.count("girard", 1);
                    if apply(&bd, bv, apply(&fd, fv, f)?)? != f {
                        return Ok(Some(json!({ "reason": "bwd . fwd is not the identity", "X": model.alg_label(&x), "B": model.alg_label(b), "f": show(&model, &env, arrow_ty, f) })));
                    }
                }
                for &g in model.dom(&env, lolli_ty)?.members()?.iter() {
                    t.count("girard", 1);
                    if apply(&fd, fv, apply(&bd, bv, g)?)? != g {
                        return Ok(Some(json!({ "reason": "fwd . bwd is not the identity", "X": model.alg_label(&x), "B": model.alg_label(b), "g": show(&model, &env, lolli_ty, g) })));
                    }
                }
            }
        }
        Ok(None)
    })
}

// ---------------------------------------------------------------------------
// Model lemmas

/// Types of depth at most 3 over `X` and `^A` used for identity extension
/// and the other structural lemmas.
pub const TYPE_BATTERY: &[&str] = &[
    "X",
    "^A",
    "X -> X",
    "X -> ^A",
    "^A -> ^A",
    "^A -o ^A",
    "(X -> X) -> X",
    "(X -> ^A) -> ^A",
    "X -> X -> X",
    "^A -o X -> ^A",
    "(^A -o ^A) -> ^A",
    "^A -> X -> ^A",
    "(X -> X) -> X -> X",
    "forall Y. Y -> Y",
    "forall Y. Y -> X",
    "forall Y. (Y -> X) -> Y -> X",
    "forall Y. (Y -> Y) -> Y -> Y",
    "forall ^Y. ^Y",
    "forall ^Y. ^Y -> ^Y",
    "forall ^Y. ^Y -> ^Y -> ^Y",
    "forall ^Y. (X -> ^Y) -> ^Y",
    "forall ^Y. (^A -o ^Y) -> ^Y",
    "(forall Y. Y -> Y) -> X",
    "X -> forall ^Y. ^Y -> ^Y",
];

fn battery() -> SemResult<Vec<(String, Type)>> {
    TYPE_BATTERY.iter().map(|s| Ok((s.to_string(), ty(s)?))).collect()
}

/// Environments binding the free variables of `t` to every combination of
/// representatives.
fn envs_for(model: &Model, vars: &BTreeSet<TyVar>) -> Vec<Env> {
    let mut out = vec![Env::new()];
    for v in vars {
        out = out.iter().flat_map(|e| model.reps(v.sort).iter().map(move |o| e.extend(v.clone(), o.clone()))).collect();
    }
    out
}

/// Relational environments over the free variables `vars`: every pair of
/// representatives and every admissible relation between them.
fn rel_envs_for(model: &Model, vars: &BTreeSet<TyVar>) -> SemResult<Vec<RelEnv>> {
    let mut out = vec![RelEnv::new()];
    for v in vars {
        let mut next = Vec::new();
        for e in &out {
            for a in model.reps(v.sort) {
                for b in model.reps(v.sort) {
                    for q in model.admissible(a, b)?.iter() {
                        next.push(e.extend(v.clone(), RelBind { left: a.clone(), right: b.clone(), rel: q.clone() }));
                    }
                }
            }
        }
        out = next;
    }
    Ok(out)
}

/// The relational interpretation at identity relations is the identity.
pub fn verify_identity_extension(cfg: &ModelConfig) -> VerificationReport {
    run("identity-extension", cfg, |t| {
        let model = Model::from_config(cfg);
        for (text, b) in battery()? {
            for env in envs_for(&model, &b.ftv()) {
                let r = model.rel(&model.diag_env(&env, b.ftv())?, &b)?;
                let members = model.dom(&env, &b)?.members()?;
                t.count("types", 1);
                let diag = members.len() == r.len() && members.iter().all(|&x| r.contains(x, x));
                if !diag {
                    return Ok(Some(json!({ "type": text, "size": members.len(), "pairs": r.len() })));
                }
            }
        }
        Ok(None)
    })
}

/// Domains listed in full by the substitution check.
const LISTABLE: u64 = 1 << 16;

/// Three further structural lemmas on the battery: the relation at the
/// opposite environment is the opposite relation; interpreting `B[A/X]`
/// agrees with interpreting `B` with `X` bound to the meaning of `A`;
/// projections out of polymorphic computation types are homomorphisms.
pub fn verify_model_lemmas(cfg: &ModelConfig) -> VerificationReport {
    run("model-lemmas", cfg, |t| {
        let model = Model::from_config(cfg);
        let types = battery()?;
        for (text, b) in &types {
            for renv in rel_envs_for(&model, &b.ftv())? {
                t.count("opposite", 1);
                let r = model.rel(&renv, b)?;
                let o = model.rel(&renv.opposite(), b)?;
                if !o.same_pairs(&r.opposite()) {
                    return Ok(Some(json!({ "lemma": "opposite", "type": text })));
                }
            }
        }
        let value_args = ["forall Y. Y -> Y", "^A"];
        let comp_args = ["forall ^Y. ^Y -> ^Y", "!X"];
        for (text, b) in &types {
            for (var, args) in [(TyVar::v("X"), &value_args[..]), (TyVar::c("A"), &comp_args[..])] {
                if !b.has_free(&var) {
                    continue;
                }
                for a_text in args {
                    let a = ty(a_text)?;
                    let substituted = subst_type(b, &var, &a).map_err(|e| ill(e.to_string()))?;
                    let mut vars = b.ftv();
                    vars.remove(&var);
                    vars.extend(a.ftv());
                    for env in envs_for(&model, &vars) {
                        let inner = env.extend(var.clone(), model.obj(&env, var.sort, &a)?);
                        let listable = |d: &Dom| if d.is_dense() { d.count().is_ok_and(|n| n <= LISTABLE) } else { d.members().is_ok() };
                        let (d1, d2) = match (model.dom(&env, &substituted), model.dom(&inner, b)) {
                            (Ok(d1), Ok(d2)) if listable(&d1) && listable(&d2) => (d1, d2),
                            (Err(e @ SemError::IllFormed(_)), _) | (_, Err(e @ SemError::IllFormed(_))) => return Err(e),
                            _ => {
                                t.count("too-large", 1);
                                continue;
                            }
                        };
                        t.count("substitution", 1);
                        let (m1, m2) = (d1.members()?, d2.members()?);
                        let same = m1.len() == m2.len()
                            && m1.iter().zip(m2.iter()).all(|(&x, &y)| model.sem_value(&d1, x).ok() == model.sem_value(&d2, y).ok());
                        if !same {
                            return Ok(Some(json!({ "lemma": "substitution", "type": text, "var": var.to_string(), "arg": a_text })));
                        }
                    }
                }
            }
        }
        for (text, b) in &types {
            let (Type::ForallC(x, body) | Type::ForallV(x, body)) = b else { continue };
            if !b.is_computation() {
                continue;
            }
            let sort = if matches!(b, Type::ForallC(..)) { Sort::Computation } else { Sort::Value };
            let v = TyVar { sort, name: x.clone() };
            for env in envs_for(&model, &b.ftv()) {
                let whole = model.alg(&env, b)?;
                for (i, r) in model.reps(sort).iter().enumerate() {
                    let part = model.alg(&env.extend(v.clone(), r.clone()), body)?;
                    let proj: Vec<Ix> = whole.dom.rows().unwrap().iter().map(|row| row[i]).collect();
                    t.count("projection", 1);
                    if !is_hom(&proj, &whole, &part)? {
                        return Ok(Some(json!({ "lemma": "projection", "type": text, "at": model.alg_label(r) })));
                    }
                }
            }
        }
        Ok(None)
    })
}

// ---------------------------------------------------------------------------
// Abstraction theorem

/// Related environments give related denotations, for seeded random
/// judgments; stoup-typed judgments also denote homomorphisms in the stoup.
/// Judgments whose types do not fit the model are discarded and replaced by
/// the next ones from the generator.
pub fn verify_abstraction(cfg: &ModelConfig, seed: u64, count: usize) -> VerificationReport {
    run("abstraction", cfg, |t| {
        let model = Model::from_config(cfg);
        let mut gen = Generator::new(&model.sig, GenConfig::semantic(), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut accepted, mut drawn) = (0, 0);
        while accepted < count {
            if drawn >= 20 * count.max(1) {
                return Err(SemError::OutOfBound(format!("only {accepted} of {drawn} generated judgments fit the model")));
            }
            let j = gen.judgment();
            drawn += 1;
            match abstraction_instance(&model, &j, drawn - 1, &mut rng, t) {
                Ok(None) => accepted += 1,
                Ok(Some(w)) => return Ok(Some(w)),
                Err(SemError::OutOfBound(_)) => t.count("discarded", 1),
                Err(e) => return Err(e),
            }
        }
        t.counts.insert("terms".into(), json!(accepted));
        Ok(None)
    })
}

fn abstraction_instance(model: &Model, j: &Judgment, i: usize, rng: &mut ChaCha8Rng, t: &mut Tally) -> Found {
    const PAIRS_PER_ENV: usize = 6;
    let rty = typecheck(&model.sig, j).map_err(|e| ill(e.to_string()))?;
    let mut vars: Vec<(Name, Type)> = j.gamma.clone();
    vars.extend(j.delta.clone());
    let mut ftv = j.context_ftv();
    ftv.extend(rty.ftv());
    ftv.extend(j.subject.ftv());
    for renv in rel_envs_for(model, &ftv)? {
        let (l, r) = (renv.left(), renv.right());
        let mut choices = Vec::new();
        for (_, vt) in &vars {
            choices.push(model.rel(&renv, vt)?);
        }
        let total: u128 = choices.iter().map(|c| c.len() as u128).product();
        if total == 0 {
            continue;
        }
        let picks: Vec<Vec<usize>> = if total <= PAIRS_PER_ENV as u128 {
            let mut all = vec![Vec::new()];
            for c in &choices {
                all = all.iter().flat_map(|p| (0..c.len()).map(move |k| [p.clone(), vec![k]].concat())).collect();
            }
            all
        } else {
            (0..PAIRS_PER_ENV).map(|_| choices.iter().map(|c| rng.gen_range(0..c.len())).collect()).collect()
        };
        for pick in picks {
            let mut te1 = Vec::new();
            let mut te2 = Vec::new();
            for ((x, vt), (c, &k)) in vars.iter().zip(choices.iter().zip(&pick)) {
                let (a, b) = c.pairs()[k];
                te1.push((x.clone(), vt.clone(), a));
                te2.push((x.clone(), vt.clone(), b));
            }
            let (v1, _) = model.eval(&l, &te1, &j.subject)?;
            let (v2, _) = model.eval(&r, &te2, &j.subject)?;
            t.count("relational", 1);
            if !model.related(&renv, &rty, v1, v2)? {
                return Ok(Some(json!({
                    "judgment": i, "term": j.subject.to_string(), "type": rty.to_string(),
                    "left": show_tenv(model, &l, &te1), "right": show_tenv(model, &r, &te2),
                })));
            }
        }
    }
    let Some((x, xt)) = &j.delta else { return Ok(None) };
    for env in envs_for(model, &ftv) {
        let envs = assignments(model, &env, &j.gamma, 1 << 20)?;
        let picks: Vec<&TermEnv> = if envs.len() <= PAIRS_PER_ENV {
            envs.iter().collect()
        } else {
            (0..PAIRS_PER_ENV).map(|_| &envs[rng.gen_range(0..envs.len())]).collect()
        };
        let (da, ra) = (model.alg(&env, xt)?, model.alg(&env, &rty)?);
        for te in picks {
            let mut table = Vec::new();
            for &d in da.dom.members()?.iter() {
                let mut te = te.clone();
                te.push((x.clone(), xt.clone(), d));
                table.push(model.eval(&env, &te, &j.subject)?.0);
            }
            t.count("homomorphism", 1);
            if !is_hom(&table, &da, &ra)? {
                return Ok(Some(json!({ "judgment": i, "term": j.subject.to_string(), "reason": "not a homomorphism in the stoup", "table": table })));
            }
        }
    }
    Ok(None)
}

// ---------------------------------------------------------------------------
// Monad and relation laws, syntactic suites

/// Pairs `(f, g)` per size triple checked exhaustively before sampling.
pub const MONAD_PAIR_BUDGET: u64 = 1 << 20;

pub fn verify_monad_laws(cfg: &ModelConfig, max: u32, seed: u64) -> VerificationReport {
    run("monad-laws", cfg, |t| {
        let rep = check_monad_laws(&cfg.spec(), max, MONAD_PAIR_BUDGET, seed);
        t.count("instances", rep.instances);
        if !rep.exhaustive {
            t.notes.push("associativity sampled for the largest size triples".into());
        }
        Ok(rep.failure.map(|f| json!({ "failure": f })))
    })
}

/// The objects of the model for the relation axioms: sets and algebras.
fn objects(cfg: &ModelConfig) -> Vec<Object> {
    let spec = cfg.spec();
    let mut algs = finmodel::enumerate_algebras(&spec, cfg.bound);
    if cfg.include_free_algebras {
        finmodel::append_free_algebras(&spec, &mut algs, &(0..=cfg.bound).collect::<Vec<_>>());
    }
    (0..=cfg.bound).map(Object::Set).chain(algs.into_iter().map(Object::Alg)).collect()
}

pub fn verify_relation_axioms(cfg: &ModelConfig) -> VerificationReport {
    run("relation-axioms", cfg, |t| {
        let [r1, r2, r3] = check_relation_axioms(&objects(cfg));
        for (k, r) in [("R1", &r1), ("R2", &r2), ("R3", &r3)] {
            t.count(k, r.instances);
            if let Some(f) = &r.failure {
                return Ok(Some(json!({ "axiom": k, "failure": f })));
            }
        }
        Ok(None)
    })
}

/// Unicity of types and both substitution lemmas on seeded judgments.
pub fn verify_metatheory(cfg: &ModelConfig, seed: u64, count: usize) -> VerificationReport {
    run("metatheory", cfg, |t| {
        let model = Model::from_config(cfg);
        let mut gen = Generator::new(&model.sig, GenConfig::default(), seed);
        let corpus: Vec<_> = (0..count).map(|_| gen.judgment()).collect();
        let u = check_unicity(&model.sig, &corpus);
        t.count("unicity", u.checked as u64);
        if let Some(f) = u.failures.first() {
            return Ok(Some(json!({ "property": "unicity", "failure": f })));
        }
        let sample: Vec<_> = (0..count).map(|i| gen.subst_instance(i % 2 == 1)).collect();
        let s = check_substitution_lemma(&model.sig, &sample);
        t.count("substitution", s.checked as u64);
        Ok(s.failures.first().map(|f| json!({ "property": "substitution", "failure": f })))
    })
}

/// The call-by-push-value type corpus with its expected translations.
pub fn cbpv_corpus() -> Vec<(CbpvType, &'static str)> {
    use CbpvComp as C;
    use CbpvVal as V;
    let x = || V::Var(name("X"));
    let y = || V::Var(name("Y"));
    let b = || C::Var(name("B"));
    let bx = |v: V| Box::new(v);
    let bc = |c: C| Box::new(c);
    vec![
        (CbpvType::Comp(C::F(bx(x()))), "!X"),
        (CbpvType::Val(V::U(bc(C::F(bx(x()))))), "!X"),
        (CbpvType::Comp(C::Arrow(bx(x()), bc(b()))), "X -> ^B"),
        (CbpvType::Val(V::Sum(bx(x()), bx(y()))), "X + Y"),
        (CbpvType::Val(V::Prod(bx(x()), bx(y()))), "X * Y"),
        (CbpvType::Val(V::Unit), "1"),
        (CbpvType::Val(V::Zero), "0"),
        (CbpvType::Comp(C::Prod(bc(b()), bc(C::F(bx(x()))))), "^B *o !X"),
        (CbpvType::Comp(C::Top), "1o"),
        (CbpvType::Comp(C::Arrow(bx(V::Sum(bx(x()), bx(V::Unit))), bc(C::F(bx(V::Prod(bx(x()), bx(y()))))))), "X + 1 -> !(X * Y)"),
    ]
}

/// Each corpus type translates to its expected encoding, which is well formed
/// and of the expected kind.
pub fn verify_cbpv(cfg: &ModelConfig) -> VerificationReport {
    run("cbpv", cfg, |t| {
        for (src, want) in cbpv_corpus() {
            let got = cbpv_translate_type(&src);
            let expect = ty(want)?;
            t.count("types", 1);
            let kind_ok = match &src {
                CbpvType::Comp(_) => got.is_computation(),
                CbpvType::Val(_) => crate::kernel::classify_type(&got).is_ok(),
            };
            if !alpha_eq_type(&got, &expect) || !kind_ok {
                return Ok(Some(json!({ "source": format!("{src:?}"), "got": got.to_string(), "expected": want })));
            }
        }
        Ok(None)
    })
}

// ---------------------------------------------------------------------------
// Suites

pub const SUITES: &[&str] = &[
    "monad-laws",
    "relation-axioms",
    "metatheory",
    "identity-extension",
    "model-lemmas",
    "abstraction",
    "bang-laws",
    "free-algebra",
    "bang-cardinality",
    "rel-lifting",
    "algop",
    "handler",
    "encodings",
    "cbpv",
];

/// Run one suite, or every applicable one for `all`.
pub fn run_suite(suite: &str, cfg: &ModelConfig, p: &Params) -> Result<Vec<VerificationReport>, ConfigError> {
    if suite == "all" {
        let mut out = Vec::new();
        // the cardinality check needs the free algebras to find T A at all
        let with_free = ModelConfig { include_free_algebras: true, ..cfg.clone() };
        for s in SUITES {
            let c = if *s == "bang-cardinality" { &with_free } else { cfg };
            match run_suite(s, c, p) {
                Ok(r) => out.extend(r),
                Err(_) if *s == "handler" => {}
                Err(e) => return Err(e),
            }
        }
        return Ok(out);
    }
    let one = match suite {
        "monad-laws" => verify_monad_laws(cfg, cfg.bound.max(1), p.seed),
        "relation-axioms" => verify_relation_axioms(cfg),
        "metatheory" => verify_metatheory(cfg, p.seed, p.terms),
        "identity-extension" => verify_identity_extension(cfg),
        "model-lemmas" => verify_model_lemmas(cfg),
        "abstraction" => verify_abstraction(cfg, p.seed, p.terms),
        "bang-laws" => verify_bang_laws(cfg),
        "free-algebra" => verify_free_algebra(cfg),
        "bang-cardinality" => {
            let sizes = p.sizes.clone().unwrap_or_else(|| (0..=cfg.bound.min(2)).collect());
            verify_bang_cardinality(cfg, &sizes)
        }
        "rel-lifting" => verify_rel_lifting(cfg),
        "algop" => verify_algop(cfg, p.arity.unwrap_or(2)),
        "handler" => verify_handler(cfg)?,
        "encodings" => verify_encodings(cfg),
        "cbpv" => verify_cbpv(cfg),
        other => return Err(ConfigError(format!("unknown suite {other}; expected one of {} or all", SUITES.join(", ")))),
    };
    Ok(vec![one])
}

/// The first element of `Alg` values that are not free: used as negative controls.
pub fn pointed_pair(spec: &MonadSpec) -> Alg {
    match spec.kind {
        MonadKind::Exception => Alg { carrier: 2, ops: AlgOps::Exception { raise: vec![0; spec.n_exceptions()] } },
        MonadKind::Identity => Alg { carrier: 2, ops: AlgOps::Identity },
        MonadKind::Powerset => Alg { carrier: 2, ops: AlgOps::Semilattice { join: vec![0, 1, 1, 1] } },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exc(bound: u32, free: bool) -> ModelConfig {
        ModelConfig { monad: MonadKind::Exception, exceptions: vec!["e".into()], bound, include_free_algebras: free }
    }

    #[test]
    fn parametric_elements_of_small_types() {
        let model = Model::from_config(&exc(2, false));
        assert_eq!(enumerate_parametric_elements(&model, &ty("forall ^X. ^X -> ^X").unwrap()).unwrap().len(), 2);
        assert_eq!(enumerate_parametric_elements(&model, &ty("forall ^X. ^X").unwrap()).unwrap().len(), 1);
    }

    #[test]
    fn bang_cardinality_small() {
        let r = verify_bang_cardinality(&exc(2, true), &[0, 1, 2]);
        assert!(r.verified(), "{}", r.summary());
        let r = verify_bang_cardinality(&exc(2, false), &[2]);
        assert_eq!(r.status, Status::OutOfBound, "{}", r.summary());
    }

    #[test]
    fn non_free_candidate_is_rejected() {
        let cfg = exc(2, false);
        let cand = pointed_pair(&cfg.spec());
        let r = verify_free_algebra_candidate(&cfg, 0, &cand, &[]);
        assert_eq!(r.status, Status::Counterexample);
        // the witness names an algebra and a map with more than one extension
        let w = r.witness.unwrap();
        assert!(w["failure"]["extensions"].as_array().unwrap().len() > 1);
        let free = cfg.spec().free_algebra(0);
        assert!(verify_free_algebra_candidate(&cfg, 0, &free, &[]).verified());
    }

    #[test]
    fn expected_case_split() {
        let spec = MonadSpec::exception(&["e1", "e2"]);
        // |A| = 1: inl a0 = 0, inr e1 = 1, inr e2 = 2
        assert_eq!(expected_case(0, 1, 1, 2), 2);
        assert_eq!(expected_case(0, 1, 0, 2), 0);
        assert_eq!(expected_case(0, 1, 2, 0), 2);
        assert_eq!(t_label(&spec, 1, 2), "inr e2");
    }

    #[test]
    fn unknown_suite_is_a_config_error() {
        assert!(run_suite("nope", &exc(1, false), &Params::default()).is_err());
    }
}

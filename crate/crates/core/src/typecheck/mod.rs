//! Algorithmic typing for judgments `gamma | delta |- t : B`.
//!
//! The stoup `delta` holds at most one variable, of computation type, which
//! must be used exactly once in a linear position. The checker is syntax
//! directed; the only choice point is application, resolved by locating the
//! stoup variable: if it occurs in the head, the head must be an ordinary
//! function typed with the stoup; otherwise the head is typed with an empty
//! stoup and, when it is a linear function, the stoup flows to the argument.

pub mod gen;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::kernel::{
    alpha_eq_type, classify_type, subst_term, subst_type, Judgment, Kind, Name, Sort, Term, TyVar, Type,
};
use crate::surface::SourceSpan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ErrorCode {
    UnboundVar,
    StoupViolation,
    KindMismatch,
    AppMismatch,
    EscapingTyVar,
    NonComputationStoup,
}

#[derive(Clone, Debug, PartialEq, Error, Serialize)]
#[error("{code:?}: {detail}")]
pub struct TypeError {
    pub code: ErrorCode,
    pub span: SourceSpan,
    pub detail: String,
}

impl TypeError {
    pub fn new(code: ErrorCode, detail: impl Into<String>) -> Self {
        TypeError { code, span: SourceSpan::default(), detail: detail.into() }
    }

    pub fn at(mut self, span: &SourceSpan) -> Self {
        if self.span == SourceSpan::default() {
            self.span = span.clone();
        }
        self
    }
}

/// Types of the registered constants.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Signature {
    consts: BTreeMap<Name, Type>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, n: Name, ty: Type) {
        self.consts.insert(n, ty);
    }

    pub fn get(&self, n: &str) -> Option<&Type> {
        self.consts.get(n)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Type)> {
        self.consts.iter()
    }
}

pub type Stoup<'a> = Option<(&'a Name, &'a Type)>;

fn err<T>(code: ErrorCode, detail: impl Into<String>) -> Result<T, TypeError> {
    Err(TypeError::new(code, detail))
}

fn lookup<'a>(gamma: &'a [(Name, Type)], x: &Name) -> Option<&'a Type> {
    gamma.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
}

fn kind_of(t: &Type) -> Result<Kind, TypeError> {
    classify_type(t).map_err(|e| TypeError::new(ErrorCode::KindMismatch, e.to_string()))
}

fn context_ftv(gamma: &[(Name, Type)], delta: Stoup) -> BTreeSet<TyVar> {
    let mut out = BTreeSet::new();
    for (_, t) in gamma {
        out.extend(t.ftv());
    }
    if let Some((_, t)) = delta {
        out.extend(t.ftv());
    }
    out
}

/// Validate the context part of a judgment.
pub fn check_context(gamma: &[(Name, Type)], delta: Stoup) -> Result<(), TypeError> {
    for (x, t) in gamma {
        kind_of(t).map_err(|e| TypeError::new(e.code, format!("type of {x}: {}", e.detail)))?;
    }
    if let Some((x, t)) = delta {
        if kind_of(t)? != Kind::Computation {
            return err(ErrorCode::NonComputationStoup, format!("stoup variable {x} has value type {t}"));
        }
        if lookup(gamma, x).is_some() {
            return err(ErrorCode::StoupViolation, format!("stoup variable {x} is also bound in the context"));
        }
    }
    Ok(())
}

/// Check a judgment and return the unique type of its subject.
pub fn typecheck(sig: &Signature, j: &Judgment) -> Result<Type, TypeError> {
    let delta = j.delta.as_ref().map(|(x, t)| (x, t));
    check_context(&j.gamma, delta)?;
    let ty = synth(sig, &j.gamma, delta, &j.subject)?;
    if let Some(asc) = &j.ascription {
        kind_of(asc)?;
        if !alpha_eq_type(asc, &ty) {
            return err(ErrorCode::AppMismatch, format!("term has type {ty} but is ascribed {asc}"));
        }
    }
    Ok(ty)
}

/// Synthesize the type of `t` in `gamma | delta`. The context is assumed valid.
pub fn synth(sig: &Signature, gamma: &[(Name, Type)], delta: Stoup, t: &Term) -> Result<Type, TypeError> {
    let ty = synth_rule(sig, gamma, delta, t)?;
    debug_assert!(
        delta.is_none() || ty.is_computation(),
        "conclusion with a nonempty stoup must have computation type: {ty}"
    );
    Ok(ty)
}

fn synth_rule(sig: &Signature, gamma: &[(Name, Type)], delta: Stoup, t: &Term) -> Result<Type, TypeError> {
    match t {
        Term::Var(x) => match delta {
            Some((s, ty)) if s == x => Ok(ty.clone()),
            Some((s, _)) => {
                if lookup(gamma, x).is_some() {
                    err(ErrorCode::StoupViolation, format!("variable {x} used where the stoup variable {s} is pending"))
                } else {
                    err(ErrorCode::UnboundVar, format!("unbound variable {x}"))
                }
            }
            None => lookup(gamma, x)
                .cloned()
                .ok_or_else(|| TypeError::new(ErrorCode::UnboundVar, format!("unbound variable {x}"))),
        },
        Term::Const(c) => {
            let ty = sig
                .get(c)
                .cloned()
                .ok_or_else(|| TypeError::new(ErrorCode::UnboundVar, format!("unknown constant {c}")))?;
            if let Some((s, _)) = delta {
                return err(ErrorCode::StoupViolation, format!("constant {c} used where the stoup variable {s} is pending"));
            }
            Ok(ty)
        }
        Term::Lam(x, b, body) => {
            kind_of(b)?;
            if let Some((s, _)) = delta {
                if s == x {
                    return err(ErrorCode::StoupViolation, format!("binder {x} shadows the stoup variable"));
                }
            }
            let mut g = gamma.to_vec();
            g.push((x.clone(), b.clone()));
            let c = synth(sig, &g, delta, body)?;
            Ok(Type::arrow(b.clone(), c))
        }
        Term::LinLam(x, a, body) => {
            if let Some((s, _)) = delta {
                return err(ErrorCode::StoupViolation, format!("linear abstraction over {x} while the stoup holds {s}"));
            }
            if kind_of(a)? != Kind::Computation {
                return err(ErrorCode::KindMismatch, format!("linear binder {x} annotated with value type {a}"));
            }
            let g: Vec<(Name, Type)> = gamma.iter().filter(|(y, _)| y != x).cloned().collect();
            let b = synth(sig, &g, Some((x, a)), body)?;
            Ok(Type::lolli(a.clone(), b))
        }
        Term::App(s, u) => synth_app(sig, gamma, delta, s, u),
        Term::TyLamV(x, body) | Term::TyLamC(x, body) => {
            let sort = if matches!(t, Term::TyLamV(..)) { Sort::Value } else { Sort::Computation };
            let v = TyVar { sort, name: x.clone() };
            if context_ftv(gamma, delta).contains(&v) {
                return err(ErrorCode::EscapingTyVar, format!("type variable {v} is free in the context"));
            }
            let b = Box::new(synth(sig, gamma, delta, body)?);
            Ok(match sort {
                Sort::Value => Type::ForallV(x.clone(), b),
                Sort::Computation => Type::ForallC(x.clone(), b),
            })
        }
        Term::TyAppV(f, a) | Term::TyAppC(f, a) => {
            let want = if matches!(t, Term::TyAppV(..)) { Sort::Value } else { Sort::Computation };
            let fty = synth(sig, gamma, delta, f)?;
            let ak = kind_of(a)?;
            let (x, body) = match (&fty, want) {
                (Type::ForallV(x, b), Sort::Value) => (x, b),
                (Type::ForallC(x, b), Sort::Computation) => (x, b),
                _ => {
                    return err(ErrorCode::AppMismatch, format!("type application to a term of type {fty}"));
                }
            };
            if want == Sort::Computation && ak != Kind::Computation {
                return err(ErrorCode::KindMismatch, format!("value type {a} supplied for computation variable ^{x}"));
            }
            subst_type(body, &TyVar { sort: want, name: x.clone() }, a)
                .map_err(|e| TypeError::new(ErrorCode::KindMismatch, e.to_string()))
        }
    }
}

fn synth_app(sig: &Signature, gamma: &[(Name, Type)], delta: Stoup, s: &Term, u: &Term) -> Result<Type, TypeError> {
    let in_head = delta.is_some_and(|(x, _)| s.occurs_free(x));
    let in_arg = delta.is_some_and(|(x, _)| u.occurs_free(x));
    if in_head && in_arg {
        return err(ErrorCode::StoupViolation, "stoup variable used in both head and argument");
    }
    if in_head {
        let fty = synth(sig, gamma, delta, s)?;
        return match fty {
            Type::Arrow(b, c) => {
                check_arg(sig, gamma, None, u, &b)?;
                Ok(*c)
            }
            Type::Lolli(..) => err(ErrorCode::StoupViolation, "head of a linear application must not use the stoup"),
            other => err(ErrorCode::AppMismatch, format!("application of a term of type {other}")),
        };
    }
    let fty = synth(sig, gamma, None, s)?;
    match fty {
        Type::Arrow(b, c) => {
            if let Some((x, _)) = delta {
                return if in_arg {
                    err(ErrorCode::StoupViolation, format!("stoup variable {x} passed to a non-linear argument"))
                } else {
                    err(ErrorCode::StoupViolation, format!("stoup variable {x} is not used"))
                };
            }
            check_arg(sig, gamma, None, u, &b)?;
            Ok(*c)
        }
        Type::Lolli(a, b) => {
            if let Some((x, _)) = delta {
                if !in_arg {
                    return err(ErrorCode::StoupViolation, format!("stoup variable {x} is not used"));
                }
            }
            check_arg(sig, gamma, delta, u, &a)?;
            Ok(*b)
        }
        other => err(ErrorCode::AppMismatch, format!("application of a term of type {other}")),
    }
}

fn check_arg(sig: &Signature, gamma: &[(Name, Type)], delta: Stoup, u: &Term, want: &Type) -> Result<(), TypeError> {
    let got = synth(sig, gamma, delta, u)?;
    if alpha_eq_type(&got, want) {
        Ok(())
    } else {
        err(ErrorCode::AppMismatch, format!("argument has type {got} but {want} was expected"))
    }
}

/// All types derivable for `t` by any applicable rule, exploring both
/// application rules and every routing of the stoup. Used as an independent
/// oracle for unicity.
pub fn derive_all(sig: &Signature, gamma: &[(Name, Type)], delta: Stoup, t: &Term) -> Vec<Type> {
    let mut out: Vec<Type> = Vec::new();
    let push = |ty: Type, out: &mut Vec<Type>| {
        if delta.is_some() && !ty.is_computation() {
            return;
        }
        if !out.iter().any(|o| alpha_eq_type(o, &ty)) {
            out.push(ty);
        }
    };
    match t {
        Term::Var(x) => match delta {
            Some((s, ty)) if s == x => push(ty.clone(), &mut out),
            Some(_) => {}
            None => {
                if let Some(ty) = lookup(gamma, x) {
                    push(ty.clone(), &mut out);
                }
            }
        },
        Term::Const(c) => {
            if let (None, Some(ty)) = (delta, sig.get(c)) {
                push(ty.clone(), &mut out);
            }
        }
        Term::Lam(x, b, body) => {
            if classify_type(b).is_ok() && delta.is_none_or(|(s, _)| s != x) {
                let mut g = gamma.to_vec();
                g.push((x.clone(), b.clone()));
                for c in derive_all(sig, &g, delta, body) {
                    push(Type::arrow(b.clone(), c), &mut out);
                }
            }
        }
        Term::LinLam(x, a, body) => {
            if delta.is_none() && a.is_computation() {
                let g: Vec<(Name, Type)> = gamma.iter().filter(|(y, _)| y != x).cloned().collect();
                for c in derive_all(sig, &g, Some((x, a)), body) {
                    push(Type::lolli(a.clone(), c), &mut out);
                }
            }
        }
        Term::App(s, u) => {
            for fty in derive_all(sig, gamma, delta, s) {
                if let Type::Arrow(b, c) = fty {
                    if derive_all(sig, gamma, None, u).iter().any(|a| alpha_eq_type(a, &b)) {
                        push(*c, &mut out);
                    }
                }
            }
            for fty in derive_all(sig, gamma, None, s) {
                if let Type::Lolli(a, b) = fty {
                    if derive_all(sig, gamma, delta, u).iter().any(|x| alpha_eq_type(x, &a)) {
                        push(*b, &mut out);
                    }
                }
            }
        }
        Term::TyLamV(x, body) | Term::TyLamC(x, body) => {
            let sort = if matches!(t, Term::TyLamV(..)) { Sort::Value } else { Sort::Computation };
            let v = TyVar { sort, name: x.clone() };
            if !context_ftv(gamma, delta).contains(&v) {
                for b in derive_all(sig, gamma, delta, body) {
                    let b = Box::new(b);
                    push(
                        match sort {
                            Sort::Value => Type::ForallV(x.clone(), b),
                            Sort::Computation => Type::ForallC(x.clone(), b),
                        },
                        &mut out,
                    );
                }
            }
        }
        Term::TyAppV(f, a) | Term::TyAppC(f, a) => {
            for fty in derive_all(sig, gamma, delta, f) {
                let r = match (&fty, t) {
                    (Type::ForallV(x, b), Term::TyAppV(..)) if classify_type(a).is_ok() => {
                        subst_type(b, &TyVar { sort: Sort::Value, name: x.clone() }, a).ok()
                    }
                    (Type::ForallC(x, b), Term::TyAppC(..)) => {
                        subst_type(b, &TyVar { sort: Sort::Computation, name: x.clone() }, a).ok()
                    }
                    _ => None,
                };
                if let Some(r) = r {
                    push(r, &mut out);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct PropertyReport {
    pub checked: usize,
    pub failures: Vec<String>,
}

impl PropertyReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// For each judgment, the algorithmic type and every derivable type agree.
pub fn check_unicity(sig: &Signature, corpus: &[Judgment]) -> PropertyReport {
    let mut rep = PropertyReport::default();
    for (i, j) in corpus.iter().enumerate() {
        rep.checked += 1;
        let delta = j.delta.as_ref().map(|(x, t)| (x, t));
        let algo = typecheck(sig, j);
        let all = derive_all(sig, &j.gamma, delta, &j.subject);
        match algo {
            Ok(ty) => {
                if all.len() != 1 || !alpha_eq_type(&all[0], &ty) {
                    rep.failures.push(format!("#{i}: algorithm gave {ty}, derivations gave {} types", all.len()));
                }
            }
            Err(e) => rep.failures.push(format!("#{i}: not typable: {e}")),
        }
    }
    rep
}

/// One instance of the substitution lemma: `t` is typed with `x : x_ty`
/// either in the ordinary context (part 1) or as the stoup (part 2).
#[derive(Clone, Debug)]
pub struct SubstInstance {
    pub gamma: Vec<(Name, Type)>,
    pub x: Name,
    pub x_ty: Type,
    pub stoup_var: bool,
    /// For part 1 the stoup of `t`; for part 2 the stoup of `s`.
    pub delta: Option<(Name, Type)>,
    pub t: Term,
    pub s: Term,
}

impl SubstInstance {
    fn premises(&self, sig: &Signature) -> Result<Type, TypeError> {
        let s_delta = if self.stoup_var { self.delta.as_ref().map(|(a, b)| (a, b)) } else { None };
        let s_ty = synth(sig, &self.gamma, s_delta, &self.s)?;
        if !alpha_eq_type(&s_ty, &self.x_ty) {
            return err(ErrorCode::AppMismatch, "substituted term has the wrong type");
        }
        if self.stoup_var {
            synth(sig, &self.gamma, Some((&self.x, &self.x_ty)), &self.t)
        } else {
            let mut g = self.gamma.clone();
            g.push((self.x.clone(), self.x_ty.clone()));
            synth(sig, &g, self.delta.as_ref().map(|(a, b)| (a, b)), &self.t)
        }
    }
}

/// `t[s/x]` has the type of `t` in the context without `x`.
pub fn check_substitution_lemma(sig: &Signature, sample: &[SubstInstance]) -> PropertyReport {
    let mut rep = PropertyReport::default();
    for (i, inst) in sample.iter().enumerate() {
        let before = match inst.premises(sig) {
            Ok(b) => b,
            Err(e) => {
                rep.failures.push(format!("#{i}: premises do not hold: {e}"));
                continue;
            }
        };
        rep.checked += 1;
        let out = subst_term(&inst.t, &inst.x, &inst.s);
        match synth(sig, &inst.gamma, inst.delta.as_ref().map(|(a, b)| (a, b)), &out) {
            Ok(after) if alpha_eq_type(&before, &after) => {}
            Ok(after) => rep.failures.push(format!("#{i}: type changed from {before} to {after}")),
            Err(e) => rep.failures.push(format!("#{i}: substituted term rejected: {e}")),
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::name;

    fn sig() -> Signature {
        Signature::new()
    }

    fn cv(n: &str) -> Type {
        Type::cvar(n)
    }

    #[test]
    fn stoup_axiom() {
        let j = Judgment::closed(Term::var("x")).with_delta("x", cv("A"));
        assert_eq!(typecheck(&sig(), &j).unwrap(), cv("A"));
    }

    #[test]
    fn identity() {
        let j = Judgment::closed(Term::lam("x", Type::vvar("B"), Term::var("x")));
        assert_eq!(typecheck(&sig(), &j).unwrap(), Type::arrow(Type::vvar("B"), Type::vvar("B")));
    }

    #[test]
    fn linear_application_routes_the_stoup_to_the_argument() {
        let j = Judgment::closed(Term::app(Term::var("h"), Term::var("y")))
            .with_gamma("h", Type::lolli(cv("A"), cv("B")))
            .with_delta("y", cv("A"));
        assert_eq!(typecheck(&sig(), &j).unwrap(), cv("B"));
        // the same with an ordinary function is a stoup violation
        let j2 = Judgment::closed(Term::app(Term::var("h"), Term::var("y")))
            .with_gamma("h", Type::arrow(cv("A"), cv("B")))
            .with_delta("y", cv("A"));
        assert_eq!(typecheck(&sig(), &j2).unwrap_err().code, ErrorCode::StoupViolation);
    }

    #[test]
    fn ordinary_application_routes_the_stoup_to_the_head() {
        let j = Judgment::closed(Term::app(Term::var("y"), Term::var("a")))
            .with_gamma("a", Type::vvar("B"))
            .with_delta("y", Type::arrow(Type::vvar("B"), cv("C")));
        assert_eq!(typecheck(&sig(), &j).unwrap(), cv("C"));
    }

    #[test]
    fn stoup_used_twice_or_never() {
        let twice = Term::app(Term::app(Term::var("f"), Term::var("x")), Term::var("x"));
        let j = Judgment::closed(twice)
            .with_gamma("f", Type::lolli(cv("A"), Type::arrow(cv("A"), cv("A"))))
            .with_delta("x", cv("A"));
        assert_eq!(typecheck(&sig(), &j).unwrap_err().code, ErrorCode::StoupViolation);
        let never = Judgment::closed(Term::var("z")).with_gamma("z", cv("A")).with_delta("x", cv("A"));
        assert_eq!(typecheck(&sig(), &never).unwrap_err().code, ErrorCode::StoupViolation);
    }

    #[test]
    fn escaping_type_variable() {
        let j = Judgment::closed(Term::ty_lam_v("X", Term::var("x"))).with_gamma("x", Type::vvar("X"));
        assert_eq!(typecheck(&sig(), &j).unwrap_err().code, ErrorCode::EscapingTyVar);
    }

    #[test]
    fn non_computation_stoup() {
        let j = Judgment::closed(Term::var("x")).with_delta("x", Type::vvar("B"));
        assert_eq!(typecheck(&sig(), &j).unwrap_err().code, ErrorCode::NonComputationStoup);
    }

    #[test]
    fn sort_mismatch_in_type_application() {
        let id = Term::ty_lam_c("X", Term::lam("x", cv("X"), Term::var("x")));
        let j = Judgment::closed(Term::ty_app_c(id, Type::vvar("B")));
        assert_eq!(typecheck(&sig(), &j).unwrap_err().code, ErrorCode::KindMismatch);
    }

    #[test]
    fn type_abstraction_over_nonempty_stoup() {
        let j = Judgment::closed(Term::ty_lam_v("Y", Term::var("x"))).with_delta("x", cv("A"));
        assert_eq!(typecheck(&sig(), &j).unwrap(), Type::forall_v("Y", cv("A")));
    }

    #[test]
    fn derive_all_agrees_on_examples() {
        let t = Term::app(Term::var("h"), Term::var("y"));
        let g = vec![(name("h"), Type::lolli(cv("A"), cv("B")))];
        let a = cv("A");
        let all = derive_all(&sig(), &g, Some((&name("y"), &a)), &t);
        assert_eq!(all, vec![cv("B")]);
    }
}

//! Derived types and terms: the polymorphic encodings of data types, the
//! monadic type `!B`, its introduction and elimination forms, the effect
//! constants and the type-level translation of call-by-push-value.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::finmodel::{MonadKind, MonadSpec};
use crate::kernel::{
    alpha_eq_type, classify_type, fresh_name, name, subst_type, Kind, Name, Sort, Term, TyVar, Type,
};
use crate::surface::{match_bang, BinOp, Binder, SType, STypeKind, STerm, STermKind, SourceSpan};
use crate::typecheck::{synth, ErrorCode, Signature, TypeError};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EncodingError {
    #[error("{var} does not occur positively in {body}")]
    Positivity { var: TyVar, body: Type },
    #[error("{what} expects a computation type, got {ty}")]
    NotComputation { what: &'static str, ty: Type },
    #[error("{0}")]
    BadBinder(String),
    #[error("{0}")]
    Kind(String),
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{span}: {error}")]
pub struct SpannedEncodingError {
    pub span: SourceSpan,
    pub error: EncodingError,
}

fn fresh_tyvar(base: &str, sort: Sort, avoid: &BTreeSet<TyVar>) -> Name {
    fresh_name(base, |c| avoid.contains(&TyVar { sort, name: name(c) }))
}

fn ftv_all(tys: &[&Type]) -> BTreeSet<TyVar> {
    tys.iter().flat_map(|t| t.ftv()).collect()
}

fn cvar(n: &Name) -> Type {
    Type::CVar(n.clone())
}

fn vvar(n: &Name) -> Type {
    Type::VVar(n.clone())
}

fn require_comp(what: &'static str, t: &Type) -> Result<(), EncodingError> {
    if t.is_computation() {
        Ok(())
    } else {
        Err(EncodingError::NotComputation { what, ty: t.clone() })
    }
}

/// Strict positivity: `v` never occurs to the left of an odd number of arrows.
pub fn occurs_positively(t: &Type, v: &TyVar) -> bool {
    fn go(t: &Type, v: &TyVar, positive: bool) -> bool {
        match t {
            Type::VVar(_) | Type::CVar(_) => positive || !t.has_free(v),
            Type::Arrow(a, b) | Type::Lolli(a, b) => go(a, v, !positive) && go(b, v, positive),
            Type::ForallV(x, b) | Type::ForallC(x, b) => {
                if t.binder_sort() == Some(v.sort) && *x == v.name {
                    true
                } else {
                    go(b, v, positive)
                }
            }
        }
    }
    go(t, v, true)
}

#[derive(Clone, Debug, PartialEq)]
pub enum ValueCtor {
    Unit,
    Prod(Type, Type),
    Zero,
    Sum(Type, Type),
    ExistsV(Name, Type),
    Mu(Name, Type),
    Nu(Name, Type),
    ExistsC(Name, Type),
}

#[derive(Clone, Debug, PartialEq)]
pub enum CompCtor {
    UnitC,
    ProdC(Type, Type),
    ZeroC,
    Oplus(Type, Type),
    Copower(Type, Type),
    ExistsVC(Name, Type),
    ExistsCC(Name, Type),
    MuC(Name, Type),
    NuC(Name, Type),
}

pub fn unit() -> Type {
    Type::forall_v("X", Type::arrow(Type::vvar("X"), Type::vvar("X")))
}

pub fn zero() -> Type {
    Type::forall_v("X", Type::vvar("X"))
}

pub fn prod(a: &Type, b: &Type) -> Type {
    let x = fresh_tyvar("X", Sort::Value, &ftv_all(&[a, b]));
    let k = Type::arrows(vec![a.clone(), b.clone()], vvar(&x));
    Type::ForallV(x.clone(), Box::new(Type::arrow(k, vvar(&x))))
}

pub fn sum(a: &Type, b: &Type) -> Type {
    let x = fresh_tyvar("X", Sort::Value, &ftv_all(&[a, b]));
    let body = Type::arrows(vec![Type::arrow(a.clone(), vvar(&x)), Type::arrow(b.clone(), vvar(&x))], vvar(&x));
    Type::ForallV(x, Box::new(body))
}

/// `n` as the n-fold sum `1 + ... + 1`; `0` and `1` are the empty and unit types.
pub fn numeral(n: u32) -> Type {
    match n {
        0 => zero(),
        _ => (1..n).fold(unit(), |acc, _| sum(&acc, &unit())),
    }
}

/// `exists X. b`, with `sort` the sort of the bound variable.
fn exists_value(x: &Name, sort: Sort, b: &Type) -> Type {
    let mut avoid = b.ftv();
    avoid.insert(TyVar { sort, name: x.clone() });
    let y = fresh_tyvar("Y", Sort::Value, &avoid);
    let inner = Type::arrow(b.clone(), vvar(&y));
    let q = match sort {
        Sort::Value => Type::ForallV(x.clone(), Box::new(inner)),
        Sort::Computation => Type::ForallC(x.clone(), Box::new(inner)),
    };
    Type::ForallV(y.clone(), Box::new(Type::arrow(q, vvar(&y))))
}

pub fn encode_value_type(ctor: &ValueCtor) -> Result<Type, EncodingError> {
    Ok(match ctor {
        ValueCtor::Unit => unit(),
        ValueCtor::Zero => zero(),
        ValueCtor::Prod(a, b) => prod(a, b),
        ValueCtor::Sum(a, b) => sum(a, b),
        ValueCtor::ExistsV(x, b) => exists_value(x, Sort::Value, b),
        ValueCtor::ExistsC(x, b) => exists_value(x, Sort::Computation, b),
        ValueCtor::Mu(x, b) => {
            let v = TyVar { sort: Sort::Value, name: x.clone() };
            if !occurs_positively(b, &v) {
                return Err(EncodingError::Positivity { var: v, body: b.clone() });
            }
            Type::ForallV(x.clone(), Box::new(Type::arrow(Type::arrow(b.clone(), vvar(x)), vvar(x))))
        }
        ValueCtor::Nu(x, b) => {
            let v = TyVar { sort: Sort::Value, name: x.clone() };
            if !occurs_positively(b, &v) {
                return Err(EncodingError::Positivity { var: v, body: b.clone() });
            }
            exists_value(x, Sort::Value, &prod(&Type::arrow(vvar(x), b.clone()), &vvar(x)))
        }
    })
}

pub fn unit_c() -> Type {
    Type::forall_c("X", Type::arrow(zero(), Type::cvar("X")))
}

pub fn zero_c() -> Type {
    Type::forall_c("X", Type::cvar("X"))
}

pub fn prod_c(a: &Type, b: &Type) -> Type {
    let x = fresh_tyvar("X", Sort::Computation, &ftv_all(&[a, b]));
    let s = sum(&Type::lolli(a.clone(), cvar(&x)), &Type::lolli(b.clone(), cvar(&x)));
    Type::ForallC(x.clone(), Box::new(Type::arrow(s, cvar(&x))))
}

pub fn oplus(a: &Type, b: &Type) -> Type {
    let x = fresh_tyvar("X", Sort::Computation, &ftv_all(&[a, b]));
    let body = Type::arrows(vec![Type::lolli(a.clone(), cvar(&x)), Type::lolli(b.clone(), cvar(&x))], cvar(&x));
    Type::ForallC(x, Box::new(body))
}

/// The copower `b . a` for a value type `b` and computation type `a`.
pub fn copower(b: &Type, a: &Type) -> Type {
    let x = fresh_tyvar("X", Sort::Computation, &ftv_all(&[a, b]));
    let k = Type::arrow(b.clone(), Type::lolli(a.clone(), cvar(&x)));
    Type::ForallC(x.clone(), Box::new(Type::arrow(k, cvar(&x))))
}

/// Computation existential `existso X. a` over a variable of the given sort.
fn exists_comp(x: &Name, sort: Sort, a: &Type) -> Type {
    let mut avoid = a.ftv();
    avoid.insert(TyVar { sort, name: x.clone() });
    let y = fresh_tyvar("Y", Sort::Computation, &avoid);
    let inner = Type::lolli(a.clone(), cvar(&y));
    let q = match sort {
        Sort::Value => Type::ForallV(x.clone(), Box::new(inner)),
        Sort::Computation => Type::ForallC(x.clone(), Box::new(inner)),
    };
    Type::ForallC(y.clone(), Box::new(Type::arrow(q, cvar(&y))))
}

pub fn encode_comp_type(ctor: &CompCtor) -> Result<Type, EncodingError> {
    let out = match ctor {
        CompCtor::UnitC => unit_c(),
        CompCtor::ZeroC => zero_c(),
        CompCtor::ProdC(a, b) => {
            require_comp("computation product", a)?;
            require_comp("computation product", b)?;
            prod_c(a, b)
        }
        CompCtor::Oplus(a, b) => {
            require_comp("computation coproduct", a)?;
            require_comp("computation coproduct", b)?;
            oplus(a, b)
        }
        CompCtor::Copower(b, a) => {
            require_comp("copower", a)?;
            copower(b, a)
        }
        CompCtor::ExistsVC(x, a) => {
            require_comp("computation existential", a)?;
            exists_comp(x, Sort::Value, a)
        }
        CompCtor::ExistsCC(x, a) => {
            require_comp("computation existential", a)?;
            exists_comp(x, Sort::Computation, a)
        }
        CompCtor::MuC(x, a) => {
            require_comp("computation fixed point", a)?;
            let v = TyVar { sort: Sort::Computation, name: x.clone() };
            if !occurs_positively(a, &v) {
                return Err(EncodingError::Positivity { var: v, body: a.clone() });
            }
            Type::ForallC(x.clone(), Box::new(Type::arrow(Type::lolli(a.clone(), cvar(x)), cvar(x))))
        }
        CompCtor::NuC(x, a) => {
            require_comp("computation fixed point", a)?;
            let v = TyVar { sort: Sort::Computation, name: x.clone() };
            if !occurs_positively(a, &v) {
                return Err(EncodingError::Positivity { var: v, body: a.clone() });
            }
            exists_comp(x, Sort::Computation, &copower(&Type::lolli(cvar(x), a.clone()), &cvar(x)))
        }
    };
    debug_assert!(out.is_computation());
    Ok(out)
}

/// `!b = forall ^X. (b -> ^X) -> ^X` with `^X` fresh for `b`.
pub fn bang(b: &Type) -> Type {
    let x = fresh_tyvar("X", Sort::Computation, &b.ftv());
    Type::ForallC(x.clone(), Box::new(Type::arrow(Type::arrow(b.clone(), cvar(&x)), cvar(&x))))
}

/// Recognise `forall X. (A -> B -> X) -> X`.
pub fn match_prod(t: &Type) -> Option<(&Type, &Type)> {
    let Type::ForallV(x, body) = t else { return None };
    let Type::Arrow(k, r) = &**body else { return None };
    let Type::Arrow(a, rest) = &**k else { return None };
    let Type::Arrow(b, r2) = &**rest else { return None };
    let xv = TyVar { sort: Sort::Value, name: x.clone() };
    let is_x = |t: &Type| *t == Type::VVar(x.clone());
    (is_x(r) && is_x(r2) && !a.has_free(&xv) && !b.has_free(&xv)).then_some((&**a, &**b))
}

/// Recognise `forall X. (A -> X) -> (B -> X) -> X`.
pub fn match_sum(t: &Type) -> Option<(&Type, &Type)> {
    let Type::ForallV(x, body) = t else { return None };
    match_two_handlers(body, &Type::VVar(x.clone()), false)
}

/// Recognise `forall ^X. (A -o ^X) -> (B -o ^X) -> ^X`.
pub fn match_oplus(t: &Type) -> Option<(&Type, &Type)> {
    let Type::ForallC(x, body) = t else { return None };
    match_two_handlers(body, &Type::CVar(x.clone()), true)
}

fn match_two_handlers<'a>(body: &'a Type, x: &Type, linear: bool) -> Option<(&'a Type, &'a Type)> {
    let Type::Arrow(h1, rest) = body else { return None };
    let Type::Arrow(h2, r) = &**rest else { return None };
    let split = |h: &'a Type| -> Option<(&'a Type, &'a Type)> {
        match (h, linear) {
            (Type::Arrow(a, b), false) | (Type::Lolli(a, b), true) => Some((a, b)),
            _ => None,
        }
    };
    let (a, r1) = split(h1)?;
    let (b, r2) = split(h2)?;
    let xv = match x {
        Type::VVar(n) => TyVar { sort: Sort::Value, name: n.clone() },
        Type::CVar(n) => TyVar { sort: Sort::Computation, name: n.clone() },
        _ => return None,
    };
    (*r1 == *x && *r2 == *x && **r == *x && !a.has_free(&xv) && !b.has_free(&xv)).then_some((a, b))
}

// ---------------------------------------------------------------------------
// Type elaboration

pub fn elaborate_type(t: &SType) -> Result<Type, SpannedEncodingError> {
    let out = elab_ty(t)?;
    classify_type(&out)
        .map_err(|e| SpannedEncodingError { span: t.span.clone(), error: EncodingError::Kind(e.to_string()) })?;
    Ok(out)
}

fn elab_ty(t: &SType) -> Result<Type, SpannedEncodingError> {
    let at = |error: EncodingError| SpannedEncodingError { span: t.span.clone(), error };
    Ok(match &t.kind {
        STypeKind::VVar(n) => Type::VVar(n.clone()),
        STypeKind::CVar(n) => Type::CVar(n.clone()),
        STypeKind::Num(n) => numeral(*n),
        STypeKind::UnitC => unit_c(),
        STypeKind::ZeroC => zero_c(),
        STypeKind::Bang(b) => bang(&elab_ty(b)?),
        STypeKind::Bin(op, l, r) => {
            let (a, b) = (elab_ty(l)?, elab_ty(r)?);
            match op {
                BinOp::Arrow => Type::arrow(a, b),
                BinOp::Lolli => Type::lolli(a, b),
                BinOp::Prod => prod(&a, &b),
                BinOp::Sum => sum(&a, &b),
                BinOp::ProdC => encode_comp_type(&CompCtor::ProdC(a, b)).map_err(at)?,
                BinOp::Oplus => encode_comp_type(&CompCtor::Oplus(a, b)).map_err(at)?,
                BinOp::Copower => encode_comp_type(&CompCtor::Copower(a, b)).map_err(at)?,
            }
        }
        STypeKind::Bind(binder, comp, x, body) => {
            let b = elab_ty(body)?;
            let x = x.clone();
            let bad = |what: &str| at(EncodingError::BadBinder(format!("{what} binds a {} variable", if *comp { "computation" } else { "value" })));
            match (binder, comp) {
                (Binder::Forall, false) => Type::ForallV(x, Box::new(b)),
                (Binder::Forall, true) => Type::ForallC(x, Box::new(b)),
                (Binder::Exists, false) => encode_value_type(&ValueCtor::ExistsV(x, b)).map_err(at)?,
                (Binder::Exists, true) => encode_value_type(&ValueCtor::ExistsC(x, b)).map_err(at)?,
                (Binder::Mu, false) => encode_value_type(&ValueCtor::Mu(x, b)).map_err(at)?,
                (Binder::Nu, false) => encode_value_type(&ValueCtor::Nu(x, b)).map_err(at)?,
                (Binder::ExistsO, false) => encode_comp_type(&CompCtor::ExistsVC(x, b)).map_err(at)?,
                (Binder::ExistsO, true) => encode_comp_type(&CompCtor::ExistsCC(x, b)).map_err(at)?,
                (Binder::MuO, true) => encode_comp_type(&CompCtor::MuC(x, b)).map_err(at)?,
                (Binder::NuO, true) => encode_comp_type(&CompCtor::NuC(x, b)).map_err(at)?,
                (Binder::Mu, true) => return Err(bad("mu")),
                (Binder::Nu, true) => return Err(bad("nu")),
                (Binder::MuO, false) => return Err(bad("muo")),
                (Binder::NuO, false) => return Err(bad("nuo")),
            }
        }
    })
}

// ---------------------------------------------------------------------------
// Term sugar

fn fresh_var(base: &str, avoid: &BTreeSet<Name>) -> Name {
    fresh_name(base, |c| avoid.contains(c))
}

/// Type variables bound by `Fun` inside `t`. A fresh binder wrapped around
/// `t` must avoid them, or the inner abstraction would see it in its context.
fn type_binders(t: &Term) -> BTreeSet<TyVar> {
    fn go(t: &Term, out: &mut BTreeSet<TyVar>) {
        match t {
            Term::Var(_) | Term::Const(_) => {}
            Term::Lam(_, _, b) | Term::LinLam(_, _, b) | Term::TyAppV(b, _) | Term::TyAppC(b, _) => go(b, out),
            Term::App(f, a) => {
                go(f, out);
                go(a, out);
            }
            Term::TyLamV(x, b) => {
                out.insert(TyVar { sort: Sort::Value, name: x.clone() });
                go(b, out);
            }
            Term::TyLamC(x, b) => {
                out.insert(TyVar { sort: Sort::Computation, name: x.clone() });
                go(b, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    go(t, &mut out);
    out
}

/// `!t = Fun ^X => fun p:(b -> ^X) => p t`, for `t : b` in an empty stoup.
pub fn bang_intro(t: &Term, b: &Type, ctx_ftv: &BTreeSet<TyVar>) -> Term {
    let mut avoid = ctx_ftv.clone();
    avoid.extend(b.ftv());
    avoid.extend(t.ftv());
    avoid.extend(type_binders(t));
    let x = fresh_tyvar("X", Sort::Computation, &avoid);
    let p = fresh_var("p", &t.fv());
    Term::TyLamC(
        x.clone(),
        Box::new(Term::Lam(p.clone(), Type::arrow(b.clone(), cvar(&x)), Box::new(Term::app(Term::Var(p), t.clone())))),
    )
}

/// `let x <= t in u = t @[a] (fun x:b => u)` where `t : !b` and `u : a`.
pub fn let_in(x: &Name, t: &Term, b: &Type, u: &Term, a: &Type) -> Term {
    Term::app(Term::ty_app_c(t.clone(), a.clone()), Term::Lam(x.clone(), b.clone(), Box::new(u.clone())))
}

/// The two terms witnessing `(!a -o b) ~ (a -> b)`: forward maps
/// `a -> b` to `!a -o b`, backward goes the other way.
pub fn girard_iso_terms(a: &Type, b: &Type) -> (Term, Term) {
    let ba = bang(a);
    let fwd = Term::lam(
        "f",
        Type::arrow(a.clone(), b.clone()),
        Term::LinLam(
            name("z"),
            ba.clone(),
            Box::new(let_in(&name("x"), &Term::var("z"), a, &Term::app(Term::var("f"), Term::var("x")), b)),
        ),
    );
    let ctx = ftv_all(&[a, b]);
    let bwd = Term::lam(
        "g",
        Type::lolli(ba, b.clone()),
        Term::lam("x", a.clone(), Term::app(Term::var("g"), bang_intro(&Term::var("x"), a, &ctx))),
    );
    (fwd, bwd)
}

/// The maps between `a` and `forall ^X. (a -o ^X) -> ^X`.
pub fn yoneda_iso_terms(a: &Type) -> (Term, Term) {
    let x = fresh_tyvar("X", Sort::Computation, &a.ftv());
    let k_ty = Type::lolli(a.clone(), cvar(&x));
    let poly = Type::ForallC(x.clone(), Box::new(Type::arrow(k_ty.clone(), cvar(&x))));
    let to = Term::lin_lam(
        "a",
        a.clone(),
        Term::TyLamC(x.clone(), Box::new(Term::lam("k", k_ty, Term::app(Term::var("k"), Term::var("a"))))),
    );
    let from = Term::lin_lam(
        "m",
        poly,
        Term::app(Term::ty_app_c(Term::var("m"), a.clone()), Term::lin_lam("a", a.clone(), Term::var("a"))),
    );
    (to, from)
}

// ---------------------------------------------------------------------------
// Term elaboration

type Ctx = Vec<(Name, Type)>;

fn tyerr(code: ErrorCode, detail: impl Into<String>, span: &SourceSpan) -> TypeError {
    TypeError::new(code, detail).at(span)
}

fn sterm_occurs(t: &STerm, x: &Name) -> bool {
    use STermKind as K;
    match &t.kind {
        K::Var(y) => y == x,
        K::Const(_) => false,
        K::Lam(y, _, b) | K::LinLam(y, _, b) => y != x && sterm_occurs(b, x),
        K::App(a, b) | K::Pair(a, b) => sterm_occurs(a, x) || sterm_occurs(b, x),
        K::TyLam(_, _, b) | K::TyApp(b, _) | K::Bang(b) | K::Fst(b) | K::Snd(b) | K::Inj(_, _, b) | K::InjC(_, _, b) => {
            sterm_occurs(b, x)
        }
        K::Let(y, a, b) => sterm_occurs(a, x) || (y != x && sterm_occurs(b, x)),
        K::Case(s, y, u, z, v) | K::CaseC(s, y, u, z, v) => {
            sterm_occurs(s, x) || (y != x && sterm_occurs(u, x)) || (z != x && sterm_occurs(v, x))
        }
    }
}

fn ctx_ftv(gamma: &Ctx, delta: Option<(&Name, &Type)>) -> BTreeSet<TyVar> {
    let mut s: BTreeSet<TyVar> = gamma.iter().flat_map(|(_, t)| t.ftv()).collect();
    if let Some((_, t)) = delta {
        s.extend(t.ftv());
    }
    s
}

/// Elaborate a surface term to a kernel term and its type, resolving sugar
/// and type applications against the types of subterms.
pub fn elaborate_term(
    sig: &Signature,
    gamma: &Ctx,
    delta: Option<(&Name, &Type)>,
    t: &STerm,
) -> Result<(Term, Type), TypeError> {
    let out = elab_tm(sig, gamma, delta, t)?;
    let ty = synth(sig, gamma, delta, &out).map_err(|e| e.at(&t.span))?;
    Ok((out, ty))
}

fn elab_type_in_term(t: &SType) -> Result<Type, TypeError> {
    elaborate_type(t).map_err(|e| tyerr(ErrorCode::KindMismatch, e.error.to_string(), &e.span))
}

fn elab_tm(sig: &Signature, gamma: &Ctx, delta: Option<(&Name, &Type)>, t: &STerm) -> Result<Term, TypeError> {
    use STermKind as K;
    let span = &t.span;
    let typed = |tm: &Term, g: &Ctx, d: Option<(&Name, &Type)>| synth(sig, g, d, tm).map_err(|e| e.at(span));
    let route = |sub: &STerm| delta.filter(|(x, _)| sterm_occurs(sub, x));
    let extend = |x: &Name, ty: &Type| {
        let mut g = gamma.clone();
        g.push((x.clone(), ty.clone()));
        g
    };
    // subterms elaborated with an empty stoup must not mention it
    let keep_out = |sub: &STerm, place: &str| match route(sub) {
        Some((x, _)) => Err(tyerr(ErrorCode::StoupViolation, format!("stoup variable {x} used {place}"), span)),
        None => Ok(()),
    };
    match &t.kind {
        K::Bang(inner) => keep_out(inner, "under bang")?,
        K::Let(x, _, u) if delta.is_some_and(|(z, _)| z != x) => keep_out(u, "in the body of let")?,
        K::Pair(..) | K::Fst(_) | K::Snd(_) | K::Inj(..) | K::Case(..) => keep_out(t, "in a value construction")?,
        _ => {}
    }
    Ok(match &t.kind {
        K::Var(x) => Term::Var(x.clone()),
        K::Const(c) => Term::Const(c.clone()),
        K::Lam(x, ty, b) => {
            let bt = elab_type_in_term(ty)?;
            let body = elab_tm(sig, &extend(x, &bt), delta, b)?;
            Term::Lam(x.clone(), bt, Box::new(body))
        }
        K::LinLam(x, ty, b) => {
            let at = elab_type_in_term(ty)?;
            let g: Ctx = gamma.iter().filter(|(y, _)| y != x).cloned().collect();
            let body = elab_tm(sig, &g, Some((x, &at)), b)?;
            Term::LinLam(x.clone(), at, Box::new(body))
        }
        K::App(f, a) => {
            let df = route(f);
            let da = if df.is_some() { None } else { route(a) };
            Term::app(elab_tm(sig, gamma, df, f)?, elab_tm(sig, gamma, da, a)?)
        }
        K::TyLam(comp, x, b) => {
            let body = Box::new(elab_tm(sig, gamma, delta, b)?);
            if *comp {
                Term::TyLamC(x.clone(), body)
            } else {
                Term::TyLamV(x.clone(), body)
            }
        }
        K::TyApp(f, ty) => {
            let fk = elab_tm(sig, gamma, delta, f)?;
            let a = elab_type_in_term(ty)?;
            match typed(&fk, gamma, delta)? {
                Type::ForallV(..) => Term::ty_app_v(fk, a),
                Type::ForallC(..) => Term::ty_app_c(fk, a),
                other => return Err(tyerr(ErrorCode::AppMismatch, format!("type application to a term of type {other}"), span)),
            }
        }
        K::Bang(inner) => {
            let tk = elab_tm(sig, gamma, None, inner)?;
            let b = typed(&tk, gamma, None)?;
            bang_intro(&tk, &b, &ctx_ftv(gamma, delta))
        }
        K::Let(x, a, u) => {
            let ak = elab_tm(sig, gamma, delta, a)?;
            let at = typed(&ak, gamma, delta)?;
            let b = match_bang(&at)
                .ok_or_else(|| tyerr(ErrorCode::AppMismatch, format!("let expects a term of type !B, got {at}"), span))?
                .clone();
            let g = extend(x, &b);
            let uk = elab_tm(sig, &g, None, u)?;
            let ut = typed(&uk, &g, None)?;
            if !ut.is_computation() {
                return Err(tyerr(ErrorCode::KindMismatch, format!("body of let has value type {ut}"), span));
            }
            let_in(x, &ak, &b, &uk, &ut)
        }
        K::Pair(a, b) => {
            let (ak, bk) = (elab_tm(sig, gamma, None, a)?, elab_tm(sig, gamma, None, b)?);
            let (at, bt) = (typed(&ak, gamma, None)?, typed(&bk, gamma, None)?);
            let mut avoid = ctx_ftv(gamma, delta);
            avoid.extend(at.ftv().into_iter().chain(bt.ftv()).chain(ak.ftv()).chain(bk.ftv()));
            avoid.extend(type_binders(&ak).into_iter().chain(type_binders(&bk)));
            let x = fresh_tyvar("X", Sort::Value, &avoid);
            let names: BTreeSet<Name> = ak.fv().into_iter().chain(bk.fv()).collect();
            let k = fresh_var("k", &names);
            let kty = Type::arrows(vec![at, bt], vvar(&x));
            Term::TyLamV(x, Box::new(Term::Lam(k.clone(), kty, Box::new(Term::apps(Term::Var(k), [ak, bk])))))
        }
        K::Fst(p) | K::Snd(p) => {
            let pk = elab_tm(sig, gamma, None, p)?;
            let pt = typed(&pk, gamma, None)?;
            let (a, b) = match_prod(&pt)
                .ok_or_else(|| tyerr(ErrorCode::AppMismatch, format!("projection from a term of type {pt}"), span))?;
            let pick = if matches!(t.kind, K::Fst(_)) { "x" } else { "y" };
            let sel = Term::lam("x", a.clone(), Term::lam("y", b.clone(), Term::var(pick)));
            let res = if pick == "x" { a.clone() } else { b.clone() };
            Term::app(Term::ty_app_v(pk, res), sel)
        }
        K::Inj(right, other, inner) => {
            let tk = elab_tm(sig, gamma, None, inner)?;
            let tt = typed(&tk, gamma, None)?;
            let o = elab_type_in_term(other)?;
            let (a, b) = if *right { (o, tt) } else { (tt, o) };
            injection(&tk, &a, &b, *right, false, &ctx_ftv(gamma, delta))
        }
        K::InjC(right, other, inner) => {
            let tk = elab_tm(sig, gamma, delta, inner)?;
            let tt = typed(&tk, gamma, delta)?;
            let o = elab_type_in_term(other)?;
            if !tt.is_computation() || !o.is_computation() {
                return Err(tyerr(ErrorCode::KindMismatch, "linear injection needs computation types", span));
            }
            let (a, b) = if *right { (o, tt) } else { (tt, o) };
            injection(&tk, &a, &b, *right, true, &ctx_ftv(gamma, delta))
        }
        K::Case(s, x, u, y, v) => {
            let sk = elab_tm(sig, gamma, None, s)?;
            let st = typed(&sk, gamma, None)?;
            let (a, b) = match_sum(&st)
                .ok_or_else(|| tyerr(ErrorCode::AppMismatch, format!("case on a term of type {st}"), span))?;
            let (gu, gv) = (extend(x, a), extend(y, b));
            let uk = elab_tm(sig, &gu, None, u)?;
            let vk = elab_tm(sig, &gv, None, v)?;
            let (ut, vt) = (typed(&uk, &gu, None)?, typed(&vk, &gv, None)?);
            if !alpha_eq_type(&ut, &vt) {
                return Err(tyerr(ErrorCode::AppMismatch, format!("case branches have types {ut} and {vt}"), span));
            }
            Term::apps(
                Term::ty_app_v(sk, ut),
                [Term::Lam(x.clone(), a.clone(), Box::new(uk)), Term::Lam(y.clone(), b.clone(), Box::new(vk))],
            )
        }
        K::CaseC(s, x, u, y, v) => {
            let sk = elab_tm(sig, gamma, delta, s)?;
            let st = typed(&sk, gamma, delta)?;
            let (a, b) = match_oplus(&st)
                .ok_or_else(|| tyerr(ErrorCode::AppMismatch, format!("caseo on a term of type {st}"), span))?;
            let gu: Ctx = gamma.iter().filter(|(z, _)| z != x).cloned().collect();
            let gv: Ctx = gamma.iter().filter(|(z, _)| z != y).cloned().collect();
            let uk = elab_tm(sig, &gu, Some((x, a)), u)?;
            let vk = elab_tm(sig, &gv, Some((y, b)), v)?;
            let ut = typed(&uk, &gu, Some((x, a)))?;
            let vt = typed(&vk, &gv, Some((y, b)))?;
            if !alpha_eq_type(&ut, &vt) {
                return Err(tyerr(ErrorCode::AppMismatch, format!("caseo branches have types {ut} and {vt}"), span));
            }
            Term::apps(
                Term::ty_app_c(sk, ut),
                [Term::LinLam(x.clone(), a.clone(), Box::new(uk)), Term::LinLam(y.clone(), b.clone(), Box::new(vk))],
            )
        }
    })
}

/// `Fun X => fun f:(a -> X) => fun g:(b -> X) => f t` and variants; the
/// linear variant uses `-o` and a computation variable.
fn injection(t: &Term, a: &Type, b: &Type, right: bool, linear: bool, ctx: &BTreeSet<TyVar>) -> Term {
    let mut avoid = ctx.clone();
    avoid.extend(a.ftv().into_iter().chain(b.ftv()).chain(t.ftv()));
    avoid.extend(type_binders(t));
    let sort = if linear { Sort::Computation } else { Sort::Value };
    let x = fresh_tyvar("X", sort, &avoid);
    let xt = TyVar { sort, name: x.clone() }.as_type();
    let fv = t.fv();
    let f = fresh_var("f", &fv);
    let mut fv2 = fv.clone();
    fv2.insert(f.clone());
    let g = fresh_var("g", &fv2);
    let hom = |d: &Type| if linear { Type::lolli(d.clone(), xt.clone()) } else { Type::arrow(d.clone(), xt.clone()) };
    let chosen = if right { g.clone() } else { f.clone() };
    let body = Term::Lam(
        f,
        hom(a),
        Box::new(Term::Lam(g, hom(b), Box::new(Term::app(Term::Var(chosen), t.clone())))),
    );
    if linear {
        Term::TyLamC(x, Box::new(body))
    } else {
        Term::TyLamV(x, Box::new(body))
    }
}

// ---------------------------------------------------------------------------
// Effect constants

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantSig {
    pub name: String,
    #[serde(rename = "type-text")]
    pub type_text: String,
    #[serde(rename = "denotation-key")]
    pub denotation_key: String,
    #[serde(skip)]
    pub scheme: Type,
}

pub fn or_type() -> Type {
    Type::forall_c("X", Type::arrows(vec![Type::cvar("X"), Type::cvar("X")], Type::cvar("X")))
}

pub fn raise_type() -> Type {
    Type::forall_c("X", Type::cvar("X"))
}

pub fn handle_type() -> Type {
    let bx = bang(&Type::vvar("X"));
    Type::forall_v("X", Type::lolli(Type::arrow(numeral(2), bx.clone()), bx))
}

fn constant(n: String, scheme: Type, key: String) -> ConstantSig {
    ConstantSig { name: n, type_text: scheme.to_string(), denotation_key: key, scheme }
}

pub fn register_effect_constants(m: &MonadSpec) -> Vec<ConstantSig> {
    match m.kind {
        MonadKind::Identity => Vec::new(),
        MonadKind::Powerset => vec![constant("or".into(), or_type(), "semilattice.join".into())],
        MonadKind::Exception => {
            let mut out = Vec::new();
            for e in &m.exceptions {
                out.push(constant(format!("raise[{e}]"), raise_type(), format!("exception.raise:{e}")));
            }
            for e in &m.exceptions {
                out.push(constant(format!("handle[{e}]"), handle_type(), format!("exception.handle:{e}")));
            }
            out
        }
    }
}

pub fn signature_of(consts: &[ConstantSig]) -> Signature {
    let mut sig = Signature::new();
    for c in consts {
        sig.insert(name(&c.name), c.scheme.clone());
    }
    sig
}

// ---------------------------------------------------------------------------
// Call-by-push-value types

#[derive(Clone, Debug, PartialEq)]
pub enum CbpvVal {
    Var(Name),
    Unit,
    Zero,
    Sum(Box<CbpvVal>, Box<CbpvVal>),
    Prod(Box<CbpvVal>, Box<CbpvVal>),
    U(Box<CbpvComp>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum CbpvComp {
    Var(Name),
    F(Box<CbpvVal>),
    Arrow(Box<CbpvVal>, Box<CbpvComp>),
    Prod(Box<CbpvComp>, Box<CbpvComp>),
    Top,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CbpvType {
    Val(CbpvVal),
    Comp(CbpvComp),
}

pub fn cbpv_translate_type(t: &CbpvType) -> Type {
    match t {
        CbpvType::Val(v) => cbpv_val(v),
        CbpvType::Comp(c) => cbpv_comp(c),
    }
}

fn cbpv_val(v: &CbpvVal) -> Type {
    match v {
        CbpvVal::Var(x) => Type::VVar(x.clone()),
        CbpvVal::Unit => unit(),
        CbpvVal::Zero => zero(),
        CbpvVal::Sum(a, b) => sum(&cbpv_val(a), &cbpv_val(b)),
        CbpvVal::Prod(a, b) => prod(&cbpv_val(a), &cbpv_val(b)),
        CbpvVal::U(c) => cbpv_comp(c),
    }
}

fn cbpv_comp(c: &CbpvComp) -> Type {
    let out = match c {
        CbpvComp::Var(x) => Type::CVar(x.clone()),
        CbpvComp::F(a) => bang(&cbpv_val(a)),
        CbpvComp::Arrow(a, b) => Type::arrow(cbpv_val(a), cbpv_comp(b)),
        CbpvComp::Prod(a, b) => prod_c(&cbpv_comp(a), &cbpv_comp(b)),
        CbpvComp::Top => unit_c(),
    };
    debug_assert_eq!(classify_type(&out), Ok(Kind::Computation));
    out
}

/// Substitute each variable of `vars` by the matching type; used to
/// instantiate encodings at concrete types in tests.
pub fn instantiate(t: &Type, vars: &[(TyVar, Type)]) -> Type {
    vars.iter().fold(t.clone(), |acc, (v, r)| subst_type(&acc, v, r).expect("sort-correct instantiation"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::alpha_eq_type;
    use crate::surface::parse_type;

    fn p(s: &str) -> Type {
        elaborate_type(&parse_type(s).unwrap()).unwrap()
    }

    #[test]
    fn value_encodings_verbatim() {
        let a = Type::vvar("A");
        let b = Type::vvar("B");
        assert!(alpha_eq_type(&prod(&a, &b), &p("forall X. (A -> B -> X) -> X")));
        assert!(alpha_eq_type(&zero(), &p("forall X. X")));
        assert!(alpha_eq_type(&p("mu X. X"), &p("forall X. (X -> X) -> X")));
        assert!(alpha_eq_type(&p("A + B"), &p("forall X. (A -> X) -> (B -> X) -> X")));
        assert!(alpha_eq_type(&p("exists X. X -> A"), &p("forall Y. (forall X. (X -> A) -> Y) -> Y")));
        assert!(alpha_eq_type(&p("2"), &p("1 + 1")));
    }

    #[test]
    fn computation_encodings_verbatim() {
        assert!(alpha_eq_type(&p("0o"), &p("forall ^X. ^X")));
        assert!(alpha_eq_type(&p("^A (+) ^B"), &p("forall ^X. (^A -o ^X) -> (^B -o ^X) -> ^X")));
        assert!(alpha_eq_type(&p("B . ^A"), &p("forall ^X. (B -> ^A -o ^X) -> ^X")));
        assert!(alpha_eq_type(&p("1o"), &p("forall ^X. 0 -> ^X")));
    }

    #[test]
    fn encodings_avoid_capture() {
        // the product of X with itself must not reuse X as its binder
        let x = Type::vvar("X");
        let t = prod(&x, &x);
        assert!(t.ftv().contains(&TyVar::v("X")));
        let b = Type::forall_c("X", Type::cvar("X"));
        let bb = bang(&b);
        assert_eq!(classify_type(&bb), Ok(Kind::Computation));
        let free = Type::cvar("X");
        assert!(bang(&Type::arrow(Type::vvar("B"), free.clone())).ftv().contains(&TyVar::c("X")));
    }

    #[test]
    fn positivity() {
        assert!(encode_value_type(&ValueCtor::Mu(name("X"), Type::arrow(Type::vvar("X"), Type::vvar("A")))).is_err());
        assert!(encode_value_type(&ValueCtor::Mu(name("X"), Type::arrow(Type::vvar("A"), Type::vvar("X")))).is_ok());
        let neg = Type::arrow(Type::arrow(Type::vvar("X"), Type::vvar("A")), Type::vvar("A"));
        assert!(occurs_positively(&neg, &TyVar::v("X")));
    }

    #[test]
    fn bang_is_a_computation_type() {
        for s in ["1", "X", "^A -o ^B", "forall ^X. ^X"] {
            assert_eq!(classify_type(&bang(&p(s))), Ok(Kind::Computation), "{s}");
        }
    }
}

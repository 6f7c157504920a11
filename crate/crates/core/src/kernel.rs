//! Abstract syntax of types and terms, kind classification, capture-avoiding
//! substitution and alpha-equivalence.
//!
//! Type variables come in two disjoint sorts. A value variable `X` ranges over
//! sets, a computation variable `^X` over algebras; the two are distinct even
//! when they share a name.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Value,
    Computation,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TyVar {
    pub sort: Sort,
    pub name: Name,
}

impl TyVar {
    pub fn v(n: &str) -> Self {
        TyVar { sort: Sort::Value, name: name(n) }
    }

    pub fn c(n: &str) -> Self {
        TyVar { sort: Sort::Computation, name: name(n) }
    }

    pub fn as_type(&self) -> Type {
        match self.sort {
            Sort::Value => Type::VVar(self.name.clone()),
            Sort::Computation => Type::CVar(self.name.clone()),
        }
    }
}

impl std::fmt::Display for TyVar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.sort {
            Sort::Value => write!(f, "{}", self.name),
            Sort::Computation => write!(f, "^{}", self.name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    VVar(Name),
    CVar(Name),
    Arrow(Box<Type>, Box<Type>),
    Lolli(Box<Type>, Box<Type>),
    ForallV(Name, Box<Type>),
    ForallC(Name, Box<Type>),
}

impl Type {
    pub fn vvar(n: &str) -> Type {
        Type::VVar(name(n))
    }

    pub fn cvar(n: &str) -> Type {
        Type::CVar(name(n))
    }

    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Box::new(a), Box::new(b))
    }

    pub fn lolli(a: Type, b: Type) -> Type {
        Type::Lolli(Box::new(a), Box::new(b))
    }

    pub fn forall_v(x: &str, b: Type) -> Type {
        Type::ForallV(name(x), Box::new(b))
    }

    pub fn forall_c(x: &str, b: Type) -> Type {
        Type::ForallC(name(x), Box::new(b))
    }

    /// Right-nested arrow `a1 -> ... -> an -> res`.
    pub fn arrows(args: Vec<Type>, res: Type) -> Type {
        args.into_iter().rev().fold(res, |acc, a| Type::arrow(a, acc))
    }

    pub fn ftv(&self) -> BTreeSet<TyVar> {
        let mut out = BTreeSet::new();
        self.collect_ftv(&mut Vec::new(), &mut out);
        out
    }

    fn collect_ftv(&self, bound: &mut Vec<TyVar>, out: &mut BTreeSet<TyVar>) {
        match self {
            Type::VVar(n) | Type::CVar(n) => {
                let v = TyVar { sort: self.var_sort().unwrap(), name: n.clone() };
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
            Type::Arrow(a, b) | Type::Lolli(a, b) => {
                a.collect_ftv(bound, out);
                b.collect_ftv(bound, out);
            }
            Type::ForallV(x, b) | Type::ForallC(x, b) => {
                bound.push(TyVar { sort: self.binder_sort().unwrap(), name: x.clone() });
                b.collect_ftv(bound, out);
                bound.pop();
            }
        }
    }

    pub fn has_free(&self, v: &TyVar) -> bool {
        match self {
            Type::VVar(n) => v.sort == Sort::Value && *n == v.name,
            Type::CVar(n) => v.sort == Sort::Computation && *n == v.name,
            Type::Arrow(a, b) | Type::Lolli(a, b) => a.has_free(v) || b.has_free(v),
            Type::ForallV(x, b) | Type::ForallC(x, b) => {
                let shadows = self.binder_sort() == Some(v.sort) && *x == v.name;
                !shadows && b.has_free(v)
            }
        }
    }

    fn var_sort(&self) -> Option<Sort> {
        match self {
            Type::VVar(_) => Some(Sort::Value),
            Type::CVar(_) => Some(Sort::Computation),
            _ => None,
        }
    }

    pub fn binder_sort(&self) -> Option<Sort> {
        match self {
            Type::ForallV(..) => Some(Sort::Value),
            Type::ForallC(..) => Some(Sort::Computation),
            _ => None,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Type::VVar(_) | Type::CVar(_) => 0,
            Type::Arrow(a, b) | Type::Lolli(a, b) => 1 + a.depth().max(b.depth()),
            Type::ForallV(_, b) | Type::ForallC(_, b) => 1 + b.depth(),
        }
    }

    pub fn is_computation(&self) -> bool {
        matches!(classify_type(self), Ok(Kind::Computation))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    Value,
    Computation,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum KindError {
    #[error("linear function type has a non-computation {side}: {ty:?}")]
    LolliArgument { side: &'static str, ty: Type },
    #[error("type variable {0} is not in scope")]
    Unscoped(TyVar),
}

/// Classify a type as a computation type or a (mere) value type.
///
/// Computation types are `^X`, `B -> C` with `C` a computation type, and
/// quantifications over computation types. Both sides of `-o` must be
/// computation types; the linear function type itself is only a value type.
pub fn classify_type(t: &Type) -> Result<Kind, KindError> {
    match t {
        Type::VVar(_) => Ok(Kind::Value),
        Type::CVar(_) => Ok(Kind::Computation),
        Type::Arrow(a, b) => {
            classify_type(a)?;
            classify_type(b)
        }
        Type::Lolli(a, b) => {
            if classify_type(a)? != Kind::Computation {
                return Err(KindError::LolliArgument { side: "domain", ty: (**a).clone() });
            }
            if classify_type(b)? != Kind::Computation {
                return Err(KindError::LolliArgument { side: "codomain", ty: (**b).clone() });
            }
            Ok(Kind::Value)
        }
        Type::ForallV(_, b) | Type::ForallC(_, b) => classify_type(b),
    }
}

/// Check that every free type variable of `t` is in `scope`.
pub fn check_scope(t: &Type, scope: &BTreeSet<TyVar>) -> Result<(), KindError> {
    match t.ftv().into_iter().find(|v| !scope.contains(v)) {
        Some(v) => Err(KindError::Unscoped(v)),
        None => Ok(()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("cannot substitute value type {repl:?} for computation variable {var}")]
pub struct SortMismatch {
    pub var: TyVar,
    pub repl: Type,
}

/// Pick a variant of `base` for which `taken` is false.
pub fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> Name {
    if !taken(base) {
        return name(base);
    }
    let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
    let stem = if stem.is_empty() { "v" } else { stem };
    (1..)
        .map(|i| format!("{stem}{i}"))
        .find(|c| !taken(c))
        .map(|c| name(&c))
        .unwrap()
}

/// Capture-avoiding substitution `body[repl/var]`.
pub fn subst_type(body: &Type, var: &TyVar, repl: &Type) -> Result<Type, SortMismatch> {
    if var.sort == Sort::Computation && !repl.is_computation() {
        return Err(SortMismatch { var: var.clone(), repl: repl.clone() });
    }
    Ok(subst_type_unchecked(body, var, repl, &repl.ftv()))
}

fn subst_type_unchecked(body: &Type, var: &TyVar, repl: &Type, repl_ftv: &BTreeSet<TyVar>) -> Type {
    match body {
        Type::VVar(n) if var.sort == Sort::Value && *n == var.name => repl.clone(),
        Type::CVar(n) if var.sort == Sort::Computation && *n == var.name => repl.clone(),
        Type::VVar(_) | Type::CVar(_) => body.clone(),
        Type::Arrow(a, b) => Type::arrow(
            subst_type_unchecked(a, var, repl, repl_ftv),
            subst_type_unchecked(b, var, repl, repl_ftv),
        ),
        Type::Lolli(a, b) => Type::lolli(
            subst_type_unchecked(a, var, repl, repl_ftv),
            subst_type_unchecked(b, var, repl, repl_ftv),
        ),
        Type::ForallV(x, b) | Type::ForallC(x, b) => {
            let sort = body.binder_sort().unwrap();
            let bv = TyVar { sort, name: x.clone() };
            if bv == *var || !b.has_free(var) {
                return body.clone();
            }
            let (x2, b2) = if repl_ftv.contains(&bv) {
                let b_ftv = b.ftv();
                let z = fresh_name(x, |c| {
                    let cand = TyVar { sort, name: name(c) };
                    repl_ftv.contains(&cand) || b_ftv.contains(&cand) || cand == *var
                });
                let zt = TyVar { sort, name: z.clone() }.as_type();
                (z, subst_type_unchecked(b, &bv, &zt, &zt.ftv()))
            } else {
                (x.clone(), (**b).clone())
            };
            let inner = Box::new(subst_type_unchecked(&b2, var, repl, repl_ftv));
            match sort {
                Sort::Value => Type::ForallV(x2, inner),
                Sort::Computation => Type::ForallC(x2, inner),
            }
        }
    }
}

/// Alpha-equivalence of types.
pub fn alpha_eq_type(a: &Type, b: &Type) -> bool {
    aeq_ty(a, b, &mut Vec::new())
}

fn lookup_pair<T: PartialEq>(env: &[(T, T)], x: &T, y: &T) -> bool {
    let i = env.iter().rposition(|(l, _)| l == x);
    let j = env.iter().rposition(|(_, r)| r == y);
    match (i, j) {
        (None, None) => x == y,
        (Some(i), Some(j)) => i == j,
        _ => false,
    }
}

fn aeq_ty(a: &Type, b: &Type, env: &mut Vec<(TyVar, TyVar)>) -> bool {
    match (a, b) {
        (Type::VVar(x), Type::VVar(y)) => lookup_pair(env, &TyVar { sort: Sort::Value, name: x.clone() }, &TyVar { sort: Sort::Value, name: y.clone() }),
        (Type::CVar(x), Type::CVar(y)) => lookup_pair(
            env,
            &TyVar { sort: Sort::Computation, name: x.clone() },
            &TyVar { sort: Sort::Computation, name: y.clone() },
        ),
        (Type::Arrow(a1, b1), Type::Arrow(a2, b2)) | (Type::Lolli(a1, b1), Type::Lolli(a2, b2)) => {
            aeq_ty(a1, a2, env) && aeq_ty(b1, b2, env)
        }
        (Type::ForallV(x, b1), Type::ForallV(y, b2)) | (Type::ForallC(x, b1), Type::ForallC(y, b2)) => {
            let sort = a.binder_sort().unwrap();
            env.push((TyVar { sort, name: x.clone() }, TyVar { sort, name: y.clone() }));
            let r = aeq_ty(b1, b2, env);
            env.pop();
            r
        }
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Name),
    Lam(Name, Type, Box<Term>),
    LinLam(Name, Type, Box<Term>),
    App(Box<Term>, Box<Term>),
    TyLamV(Name, Box<Term>),
    TyLamC(Name, Box<Term>),
    TyAppV(Box<Term>, Type),
    TyAppC(Box<Term>, Type),
    Const(Name),
}

impl Term {
    pub fn var(x: &str) -> Term {
        Term::Var(name(x))
    }

    pub fn lam(x: &str, ty: Type, body: Term) -> Term {
        Term::Lam(name(x), ty, Box::new(body))
    }

    pub fn lin_lam(x: &str, ty: Type, body: Term) -> Term {
        Term::LinLam(name(x), ty, Box::new(body))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }

    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }

    pub fn ty_lam_v(x: &str, body: Term) -> Term {
        Term::TyLamV(name(x), Box::new(body))
    }

    pub fn ty_lam_c(x: &str, body: Term) -> Term {
        Term::TyLamC(name(x), Box::new(body))
    }

    pub fn ty_app_v(f: Term, ty: Type) -> Term {
        Term::TyAppV(Box::new(f), ty)
    }

    pub fn ty_app_c(f: Term, ty: Type) -> Term {
        Term::TyAppC(Box::new(f), ty)
    }

    pub fn constant(n: &str) -> Term {
        Term::Const(name(n))
    }

    /// Free term variables.
    pub fn fv(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.collect_fv(&mut Vec::new(), &mut out);
        out
    }

    fn collect_fv(&self, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
        match self {
            Term::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            Term::Lam(x, _, b) | Term::LinLam(x, _, b) => {
                bound.push(x.clone());
                b.collect_fv(bound, out);
                bound.pop();
            }
            Term::App(f, a) => {
                f.collect_fv(bound, out);
                a.collect_fv(bound, out);
            }
            Term::TyLamV(_, b) | Term::TyLamC(_, b) | Term::TyAppV(b, _) | Term::TyAppC(b, _) => {
                b.collect_fv(bound, out)
            }
            Term::Const(_) => {}
        }
    }

    pub fn occurs_free(&self, x: &Name) -> bool {
        match self {
            Term::Var(y) => y == x,
            Term::Lam(y, _, b) | Term::LinLam(y, _, b) => y != x && b.occurs_free(x),
            Term::App(f, a) => f.occurs_free(x) || a.occurs_free(x),
            Term::TyLamV(_, b) | Term::TyLamC(_, b) | Term::TyAppV(b, _) | Term::TyAppC(b, _) => b.occurs_free(x),
            Term::Const(_) => false,
        }
    }

    /// Number of free occurrences of `x`.
    pub fn count_free(&self, x: &Name) -> usize {
        match self {
            Term::Var(y) => usize::from(y == x),
            Term::Lam(y, _, b) | Term::LinLam(y, _, b) => {
                if y == x {
                    0
                } else {
                    b.count_free(x)
                }
            }
            Term::App(f, a) => f.count_free(x) + a.count_free(x),
            Term::TyLamV(_, b) | Term::TyLamC(_, b) | Term::TyAppV(b, _) | Term::TyAppC(b, _) => b.count_free(x),
            Term::Const(_) => 0,
        }
    }

    /// Free type variables occurring in annotations and type arguments.
    pub fn ftv(&self) -> BTreeSet<TyVar> {
        let mut out = BTreeSet::new();
        self.collect_ftv(&mut Vec::new(), &mut out);
        out
    }

    fn collect_ftv(&self, bound: &mut Vec<TyVar>, out: &mut BTreeSet<TyVar>) {
        let add = |t: &Type, bound: &Vec<TyVar>, out: &mut BTreeSet<TyVar>| {
            for v in t.ftv() {
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
        };
        match self {
            Term::Var(_) | Term::Const(_) => {}
            Term::Lam(_, t, b) | Term::LinLam(_, t, b) => {
                add(t, bound, out);
                b.collect_ftv(bound, out);
            }
            Term::App(f, a) => {
                f.collect_ftv(bound, out);
                a.collect_ftv(bound, out);
            }
            Term::TyLamV(x, b) => {
                bound.push(TyVar { sort: Sort::Value, name: x.clone() });
                b.collect_ftv(bound, out);
                bound.pop();
            }
            Term::TyLamC(x, b) => {
                bound.push(TyVar { sort: Sort::Computation, name: x.clone() });
                b.collect_ftv(bound, out);
                bound.pop();
            }
            Term::TyAppV(b, t) | Term::TyAppC(b, t) => {
                b.collect_ftv(bound, out);
                add(t, bound, out);
            }
        }
    }

    /// Every variable name bound or free anywhere in the term.
    pub fn all_names(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        self.walk_names(&mut out);
        out
    }

    fn walk_names(&self, out: &mut BTreeSet<Name>) {
        match self {
            Term::Var(x) => {
                out.insert(x.clone());
            }
            Term::Lam(x, _, b) | Term::LinLam(x, _, b) => {
                out.insert(x.clone());
                b.walk_names(out);
            }
            Term::App(f, a) => {
                f.walk_names(out);
                a.walk_names(out);
            }
            Term::TyLamV(_, b) | Term::TyLamC(_, b) | Term::TyAppV(b, _) | Term::TyAppC(b, _) => b.walk_names(out),
            Term::Const(_) => {}
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) | Term::Const(_) => 1,
            Term::Lam(_, _, b) | Term::LinLam(_, _, b) => 1 + b.size(),
            Term::App(f, a) => 1 + f.size() + a.size(),
            Term::TyLamV(_, b) | Term::TyLamC(_, b) | Term::TyAppV(b, _) | Term::TyAppC(b, _) => 1 + b.size(),
        }
    }
}

/// Capture-avoiding substitution `body[repl/x]` of a term for a term variable.
///
/// Binders are renamed when they would capture a free term variable or a free
/// type variable of `repl`.
pub fn subst_term(body: &Term, x: &Name, repl: &Term) -> Term {
    let fv = repl.fv();
    let ftv = repl.ftv();
    subst_term_with(body, x, repl, &fv, &ftv)
}

fn subst_term_with(body: &Term, x: &Name, repl: &Term, fv: &BTreeSet<Name>, ftv: &BTreeSet<TyVar>) -> Term {
    if !body.occurs_free(x) {
        return body.clone();
    }
    match body {
        Term::Var(_) => repl.clone(),
        Term::Const(_) => body.clone(),
        Term::App(f, a) => Term::app(subst_term_with(f, x, repl, fv, ftv), subst_term_with(a, x, repl, fv, ftv)),
        Term::Lam(y, t, b) | Term::LinLam(y, t, b) => {
            let (y2, b2) = if fv.contains(y) {
                let names = b.all_names();
                let z = fresh_name(y, |c| fv.contains(c) || names.contains(c) || **x == *c);
                (z.clone(), subst_term(b, y, &Term::Var(z)))
            } else {
                (y.clone(), (**b).clone())
            };
            let inner = Box::new(subst_term_with(&b2, x, repl, fv, ftv));
            match body {
                Term::Lam(..) => Term::Lam(y2, t.clone(), inner),
                _ => Term::LinLam(y2, t.clone(), inner),
            }
        }
        Term::TyLamV(a, b) | Term::TyLamC(a, b) => {
            let sort = if matches!(body, Term::TyLamV(..)) { Sort::Value } else { Sort::Computation };
            let bv = TyVar { sort, name: a.clone() };
            let (a2, b2) = if ftv.contains(&bv) {
                let inner_ftv = b.ftv();
                let z = fresh_name(a, |c| {
                    let cand = TyVar { sort, name: name(c) };
                    ftv.contains(&cand) || inner_ftv.contains(&cand)
                });
                let zt = TyVar { sort, name: z.clone() }.as_type();
                (z, subst_type_in_term(b, &bv, &zt))
            } else {
                (a.clone(), (**b).clone())
            };
            let inner = Box::new(subst_term_with(&b2, x, repl, fv, ftv));
            match sort {
                Sort::Value => Term::TyLamV(a2, inner),
                Sort::Computation => Term::TyLamC(a2, inner),
            }
        }
        Term::TyAppV(f, t) => Term::TyAppV(Box::new(subst_term_with(f, x, repl, fv, ftv)), t.clone()),
        Term::TyAppC(f, t) => Term::TyAppC(Box::new(subst_term_with(f, x, repl, fv, ftv)), t.clone()),
    }
}

/// Capture-avoiding substitution of a type for a type variable throughout a
/// term's annotations. The sort of `repl` is not checked here.
pub fn subst_type_in_term(body: &Term, var: &TyVar, repl: &Type) -> Term {
    let rftv = repl.ftv();
    subst_ty_term(body, var, repl, &rftv)
}

fn subst_ty_term(body: &Term, var: &TyVar, repl: &Type, rftv: &BTreeSet<TyVar>) -> Term {
    let st = |t: &Type| subst_type_unchecked(t, var, repl, rftv);
    match body {
        Term::Var(_) | Term::Const(_) => body.clone(),
        Term::Lam(y, t, b) => Term::Lam(y.clone(), st(t), Box::new(subst_ty_term(b, var, repl, rftv))),
        Term::LinLam(y, t, b) => Term::LinLam(y.clone(), st(t), Box::new(subst_ty_term(b, var, repl, rftv))),
        Term::App(f, a) => Term::app(subst_ty_term(f, var, repl, rftv), subst_ty_term(a, var, repl, rftv)),
        Term::TyAppV(f, t) => Term::TyAppV(Box::new(subst_ty_term(f, var, repl, rftv)), st(t)),
        Term::TyAppC(f, t) => Term::TyAppC(Box::new(subst_ty_term(f, var, repl, rftv)), st(t)),
        Term::TyLamV(a, b) | Term::TyLamC(a, b) => {
            let sort = if matches!(body, Term::TyLamV(..)) { Sort::Value } else { Sort::Computation };
            let bv = TyVar { sort, name: a.clone() };
            if bv == *var || !b.ftv().contains(var) {
                return body.clone();
            }
            let (a2, b2) = if rftv.contains(&bv) {
                let inner_ftv = b.ftv();
                let z = fresh_name(a, |c| {
                    let cand = TyVar { sort, name: name(c) };
                    rftv.contains(&cand) || inner_ftv.contains(&cand) || cand == *var
                });
                let zt = TyVar { sort, name: z.clone() }.as_type();
                (z, subst_type_in_term(b, &bv, &zt))
            } else {
                (a.clone(), (**b).clone())
            };
            let inner = Box::new(subst_ty_term(&b2, var, repl, rftv));
            match sort {
                Sort::Value => Term::TyLamV(a2, inner),
                Sort::Computation => Term::TyLamC(a2, inner),
            }
        }
    }
}

/// Alpha-equivalence of terms (both term and type binders).
pub fn alpha_eq_term(a: &Term, b: &Term) -> bool {
    aeq_tm(a, b, &mut Vec::new(), &mut Vec::new())
}

fn aeq_tm(a: &Term, b: &Term, vars: &mut Vec<(Name, Name)>, tys: &mut Vec<(TyVar, TyVar)>) -> bool {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) => lookup_pair(vars, x, y),
        (Term::Const(x), Term::Const(y)) => x == y,
        (Term::Lam(x, t1, b1), Term::Lam(y, t2, b2)) | (Term::LinLam(x, t1, b1), Term::LinLam(y, t2, b2)) => {
            if !aeq_ty(t1, t2, tys) {
                return false;
            }
            vars.push((x.clone(), y.clone()));
            let r = aeq_tm(b1, b2, vars, tys);
            vars.pop();
            r
        }
        (Term::App(f1, a1), Term::App(f2, a2)) => aeq_tm(f1, f2, vars, tys) && aeq_tm(a1, a2, vars, tys),
        (Term::TyLamV(x, b1), Term::TyLamV(y, b2)) | (Term::TyLamC(x, b1), Term::TyLamC(y, b2)) => {
            let sort = if matches!(a, Term::TyLamV(..)) { Sort::Value } else { Sort::Computation };
            tys.push((TyVar { sort, name: x.clone() }, TyVar { sort, name: y.clone() }));
            let r = aeq_tm(b1, b2, vars, tys);
            tys.pop();
            r
        }
        (Term::TyAppV(f1, t1), Term::TyAppV(f2, t2)) | (Term::TyAppC(f1, t1), Term::TyAppC(f2, t2)) => {
            aeq_tm(f1, f2, vars, tys) && aeq_ty(t1, t2, tys)
        }
        _ => false,
    }
}

/// A typing judgment `gamma | delta |- subject : ascription`.
#[derive(Clone, Debug, PartialEq)]
pub struct Judgment {
    pub gamma: Vec<(Name, Type)>,
    pub delta: Option<(Name, Type)>,
    pub subject: Term,
    pub ascription: Option<Type>,
}

impl Judgment {
    pub fn closed(subject: Term) -> Self {
        Judgment { gamma: Vec::new(), delta: None, subject, ascription: None }
    }

    pub fn with_gamma(mut self, x: &str, ty: Type) -> Self {
        self.gamma.push((name(x), ty));
        self
    }

    pub fn with_delta(mut self, x: &str, ty: Type) -> Self {
        self.delta = Some((name(x), ty));
        self
    }

    pub fn ascribe(mut self, ty: Type) -> Self {
        self.ascription = Some(ty);
        self
    }

    /// Free type variables of the context types.
    pub fn context_ftv(&self) -> BTreeSet<TyVar> {
        let mut out = BTreeSet::new();
        for (_, t) in self.gamma.iter().chain(self.delta.iter()) {
            out.extend(t.ftv());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Type {
        Type::vvar("X")
    }

    #[test]
    fn classification() {
        let lolli = Type::lolli(Type::cvar("X"), Type::cvar("Y"));
        assert_eq!(classify_type(&lolli), Ok(Kind::Value));
        assert_eq!(classify_type(&Type::arrow(Type::vvar("B"), Type::cvar("X"))), Ok(Kind::Computation));
        assert_eq!(classify_type(&Type::forall_v("X", Type::arrow(x(), x()))), Ok(Kind::Value));
        let bad = Type::lolli(x(), Type::cvar("Y"));
        assert!(matches!(classify_type(&bad), Err(KindError::LolliArgument { side: "domain", .. })));
        let comp_forall = Type::forall_v("X", Type::arrow(x(), Type::cvar("Y")));
        assert_eq!(classify_type(&comp_forall), Ok(Kind::Computation));
    }

    #[test]
    fn scope_errors() {
        let t = Type::forall_v("X", Type::arrow(x(), Type::vvar("Y")));
        assert_eq!(check_scope(&t, &BTreeSet::new()), Err(KindError::Unscoped(TyVar::v("Y"))));
        assert!(check_scope(&t, &[TyVar::v("Y")].into_iter().collect()).is_ok());
    }

    #[test]
    fn substitution_basics() {
        let c = Type::arrow(Type::vvar("B"), Type::cvar("Y"));
        assert_eq!(subst_type(&Type::cvar("X"), &TyVar::c("X"), &c).unwrap(), c);
        let shadowed = Type::forall_v("X", x());
        assert_eq!(subst_type(&shadowed, &TyVar::v("X"), &Type::vvar("Z")).unwrap(), shadowed);
        assert!(subst_type(&Type::cvar("X"), &TyVar::c("X"), &x()).is_err());
        // value variables of the same name as a computation variable are untouched
        assert_eq!(subst_type(&x(), &TyVar::c("X"), &Type::cvar("Q")).unwrap(), x());
    }

    #[test]
    fn substitution_avoids_capture() {
        // (forall Y. X -> Y)[Y/X] must not capture
        let body = Type::forall_v("Y", Type::arrow(x(), Type::vvar("Y")));
        let out = subst_type(&body, &TyVar::v("X"), &Type::vvar("Y")).unwrap();
        let expected = Type::forall_v("Z", Type::arrow(Type::vvar("Y"), Type::vvar("Z")));
        assert!(alpha_eq_type(&out, &expected), "{out:?}");
        assert!(!alpha_eq_type(&out, &Type::forall_v("Y", Type::arrow(Type::vvar("Y"), Type::vvar("Y")))));
    }

    #[test]
    fn alpha_equivalence() {
        let a = Type::forall_v("X", Type::arrow(x(), x()));
        let b = Type::forall_v("Y", Type::arrow(Type::vvar("Y"), Type::vvar("Y")));
        assert!(alpha_eq_type(&a, &b));
        assert!(!alpha_eq_type(&Type::forall_v("X", x()), &Type::forall_c("X", Type::cvar("X"))));
        // free variables are compared by name
        assert!(!alpha_eq_type(&Type::forall_v("X", Type::vvar("Y")), &Type::forall_v("Y", Type::vvar("Y"))));
    }

    #[test]
    fn term_substitution() {
        let t = Term::var("t");
        assert_eq!(subst_term(&Term::var("x"), &name("x"), &t), t);
        let lam = Term::lam("y", x(), Term::var("x"));
        let out = subst_term(&lam, &name("x"), &Term::var("y"));
        match &out {
            Term::Lam(y2, _, body) => {
                assert_ne!(&**y2, "y");
                assert_eq!(**body, Term::var("y"));
            }
            other => panic!("{other:?}"),
        }
        let app = Term::app(Term::var("x"), Term::var("u"));
        assert_eq!(subst_term(&app, &name("x"), &t), Term::app(t.clone(), Term::var("u")));
    }

    #[test]
    fn term_substitution_avoids_type_capture() {
        // (Fun X => fun z:X => x)[x := w @[X]] renames the type binder
        let body = Term::ty_lam_v("X", Term::lam("z", x(), Term::var("x")));
        let repl = Term::ty_app_v(Term::var("w"), x());
        let out = subst_term(&body, &name("x"), &repl);
        match out {
            Term::TyLamV(a, inner) => {
                assert_ne!(&*a, "X");
                assert_eq!(*inner, Term::lam("z", Type::VVar(a.clone()), repl));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn term_alpha_equivalence() {
        let a = Term::ty_lam_v("X", Term::lam("x", x(), Term::var("x")));
        let b = Term::ty_lam_v("Y", Term::lam("y", Type::vvar("Y"), Term::var("y")));
        assert!(alpha_eq_term(&a, &b));
        let c = Term::ty_lam_v("Y", Term::lam("y", x(), Term::var("y")));
        assert!(!alpha_eq_term(&a, &c));
    }

    #[test]
    fn fresh_names() {
        assert_eq!(&*fresh_name("X", |c| c == "X" || c == "X1"), "X2");
        assert_eq!(&*fresh_name("Y", |_| false), "Y");
    }
}

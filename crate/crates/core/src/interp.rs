//! Interpretation of types as finite sets and algebras, of types as relations,
//! and of terms as elements, over a bounded stock of representative objects.
//!
//! Every element is an index (`Ix`) into the domain of its type. Function
//! spaces are indexed in mixed radix (argument position `p` is digit `p`);
//! homomorphism sets reuse the same numbering restricted to homomorphisms;
//! polymorphic types store one component per representative object and list
//! their parametric families explicitly.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;
use thiserror::Error;

use crate::encodings::{numeral, register_effect_constants, signature_of, unit};
use crate::finmodel::{self, Alg, AlgOps, MonadSpec, ModelConfig};
use crate::kernel::{name, subst_type, Name, Sort, Term, TyVar, Type};
use crate::typecheck::Signature;

pub type Ix = u64;

static NEXT_ID: AtomicU64 = AtomicU64::new(1);

fn next_id() -> u64 {
    NEXT_ID.fetch_add(1, Ordering::Relaxed)
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize)]
pub enum SemError {
    #[error("out of bound: {0}")]
    OutOfBound(String),
    #[error("not parametric: {0}")]
    NotParametric(String),
    #[error("not a homomorphism: {0}")]
    NotHomomorphism(String),
    #[error("ill-formed: {0}")]
    IllFormed(String),
}

pub type SemResult<T> = Result<T, SemError>;

fn oob<T>(msg: impl Into<String>) -> SemResult<T> {
    Err(SemError::OutOfBound(msg.into()))
}

fn ill<T>(msg: impl Into<String>) -> SemResult<T> {
    Err(SemError::IllFormed(msg.into()))
}

fn pow(base: u64, exp: u64) -> Option<u64> {
    let mut acc: u64 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

// ---------------------------------------------------------------------------
// Domains

pub struct Dom {
    pub id: u64,
    pub shape: Shape,
    members: OnceLock<SemResult<Arc<[Ix]>>>,
}

pub enum Shape {
    /// Elements `0..n` of a base object.
    Atom(u64),
    /// All functions; `space = |res| ^ |arg|`.
    Fun { arg: Arc<Dom>, res: Arc<Dom>, space: u64 },
    /// Homomorphisms between two algebras, numbered as functions.
    Lolli { arg: Arc<Algebra>, res: Arc<Algebra>, space: u64 },
    /// Parametric families, one component per representative.
    Poly { sort: Sort, comps: Vec<Arc<Dom>>, rows: Vec<Box<[Ix]>>, index: HashMap<Box<[Ix]>, Ix> },
}

impl fmt::Debug for Dom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::Atom(n) => write!(f, "Atom#{}({n})", self.id),
            Shape::Fun { space, .. } => write!(f, "Fun#{}({space})", self.id),
            Shape::Lolli { space, .. } => write!(f, "Lolli#{}(<= {space})", self.id),
            Shape::Poly { rows, .. } => write!(f, "Poly#{}({})", self.id, rows.len()),
        }
    }
}

impl Dom {
    fn new(shape: Shape) -> Dom {
        Dom { id: next_id(), shape, members: OnceLock::new() }
    }

    pub fn atom(n: u64) -> Arc<Dom> {
        Arc::new(Dom::new(Shape::Atom(n)))
    }

    fn fun(arg: Arc<Dom>, res: Arc<Dom>) -> SemResult<Dom> {
        let (a, r) = (arg.count()?, res.count()?);
        match pow(r, a) {
            Some(space) => Ok(Dom::new(Shape::Fun { arg, res, space })),
            None => oob(format!("function space {r}^{a} does not fit in 64 bits")),
        }
    }

    fn lolli(arg: Arc<Algebra>, res: Arc<Algebra>) -> SemResult<Dom> {
        let (a, r) = (arg.dom.count()?, res.dom.count()?);
        match pow(r, a) {
            Some(space) => Ok(Dom::new(Shape::Lolli { arg, res, space })),
            None => oob(format!("homomorphism space {r}^{a} does not fit in 64 bits")),
        }
    }

    /// Whether indices are exactly `0..count`.
    pub fn is_dense(&self) -> bool {
        !matches!(self.shape, Shape::Lolli { .. })
    }

    pub fn count(&self) -> SemResult<u64> {
        match &self.shape {
            Shape::Atom(n) => Ok(*n),
            Shape::Fun { space, .. } => Ok(*space),
            Shape::Poly { rows, .. } => Ok(rows.len() as u64),
            Shape::Lolli { .. } => Ok(self.members()?.len() as u64),
        }
    }

    /// All elements in increasing order.
    pub fn members(&self) -> SemResult<Arc<[Ix]>> {
        self.members.get_or_init(|| self.compute_members()).clone()
    }

    fn compute_members(&self) -> SemResult<Arc<[Ix]>> {
        const LIMIT: u64 = 1 << 22;
        match &self.shape {
            Shape::Lolli { arg, res, .. } => {
                let a = arg.table()?;
                let b = res.table()?;
                let r = res.dom.count()?;
                let Some(homs) = finmodel::homomorphisms_limited(&a, &b, LIMIT as usize) else {
                    return oob(format!("more than {LIMIT} homomorphisms"));
                };
                let mut out: Vec<Ix> = homs.iter().map(|h| h.iter().rev().fold(0u64, |acc, &v| acc * r + v as u64)).collect();
                out.sort_unstable();
                Ok(out.into())
            }
            _ => {
                let n = self.count()?;
                if n > LIMIT {
                    return oob(format!("domain with {n} elements cannot be listed"));
                }
                Ok((0..n).collect::<Vec<_>>().into())
            }
        }
    }

    pub fn contains(&self, x: Ix) -> SemResult<bool> {
        match &self.shape {
            Shape::Lolli { arg, res, space } => {
                if x >= *space {
                    return Ok(false);
                }
                let t = decode(x, res.dom.count()?, arg.dom.count()?);
                is_hom(&t, arg, res)
            }
            _ => Ok(x < self.count()?),
        }
    }

    /// Position of an element in `members()`.
    pub fn pos(&self, x: Ix) -> SemResult<u64> {
        if self.is_dense() {
            return Ok(x);
        }
        let m = self.members()?;
        m.binary_search(&x).map(|p| p as u64).or_else(|_| ill(format!("{x} is not an element of {self:?}")))
    }

    pub fn at(&self, p: u64) -> SemResult<Ix> {
        if self.is_dense() {
            return Ok(p);
        }
        Ok(self.members()?[p as usize])
    }

    pub fn rows(&self) -> Option<&[Box<[Ix]>]> {
        match &self.shape {
            Shape::Poly { rows, .. } => Some(rows),
            _ => None,
        }
    }

    fn row_index(&self, row: &[Ix]) -> Option<Ix> {
        match &self.shape {
            Shape::Poly { index, .. } => index.get(row).copied(),
            _ => None,
        }
    }
}

/// Digits of `x` in base `r`, `n` of them, least significant first.
fn decode(mut x: u64, r: u64, n: u64) -> Vec<u64> {
    let mut out = Vec::with_capacity(n as usize);
    for _ in 0..n {
        out.push(if r == 0 { 0 } else { x % r });
        if r > 0 {
            x /= r;
        }
    }
    out
}

fn encode(digits: &[u64], r: u64) -> u64 {
    digits.iter().rev().fold(0u64, |acc, &d| acc * r + d)
}

/// Apply a function or homomorphism element to an argument.
pub fn apply(d: &Dom, f: Ix, x: Ix) -> SemResult<Ix> {
    match &d.shape {
        Shape::Fun { arg, res, .. } => {
            let p = arg.pos(x)?;
            let r = res.count()?;
            let digit = (f / pow(r, p).unwrap_or(u64::MAX)) % r.max(1);
            res.at(digit)
        }
        Shape::Lolli { res, .. } => {
            let r = res.dom.count()?;
            Ok((f / pow(r, x).unwrap_or(u64::MAX)) % r.max(1))
        }
        _ => ill(format!("applying an element of {d:?}")),
    }
}

/// The element of a function or homomorphism domain with the given table
/// (values listed in argument-position order).
pub fn tabulate(d: &Dom, table: &[Ix]) -> SemResult<Ix> {
    match &d.shape {
        Shape::Fun { res, .. } => {
            let r = res.count()?;
            let digits = table.iter().map(|&v| res.pos(v)).collect::<SemResult<Vec<_>>>()?;
            Ok(encode(&digits, r))
        }
        Shape::Lolli { res, .. } => Ok(encode(table, res.dom.count()?)),
        _ => ill(format!("tabulating into {d:?}")),
    }
}

/// The table of a function or homomorphism element.
pub fn table_of(d: &Dom, f: Ix) -> SemResult<Vec<Ix>> {
    match &d.shape {
        Shape::Fun { arg, .. } => arg.members()?.iter().map(|&x| apply(d, f, x)).collect(),
        Shape::Lolli { arg, res, .. } => Ok(decode(f, res.dom.count()?, arg.dom.count()?)),
        _ => ill(format!("table of an element of {d:?}")),
    }
}

/// Element of a curried function domain from its values on argument tuples,
/// the first argument being most significant.
pub fn encode_curried(d: &Dom, vals: &[Ix]) -> SemResult<Ix> {
    match &d.shape {
        Shape::Fun { arg, res, .. } => {
            let n = arg.count()? as usize;
            if n == 0 {
                return Ok(0);
            }
            let block = vals.len() / n;
            let mut table = Vec::with_capacity(n);
            for p in 0..n {
                table.push(encode_curried(res, &vals[p * block..(p + 1) * block])?);
            }
            tabulate(d, &table)
        }
        _ => Ok(vals[0]),
    }
}

// ---------------------------------------------------------------------------
// Algebras

pub struct Algebra {
    pub id: u64,
    pub dom: Arc<Dom>,
    pub structure: Structure,
    table: OnceLock<SemResult<Alg>>,
}

pub enum Structure {
    Base(Alg),
    /// Structure of `B -> A` computed argumentwise from that of `A`.
    Pointwise(Arc<Algebra>),
    /// Structure of a polymorphic type computed componentwise.
    Family(Vec<Arc<Algebra>>),
}

impl fmt::Debug for Algebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.structure {
            Structure::Base(a) => write!(f, "Alg#{}({:?})", self.id, a),
            Structure::Pointwise(_) => write!(f, "Alg#{}(pointwise on {:?})", self.id, self.dom),
            Structure::Family(_) => write!(f, "Alg#{}(family on {:?})", self.id, self.dom),
        }
    }
}

impl Algebra {
    fn new(dom: Arc<Dom>, structure: Structure) -> Algebra {
        Algebra { id: next_id(), dom, structure, table: OnceLock::new() }
    }

    pub fn base(a: Alg) -> Arc<Algebra> {
        Arc::new(Algebra::new(Dom::atom(a.carrier as u64), Structure::Base(a)))
    }

    pub fn raise(&self, e: usize) -> SemResult<Ix> {
        match &self.structure {
            Structure::Base(a) => match &a.ops {
                AlgOps::Exception { raise } => Ok(raise[e] as Ix),
                _ => ill("raise in an algebra without exceptions"),
            },
            Structure::Pointwise(inner) => {
                let v = inner.raise(e)?;
                let n = self.arg_count()?;
                tabulate(&self.dom, &vec![v; n as usize])
            }
            Structure::Family(comps) => {
                let row: Vec<Ix> = comps.iter().map(|c| c.raise(e)).collect::<SemResult<_>>()?;
                self.dom.row_index(&row).ok_or_else(|| SemError::NotParametric("raise family is missing".into()))
            }
        }
    }

    pub fn join(&self, a: Ix, b: Ix) -> SemResult<Ix> {
        match &self.structure {
            Structure::Base(alg) => Ok(alg.join(a as u32, b as u32) as Ix),
            Structure::Pointwise(inner) => {
                let (ta, tb) = (table_of(&self.dom, a)?, table_of(&self.dom, b)?);
                let t: Vec<Ix> = ta.iter().zip(&tb).map(|(&x, &y)| inner.join(x, y)).collect::<SemResult<_>>()?;
                tabulate(&self.dom, &t)
            }
            Structure::Family(comps) => {
                let rows = self.dom.rows().unwrap();
                let (ra, rb) = (&rows[a as usize], &rows[b as usize]);
                let row: Vec<Ix> =
                    comps.iter().zip(ra.iter().zip(rb.iter())).map(|(c, (&x, &y))| c.join(x, y)).collect::<SemResult<_>>()?;
                self.dom.row_index(&row).ok_or_else(|| SemError::NotParametric("join family is missing".into()))
            }
        }
    }

    fn arg_count(&self) -> SemResult<u64> {
        match &self.dom.shape {
            Shape::Fun { arg, .. } => arg.count(),
            _ => ill("pointwise structure on a non-function domain"),
        }
    }

    /// The operation tables over element indices.
    pub fn table(&self) -> SemResult<Alg> {
        self.table.get_or_init(|| self.compute_table()).clone()
    }

    fn compute_table(&self) -> SemResult<Alg> {
        if let Structure::Base(a) = &self.structure {
            return Ok(a.clone());
        }
        let n = self.dom.count()?;
        if n > 4096 {
            return oob(format!("algebra with {n} elements cannot be tabulated"));
        }
        let ops = match self.ops_kind() {
            OpsKind::Identity => AlgOps::Identity,
            OpsKind::Exception(k) => AlgOps::Exception {
                raise: (0..k).map(|e| self.raise(e).map(|v| v as u32)).collect::<SemResult<_>>()?,
            },
            OpsKind::Semilattice => {
                let mut join = Vec::with_capacity((n * n) as usize);
                for a in 0..n {
                    for b in 0..n {
                        join.push(self.join(a, b)? as u32);
                    }
                }
                AlgOps::Semilattice { join }
            }
        };
        Ok(Alg { carrier: n as u32, ops })
    }

    fn ops_kind(&self) -> OpsKind {
        match &self.structure {
            Structure::Base(a) => match &a.ops {
                AlgOps::Identity => OpsKind::Identity,
                AlgOps::Exception { raise } => OpsKind::Exception(raise.len()),
                AlgOps::Semilattice { .. } => OpsKind::Semilattice,
            },
            Structure::Pointwise(inner) => inner.ops_kind(),
            Structure::Family(comps) => comps.first().map_or(OpsKind::Identity, |c| c.ops_kind()),
        }
    }
}

enum OpsKind {
    Identity,
    Exception(usize),
    Semilattice,
}

/// Whether a table (indexed by argument elements) is a homomorphism.
pub fn is_hom(t: &[Ix], a: &Algebra, b: &Algebra) -> SemResult<bool> {
    match a.ops_kind() {
        OpsKind::Identity => Ok(true),
        OpsKind::Exception(k) => {
            for e in 0..k {
                if t[a.raise(e)? as usize] != b.raise(e)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        OpsKind::Semilattice => {
            let n = t.len() as u64;
            for x in 0..n {
                for y in x + 1..n {
                    if t[a.join(x, y)? as usize] != b.join(t[x as usize], t[y as usize])? {
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
    }
}

// ---------------------------------------------------------------------------
// Objects, environments, relations

#[derive(Clone, Debug)]
pub enum Obj {
    Set(Arc<Dom>),
    Alg(Arc<Algebra>),
}

impl Obj {
    pub fn id(&self) -> u64 {
        match self {
            Obj::Set(d) => d.id,
            Obj::Alg(a) => a.id,
        }
    }

    pub fn dom(&self) -> &Arc<Dom> {
        match self {
            Obj::Set(d) => d,
            Obj::Alg(a) => &a.dom,
        }
    }

    pub fn count(&self) -> SemResult<u64> {
        self.dom().count()
    }

    pub fn as_alg(&self) -> SemResult<&Arc<Algebra>> {
        match self {
            Obj::Alg(a) => Ok(a),
            Obj::Set(_) => ill("a set where an algebra is required"),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Env {
    binds: Vec<(TyVar, Obj)>,
}

impl Env {
    pub fn new() -> Self {
        Env::default()
    }

    pub fn extend(&self, v: TyVar, o: Obj) -> Env {
        let mut e = self.clone();
        e.binds.push((v, o));
        e
    }

    pub fn with(mut self, v: TyVar, o: Obj) -> Env {
        self.binds.push((v, o));
        self
    }

    pub fn get(&self, v: &TyVar) -> SemResult<&Obj> {
        self.binds
            .iter()
            .rev()
            .find(|(w, _)| w == v)
            .map(|(_, o)| o)
            .ok_or_else(|| SemError::IllFormed(format!("type variable {v} is not in the environment")))
    }
}

/// A relation between the element sets of two domains.
pub struct RelTable {
    pub id: u64,
    pairs: Vec<(Ix, Ix)>,
    set: HashSet<(Ix, Ix)>,
}

impl fmt::Debug for RelTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rel#{}{:?}", self.id, self.pairs)
    }
}

impl RelTable {
    pub fn new(pairs: impl IntoIterator<Item = (Ix, Ix)>) -> RelTable {
        let set: HashSet<(Ix, Ix)> = pairs.into_iter().collect();
        let mut pairs: Vec<(Ix, Ix)> = set.iter().copied().collect();
        pairs.sort_unstable();
        RelTable { id: next_id(), pairs, set }
    }

    pub fn contains(&self, a: Ix, b: Ix) -> bool {
        self.set.contains(&(a, b))
    }

    pub fn pairs(&self) -> &[(Ix, Ix)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn opposite(&self) -> RelTable {
        RelTable::new(self.pairs.iter().map(|&(a, b)| (b, a)))
    }

    pub fn same_pairs(&self, other: &RelTable) -> bool {
        self.pairs == other.pairs
    }
}

#[derive(Clone, Debug)]
pub struct RelBind {
    pub left: Obj,
    pub right: Obj,
    pub rel: Arc<RelTable>,
}

#[derive(Clone, Debug, Default)]
pub struct RelEnv {
    binds: Vec<(TyVar, RelBind)>,
}

impl RelEnv {
    pub fn new() -> Self {
        RelEnv::default()
    }

    pub fn extend(&self, v: TyVar, b: RelBind) -> RelEnv {
        let mut e = self.clone();
        e.binds.push((v, b));
        e
    }

    pub fn with(mut self, v: TyVar, b: RelBind) -> RelEnv {
        self.binds.push((v, b));
        self
    }

    pub fn get(&self, v: &TyVar) -> SemResult<&RelBind> {
        self.binds
            .iter()
            .rev()
            .find(|(w, _)| w == v)
            .map(|(_, b)| b)
            .ok_or_else(|| SemError::IllFormed(format!("type variable {v} is not in the relational environment")))
    }

    pub fn left(&self) -> Env {
        Env { binds: self.binds.iter().map(|(v, b)| (v.clone(), b.left.clone())).collect() }
    }

    pub fn right(&self) -> Env {
        Env { binds: self.binds.iter().map(|(v, b)| (v.clone(), b.right.clone())).collect() }
    }

    /// The opposite environment: sides swapped, relations transposed.
    pub fn opposite(&self) -> RelEnv {
        RelEnv {
            binds: self
                .binds
                .iter()
                .map(|(v, b)| {
                    (v.clone(), RelBind { left: b.right.clone(), right: b.left.clone(), rel: Arc::new(b.rel.opposite()) })
                })
                .collect(),
        }
    }
}

/// A compiled membership test for a relation.
pub enum RelPlan {
    Table(Arc<RelTable>),
    /// Related arguments go to related results.
    Fun { left: Arc<Dom>, right: Arc<Dom>, args: Arc<RelTable>, res: Arc<RelPlan> },
    /// Components related along every `(i, j, Q)`.
    Forall { left: Arc<Dom>, right: Arc<Dom>, checks: Vec<(usize, usize, Arc<RelPlan>)> },
}

impl RelPlan {
    pub fn holds(&self, a: Ix, b: Ix) -> SemResult<bool> {
        match self {
            RelPlan::Table(t) => Ok(t.contains(a, b)),
            RelPlan::Fun { left, right, args, res } => {
                for &(x, y) in args.pairs() {
                    if !res.holds(apply(left, a, x)?, apply(right, b, y)?)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            RelPlan::Forall { left, right, checks } => {
                let (r1, r2) = (&left.rows().unwrap()[a as usize], &right.rows().unwrap()[b as usize]);
                for (i, j, p) in checks {
                    if !p.holds(r1[*i], r2[*j])? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

/// Bijections between the elements of two objects, one per type variable.
#[derive(Clone, Debug)]
pub struct Iso {
    pub fwd: HashMap<Ix, Ix>,
    pub bwd: HashMap<Ix, Ix>,
}

impl Iso {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Ix, Ix)>) -> Iso {
        let fwd: HashMap<Ix, Ix> = pairs.into_iter().collect();
        let bwd = fwd.iter().map(|(&a, &b)| (b, a)).collect();
        Iso { fwd, bwd }
    }

    pub fn inverse(&self) -> Iso {
        Iso { fwd: self.bwd.clone(), bwd: self.fwd.clone() }
    }

    pub fn compose(&self, then: &Iso) -> Iso {
        Iso::from_pairs(self.fwd.iter().map(|(&a, b)| (a, then.fwd[b])))
    }
}

// ---------------------------------------------------------------------------
// Canonical cache keys

fn canon(t: &Type) -> Type {
    fn go(t: &Type, scope: &mut Vec<(TyVar, Name)>) -> Type {
        let look = |v: TyVar, scope: &Vec<(TyVar, Name)>| scope.iter().rev().find(|(w, _)| *w == v).map(|(_, n)| n.clone());
        match t {
            Type::VVar(x) => Type::VVar(look(TyVar { sort: Sort::Value, name: x.clone() }, scope).unwrap_or(x.clone())),
            Type::CVar(x) => {
                Type::CVar(look(TyVar { sort: Sort::Computation, name: x.clone() }, scope).unwrap_or(x.clone()))
            }
            Type::Arrow(a, b) => Type::arrow(go(a, scope), go(b, scope)),
            Type::Lolli(a, b) => Type::lolli(go(a, scope), go(b, scope)),
            Type::ForallV(x, b) | Type::ForallC(x, b) => {
                let sort = if matches!(t, Type::ForallV(..)) { Sort::Value } else { Sort::Computation };
                let n = name(&format!("%{}", scope.len()));
                scope.push((TyVar { sort, name: x.clone() }, n.clone()));
                let body = go(b, scope);
                scope.pop();
                match sort {
                    Sort::Value => Type::ForallV(n, Box::new(body)),
                    Sort::Computation => Type::ForallC(n, Box::new(body)),
                }
            }
        }
    }
    go(t, &mut Vec::new())
}

type Key = (Type, Vec<u64>);

// ---------------------------------------------------------------------------
// The model

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Enumeration {
    /// Naive below the threshold, propagation above.
    Auto,
    Naive,
    Propagate,
}

#[derive(Clone, Debug)]
pub struct Limits {
    /// Largest candidate product enumerated naively.
    pub naive_max: u64,
    /// Largest relation table computed eagerly for membership queries.
    pub rel_auto: u64,
    /// Largest relation table computed at all.
    pub rel_max: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { naive_max: 1_000_000, rel_auto: 1 << 12, rel_max: 1 << 24 }
    }
}

/// A finite model: a monad, representative sets and algebras, and caches.
pub struct Model {
    pub spec: MonadSpec,
    pub bound: u32,
    pub sets: Vec<Obj>,
    pub algs: Vec<Obj>,
    /// `(n, i)`: the free algebra on a set of size `n` is `algs[i]`.
    pub free: Vec<(u32, usize)>,
    pub sig: Signature,
    consts: BTreeMap<Name, String>,
    pub limits: Limits,
    pub enumeration: Enumeration,
    dom_cache: Mutex<HashMap<Key, Arc<Dom>>>,
    alg_cache: Mutex<HashMap<Key, Arc<Algebra>>>,
    rel_cache: Mutex<HashMap<Key, Arc<RelTable>>>,
    plan_cache: Mutex<HashMap<Key, Arc<RelPlan>>>,
    adm_cache: Mutex<HashMap<(u64, u64), Arc<Vec<Arc<RelTable>>>>>,
    diag_cache: Mutex<HashMap<u64, Arc<RelTable>>>,
    two: OnceLock<SemResult<(Ix, Ix)>>,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Model({} {:?}, bound {}, {} algebras)", self.spec.kind, self.spec.exceptions, self.bound, self.algs.len())
    }
}

impl Model {
    pub fn new(spec: MonadSpec, bound: u32) -> Model {
        Model::with_free_algebras(spec, bound, &[])
    }

    /// A model whose algebra stock also contains the free algebras on sets of the given sizes.
    pub fn with_free_algebras(spec: MonadSpec, bound: u32, free_on: &[u32]) -> Model {
        let mut algs = finmodel::enumerate_algebras(&spec, bound);
        finmodel::append_free_algebras(&spec, &mut algs, free_on);
        algs.sort_by(|a, b| (a.carrier, &a.ops).cmp(&(b.carrier, &b.ops)));
        let free = free_on
            .iter()
            .map(|&n| {
                let f = spec.free_algebra(n);
                (n, algs.iter().position(|a| *a == f).unwrap())
            })
            .collect();
        let sets = (0..=bound).map(|n| Obj::Set(Dom::atom(n as u64))).collect();
        let algs = algs.into_iter().map(|a| Obj::Alg(Algebra::base(a))).collect();
        let consts = register_effect_constants(&spec);
        Model {
            sig: signature_of(&consts),
            consts: consts.into_iter().map(|c| (name(&c.name), c.denotation_key)).collect(),
            spec,
            bound,
            sets,
            algs,
            free,
            limits: Limits::default(),
            enumeration: Enumeration::Auto,
            dom_cache: Mutex::default(),
            alg_cache: Mutex::default(),
            rel_cache: Mutex::default(),
            plan_cache: Mutex::default(),
            adm_cache: Mutex::default(),
            diag_cache: Mutex::default(),
            two: OnceLock::new(),
        }
    }

    /// With `include-free-algebras`, the free algebras on all sets up to the bound are added.
    pub fn from_config(cfg: &ModelConfig) -> Model {
        let free: Vec<u32> = if cfg.include_free_algebras { (0..=cfg.bound).collect() } else { Vec::new() };
        Model::with_free_algebras(cfg.spec(), cfg.bound, &free)
    }

    pub fn reps(&self, sort: Sort) -> &[Obj] {
        match sort {
            Sort::Value => &self.sets,
            Sort::Computation => &self.algs,
        }
    }

    pub fn set(&self, n: u32) -> SemResult<&Obj> {
        self.sets.get(n as usize).map_or_else(|| oob(format!("no set of size {n} at bound {}", self.bound)), Ok)
    }

    pub fn free_algebra(&self, n: u32) -> SemResult<&Obj> {
        match self.free.iter().find(|(m, _)| *m == n) {
            Some(&(_, i)) => Ok(&self.algs[i]),
            None => oob(format!("the free algebra on {n} is not in the model")),
        }
    }

    pub fn alg_label(&self, o: &Obj) -> String {
        let reps = match o {
            Obj::Set(_) => &self.sets,
            Obj::Alg(_) => &self.algs,
        };
        match reps.iter().position(|r| r.id() == o.id()) {
            Some(i) if matches!(o, Obj::Set(_)) => format!("S{i}"),
            Some(i) => format!("A{i}"),
            None => format!("#{}", o.id()),
        }
    }

    fn key(&self, ids: impl Fn(&TyVar) -> SemResult<Vec<u64>>, ty: &Type) -> SemResult<Key> {
        let mut out = Vec::new();
        for v in ty.ftv() {
            out.extend(ids(&v)?);
        }
        Ok((canon(ty), out))
    }

    fn env_key(&self, env: &Env, ty: &Type) -> SemResult<Key> {
        self.key(|v| Ok(vec![env.get(v)?.id()]), ty)
    }

    fn renv_key(&self, renv: &RelEnv, ty: &Type) -> SemResult<Key> {
        self.key(
            |v| {
                let b = renv.get(v)?;
                Ok(vec![b.left.id(), b.right.id(), b.rel.id])
            },
            ty,
        )
    }

    // -- types as sets ------------------------------------------------------

    /// The set interpreting a type.
    pub fn dom(&self, env: &Env, ty: &Type) -> SemResult<Arc<Dom>> {
        match ty {
            Type::VVar(x) => return Ok(env.get(&TyVar { sort: Sort::Value, name: x.clone() })?.dom().clone()),
            Type::CVar(x) => return Ok(env.get(&TyVar { sort: Sort::Computation, name: x.clone() })?.dom().clone()),
            _ => {}
        }
        let key = self.env_key(env, ty)?;
        if let Some(d) = self.dom_cache.lock().unwrap().get(&key) {
            return Ok(d.clone());
        }
        let d = Arc::new(match ty {
            Type::Arrow(a, b) => Dom::fun(self.dom(env, a)?, self.dom(env, b)?)?,
            Type::Lolli(a, b) => Dom::lolli(self.alg(env, a)?, self.alg(env, b)?)?,
            Type::ForallV(x, b) => self.forall_dom(env, Sort::Value, x, b)?,
            Type::ForallC(x, b) => self.forall_dom(env, Sort::Computation, x, b)?,
            Type::VVar(_) | Type::CVar(_) => unreachable!(),
        });
        Ok(self.dom_cache.lock().unwrap().entry(key).or_insert(d).clone())
    }

    /// The algebra interpreting a computation type; its carrier is `dom(env, ty)`.
    pub fn alg(&self, env: &Env, ty: &Type) -> SemResult<Arc<Algebra>> {
        if let Type::CVar(x) = ty {
            return Ok(env.get(&TyVar { sort: Sort::Computation, name: x.clone() })?.as_alg()?.clone());
        }
        let key = self.env_key(env, ty)?;
        if let Some(a) = self.alg_cache.lock().unwrap().get(&key) {
            return Ok(a.clone());
        }
        let structure = match ty {
            Type::Arrow(_, c) => Structure::Pointwise(self.alg(env, c)?),
            Type::ForallV(x, b) | Type::ForallC(x, b) => {
                let sort = if matches!(ty, Type::ForallV(..)) { Sort::Value } else { Sort::Computation };
                let v = TyVar { sort, name: x.clone() };
                Structure::Family(
                    self.reps(sort).iter().map(|r| self.alg(&env.extend(v.clone(), r.clone()), b)).collect::<SemResult<_>>()?,
                )
            }
            _ => return ill(format!("{ty} is not a computation type")),
        };
        let a = Arc::new(Algebra::new(self.dom(env, ty)?, structure));
        Ok(self.alg_cache.lock().unwrap().entry(key).or_insert(a).clone())
    }

    /// The object a type argument denotes.
    pub fn obj(&self, env: &Env, sort: Sort, ty: &Type) -> SemResult<Obj> {
        Ok(match sort {
            Sort::Value => Obj::Set(self.dom(env, ty)?),
            Sort::Computation => Obj::Alg(self.alg(env, ty)?),
        })
    }

    fn forall_dom(&self, env: &Env, sort: Sort, x: &Name, body: &Type) -> SemResult<Dom> {
        let v = TyVar { sort, name: x.clone() };
        let comps: Vec<Arc<Dom>> =
            self.reps(sort).iter().map(|r| self.dom(&env.extend(v.clone(), r.clone()), body)).collect::<SemResult<_>>()?;
        let rows = self.parametric_families(env, &v, body, &comps, self.enumeration)?;
        let index = rows.iter().enumerate().map(|(i, r)| (r.clone(), i as Ix)).collect();
        Ok(Dom::new(Shape::Poly { sort, comps, rows, index }))
    }

    // -- relations ------------------------------------------------------------

    /// The identity relation on an object.
    pub fn diag(&self, o: &Obj) -> SemResult<Arc<RelTable>> {
        if let Some(r) = self.diag_cache.lock().unwrap().get(&o.id()) {
            return Ok(r.clone());
        }
        let r = Arc::new(RelTable::new(o.dom().members()?.iter().map(|&x| (x, x))));
        Ok(self.diag_cache.lock().unwrap().entry(o.id()).or_insert(r).clone())
    }

    /// The diagonal relational environment over `env`, restricted to `vars`.
    pub fn diag_env(&self, env: &Env, vars: impl IntoIterator<Item = TyVar>) -> SemResult<RelEnv> {
        let mut r = RelEnv::new();
        for v in vars {
            let o = env.get(&v)?.clone();
            r = r.with(v, RelBind { left: o.clone(), right: o.clone(), rel: self.diag(&o)? });
        }
        Ok(r)
    }

    /// All admissible relations between two objects of the same sort.
    pub fn admissible(&self, a: &Obj, b: &Obj) -> SemResult<Arc<Vec<Arc<RelTable>>>> {
        let key = (a.id(), b.id());
        if let Some(r) = self.adm_cache.lock().unwrap().get(&key) {
            return Ok(r.clone());
        }
        let (ma, mb) = (a.dom().members()?, b.dom().members()?);
        let rels: Vec<Arc<RelTable>> = match (a, b) {
            (Obj::Set(_), Obj::Set(_)) => {
                let cells = ma.len() * mb.len();
                if cells > 20 {
                    return oob(format!("2^{cells} relations between sets"));
                }
                (0u64..1 << cells)
                    .map(|m| {
                        Arc::new(RelTable::new(
                            (0..cells).filter(|i| m & (1 << i) != 0).map(|i| (ma[i / mb.len()], mb[i % mb.len()])),
                        ))
                    })
                    .collect()
            }
            (Obj::Alg(x), Obj::Alg(y)) => {
                let (tx, ty) = (x.table()?, y.table()?);
                finmodel::admissible_relations(&tx, &ty)
                    .into_iter()
                    .map(|r| Arc::new(RelTable::new(r.pairs.iter().map(|&(p, q)| (p as Ix, q as Ix)))))
                    .collect()
            }
            _ => return ill("relations between a set and an algebra"),
        };
        let rels = Arc::new(rels);
        Ok(self.adm_cache.lock().unwrap().entry(key).or_insert(rels).clone())
    }

    /// Whether `(a, b)` is in the relation interpreting `ty`.
    pub fn related(&self, renv: &RelEnv, ty: &Type, a: Ix, b: Ix) -> SemResult<bool> {
        if matches!(ty, Type::VVar(_) | Type::CVar(_)) {
            return self.plan(renv, ty)?.holds(a, b);
        }
        // a single query does not pay for tabulating the whole relation
        let key = self.renv_key(renv, ty)?;
        if let Some(p) = self.plan_cache.lock().unwrap().get(&key).cloned() {
            return p.holds(a, b);
        }
        let structural = self.structural_plan(renv, ty, self.dom(&renv.left(), ty)?, self.dom(&renv.right(), ty)?)?;
        structural.holds(a, b)
    }

    /// A membership test for the relation interpreting `ty`: an explicit table
    /// when it is small, otherwise a structural check over sub-plans.
    pub fn plan(&self, renv: &RelEnv, ty: &Type) -> SemResult<Arc<RelPlan>> {
        match ty {
            Type::VVar(x) => {
                return Ok(Arc::new(RelPlan::Table(renv.get(&TyVar { sort: Sort::Value, name: x.clone() })?.rel.clone())))
            }
            Type::CVar(x) => {
                return Ok(Arc::new(RelPlan::Table(
                    renv.get(&TyVar { sort: Sort::Computation, name: x.clone() })?.rel.clone(),
                )))
            }
            _ => {}
        }
        let key = self.renv_key(renv, ty)?;
        if let Some(p) = self.plan_cache.lock().unwrap().get(&key) {
            return Ok(p.clone());
        }
        let d1 = self.dom(&renv.left(), ty)?;
        let d2 = self.dom(&renv.right(), ty)?;
        let size = |d: &Dom| if d.is_dense() { d.count() } else { d.members().map(|m| m.len() as u64) };
        let small = matches!((size(&d1), size(&d2)), (Ok(n1), Ok(n2)) if n1.saturating_mul(n2) <= self.limits.rel_auto);
        let structural = self.structural_plan(renv, ty, d1, d2)?;
        let p = if small { Arc::new(RelPlan::Table(self.table_from_plan(renv, ty, &structural)?)) } else { Arc::new(structural) };
        Ok(self.plan_cache.lock().unwrap().entry(key).or_insert(p).clone())
    }

    fn structural_plan(&self, renv: &RelEnv, ty: &Type, left: Arc<Dom>, right: Arc<Dom>) -> SemResult<RelPlan> {
        Ok(match ty {
            Type::Arrow(s, c) | Type::Lolli(s, c) => RelPlan::Fun { left, right, args: self.rel(renv, s)?, res: self.plan(renv, c)? },
            Type::ForallV(x, body) | Type::ForallC(x, body) => {
                let sort = if matches!(ty, Type::ForallV(..)) { Sort::Value } else { Sort::Computation };
                let v = TyVar { sort, name: x.clone() };
                let reps = self.reps(sort);
                let mut checks = Vec::new();
                for (i, ri) in reps.iter().enumerate() {
                    for (j, rj) in reps.iter().enumerate() {
                        for q in self.admissible(ri, rj)?.iter() {
                            let e = renv.extend(v.clone(), RelBind { left: ri.clone(), right: rj.clone(), rel: q.clone() });
                            checks.push((i, j, self.plan(&e, body)?));
                        }
                    }
                }
                RelPlan::Forall { left, right, checks }
            }
            Type::VVar(_) | Type::CVar(_) => unreachable!(),
        })
    }

    fn table_from_plan(&self, renv: &RelEnv, ty: &Type, plan: &RelPlan) -> SemResult<Arc<RelTable>> {
        let m1 = self.dom(&renv.left(), ty)?.members()?;
        let m2 = self.dom(&renv.right(), ty)?.members()?;
        if (m1.len() as u64).saturating_mul(m2.len() as u64) > self.limits.rel_max {
            return oob(format!("relation table of {} x {} pairs for {ty}", m1.len(), m2.len()));
        }
        let mut pairs = Vec::new();
        for &a in m1.iter() {
            for &b in m2.iter() {
                if plan.holds(a, b)? {
                    pairs.push((a, b));
                }
            }
        }
        Ok(Arc::new(RelTable::new(pairs)))
    }

    /// The relation interpreting a type, as an explicit table.
    pub fn rel(&self, renv: &RelEnv, ty: &Type) -> SemResult<Arc<RelTable>> {
        let p = self.plan(renv, ty)?;
        if let RelPlan::Table(t) = &*p {
            return Ok(t.clone());
        }
        let key = self.renv_key(renv, ty)?;
        if let Some(r) = self.rel_cache.lock().unwrap().get(&key) {
            return Ok(r.clone());
        }
        let r = self.table_from_plan(renv, ty, &p)?;
        Ok(self.rel_cache.lock().unwrap().entry(key).or_insert(r).clone())
    }

    // -- parametric families --------------------------------------------------

    fn relation_env(&self, env: &Env, v: &TyVar, body: &Type) -> SemResult<RelEnv> {
        let mut others = body.ftv();
        others.remove(v);
        self.diag_env(env, others)
    }

    /// The families `(x_R)_R` in the product of `comps` related by `body` along
    /// every admissible relation between every pair of representatives.
    pub fn parametric_families(
        &self,
        env: &Env,
        v: &TyVar,
        body: &Type,
        comps: &[Arc<Dom>],
        how: Enumeration,
    ) -> SemResult<Vec<Box<[Ix]>>> {
        let product = comps.iter().try_fold(1u64, |acc, d| d.count().map(|n| acc.saturating_mul(n)));
        let naive_ok = matches!(product, Ok(p) if p <= self.limits.naive_max);
        let mut rows = match how {
            Enumeration::Naive => self.families_naive(env, v, body, comps)?,
            Enumeration::Auto if naive_ok => self.families_naive(env, v, body, comps)?,
            _ => match arrow_chain(body, v) {
                Some(args) if self.entry_csp_fits(env, v, &args)? => self.families_by_entries(env, v, &args, comps)?,
                _ => self.families_by_components(env, v, body, comps)?,
            },
        };
        rows.sort();
        Ok(rows)
    }

    fn families_naive(&self, env: &Env, v: &TyVar, body: &Type, comps: &[Arc<Dom>]) -> SemResult<Vec<Box<[Ix]>>> {
        let product = comps.iter().try_fold(1u64, |acc, d| d.count().map(|n| acc.saturating_mul(n)))?;
        if product > self.limits.naive_max.max(1) * 64 {
            return oob(format!("{product} candidate families"));
        }
        let members: Vec<Arc<[Ix]>> = comps.iter().map(|d| d.members()).collect::<SemResult<_>>()?;
        let base = self.relation_env(env, v, body)?;
        let reps = self.reps(v.sort);
        let mut checks = Vec::new();
        for (i, ri) in reps.iter().enumerate() {
            for (j, rj) in reps.iter().enumerate() {
                for q in self.admissible(ri, rj)?.iter() {
                    let e = base.extend(v.clone(), RelBind { left: ri.clone(), right: rj.clone(), rel: q.clone() });
                    checks.push((i, j, self.plan(&e, body)?));
                }
            }
        }
        // diagonal blocks first: they fail fastest
        checks.sort_by_key(|(i, j, _)| (i != j, *i.max(j)));
        let mut out = Vec::new();
        if members.iter().any(|m| m.is_empty()) {
            return Ok(out);
        }
        let mut idx = vec![0usize; comps.len()];
        'outer: loop {
            let row: Vec<Ix> = idx.iter().zip(&members).map(|(&k, m)| m[k]).collect();
            let mut ok = true;
            for (i, j, p) in &checks {
                if !p.holds(row[*i], row[*j])? {
                    ok = false;
                    break;
                }
            }
            if ok {
                out.push(row.into_boxed_slice());
            }
            let mut p = 0;
            loop {
                if p == idx.len() {
                    break 'outer;
                }
                idx[p] += 1;
                if idx[p] < members[p].len() {
                    break;
                }
                idx[p] = 0;
                p += 1;
            }
        }
        Ok(out)
    }

    fn entry_csp_fits(&self, env: &Env, v: &TyVar, args: &[&Type]) -> SemResult<bool> {
        for r in self.reps(v.sort) {
            let e = env.extend(v.clone(), r.clone());
            let mut n: u64 = 1;
            for a in args {
                let d = self.dom(&e, a)?;
                let c = if d.is_dense() { d.count()? } else { d.members()?.len() as u64 };
                n = n.saturating_mul(c);
            }
            if n > 1 << 16 || r.count()? > 4096 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Propagation over table entries: for bodies `D1 -> ... -> Dk -> X` each
    /// component is a table into a representative, and the relational condition
    /// is a binary constraint between entries.
    fn families_by_entries(&self, env: &Env, v: &TyVar, args: &[&Type], comps: &[Arc<Dom>]) -> SemResult<Vec<Box<[Ix]>>> {
        let reps = self.reps(v.sort);
        let mut rels = Vec::new();
        for (i, ri) in reps.iter().enumerate() {
            for (j, rj) in reps.iter().enumerate().skip(i) {
                let full = ri.count()? * rj.count()?;
                // opposite relations give the same constraints, so i <= j suffices
                rels.extend(self.admissible(ri, rj)?.iter().filter(|q| q.len() as u64 != full).map(|q| (i, j, q.clone())));
            }
        }
        self.families_along(env, v, args, comps, &rels)
    }

    /// Families of tables `D1 -> ... -> Dk -> v`, one per representative, that
    /// take `rels`-related arguments to `rels`-related results. Relation
    /// `(i, j, Q)` is between representatives `i` and `j`.
    pub fn families_along(
        &self,
        env: &Env,
        v: &TyVar,
        args: &[&Type],
        comps: &[Arc<Dom>],
        rels: &[(usize, usize, Arc<RelTable>)],
    ) -> SemResult<Vec<Box<[Ix]>>> {
        let reps = self.reps(v.sort);
        let mut arg_members: Vec<Vec<Arc<[Ix]>>> = Vec::new();
        let mut offsets = Vec::new();
        let mut csp = Csp::default();
        for r in reps {
            let e = env.extend(v.clone(), r.clone());
            let ms: Vec<Arc<[Ix]>> = args.iter().map(|a| self.dom(&e, a)?.members()).collect::<SemResult<_>>()?;
            let n: usize = ms.iter().map(|m| m.len()).product();
            offsets.push(csp.vars());
            for _ in 0..n {
                csp.add_var(r.count()? as usize);
            }
            arg_members.push(ms);
        }
        let mut body_vars = args.iter().flat_map(|a| a.ftv()).collect::<BTreeSet<_>>();
        body_vars.remove(v);
        let base = self.diag_env(env, body_vars)?;
        for (i, j, q) in rels {
            let (i, j) = (*i, *j);
            let (ri, rj) = (&reps[i], &reps[j]);
            let (ni, nj) = (ri.count()? as usize, rj.count()? as usize);
            let e = base.extend(v.clone(), RelBind { left: ri.clone(), right: rj.clone(), rel: q.clone() });
            // related argument tuples, as position pairs
            let mut tuples: Vec<(usize, usize)> = vec![(0, 0)];
            for (k, a) in args.iter().enumerate() {
                let (mi, mj) = (&arg_members[i][k], &arg_members[j][k]);
                let pos = |m: &[Ix], x: Ix| m.binary_search(&x).unwrap();
                let ps: Vec<(usize, usize)> = self.rel(&e, a)?.pairs().iter().map(|&(x, y)| (pos(mi, x), pos(mj, y))).collect();
                let mut next = Vec::with_capacity(tuples.len() * ps.len());
                for &(t, s) in &tuples {
                    for &(p, q) in &ps {
                        next.push((t * mi.len() + p, s * mj.len() + q));
                    }
                }
                tuples = next;
            }
            let rows = rel_rows(q, ni, nj);
            for (t, s) in tuples {
                csp.constrain(offsets[i] + t, offsets[j] + s, &rows, nj);
            }
        }
        let sols = csp.solve();
        let mut out = Vec::with_capacity(sols.len());
        for sol in sols {
            let mut row = Vec::with_capacity(reps.len());
            for (i, d) in comps.iter().enumerate() {
                let end = offsets.get(i + 1).copied().unwrap_or(sol.len());
                let vals: Vec<Ix> = sol[offsets[i]..end].iter().map(|&x| x as Ix).collect();
                row.push(if args.is_empty() { vals[0] } else { encode_curried(d, &vals)? });
            }
            out.push(row.into_boxed_slice());
        }
        out.sort();
        Ok(out)
    }

    /// Propagation over whole components, with pairwise compatibility tables.
    fn families_by_components(&self, env: &Env, v: &TyVar, body: &Type, comps: &[Arc<Dom>]) -> SemResult<Vec<Box<[Ix]>>> {
        let reps = self.reps(v.sort);
        let members: Vec<Arc<[Ix]>> = comps.iter().map(|d| d.members()).collect::<SemResult<_>>()?;
        let mut csp = Csp::default();
        for m in &members {
            csp.add_var(m.len());
        }
        let base = self.relation_env(env, v, body)?;
        for (i, ri) in reps.iter().enumerate() {
            for (j, rj) in reps.iter().enumerate().skip(i) {
                for q in self.admissible(ri, rj)?.iter() {
                    let e = base.extend(v.clone(), RelBind { left: ri.clone(), right: rj.clone(), rel: q.clone() });
                    let t = self.rel(&e, body)?;
                    let (ni, nj) = (members[i].len(), members[j].len());
                    let pos = |m: &[Ix], x: Ix| m.binary_search(&x).unwrap();
                    let mut rows = vec![vec![0u64; words(nj)]; ni];
                    for &(a, b) in t.pairs() {
                        let (p, q) = (pos(&members[i], a), pos(&members[j], b));
                        rows[p][q / 64] |= 1 << (q % 64);
                    }
                    csp.constrain(i, j, &rows, nj);
                }
            }
        }
        Ok(csp
            .solve()
            .into_iter()
            .map(|sol| sol.iter().enumerate().map(|(i, &p)| members[i][p]).collect::<Vec<_>>().into_boxed_slice())
            .collect())
    }

    // -- transport ------------------------------------------------------------

    /// All isomorphisms from a representative onto `target` (at most `limit`),
    /// together with the representative's index.
    pub fn isos_to(&self, target: &Obj, limit: usize) -> SemResult<Vec<(usize, Iso)>> {
        let mut out = Vec::new();
        match target {
            Obj::Set(d) => {
                let m = d.members()?;
                if let Some(i) = self.sets.iter().position(|s| s.count().ok() == Some(m.len() as u64)) {
                    let rep = self.sets[i].dom().members()?;
                    for perm in permutations(m.len(), limit) {
                        out.push((i, Iso::from_pairs(perm.iter().enumerate().map(|(k, &p)| (rep[k], m[p])))));
                    }
                }
            }
            Obj::Alg(a) => {
                let t = a.table()?;
                for (i, r) in self.algs.iter().enumerate() {
                    let rt = r.as_alg()?.table()?;
                    for f in algebra_isos(&rt, &t, limit - out.len().min(limit)) {
                        out.push((i, Iso::from_pairs(f.iter().enumerate().map(|(k, &p)| (k as Ix, p as Ix)))));
                    }
                    if out.len() >= limit {
                        break;
                    }
                }
            }
        }
        out.truncate(limit);
        Ok(out)
    }

    /// Carry an element of `ty` under `env1` to `ty` under `env2` along the
    /// bijections `isos` (variables not listed are shared by both sides).
    pub fn transport(&self, ty: &Type, env1: &Env, env2: &Env, isos: &[(TyVar, Iso)], x: Ix) -> SemResult<Ix> {
        if !isos.iter().any(|(v, _)| ty.has_free(v)) {
            return Ok(x);
        }
        match ty {
            Type::VVar(n) | Type::CVar(n) => {
                let sort = if matches!(ty, Type::VVar(_)) { Sort::Value } else { Sort::Computation };
                let v = TyVar { sort, name: n.clone() };
                let iso = &isos.iter().rev().find(|(w, _)| *w == v).unwrap().1;
                iso.fwd.get(&x).copied().ok_or_else(|| SemError::IllFormed(format!("{x} outside the iso for {v}")))
            }
            Type::Arrow(s, c) | Type::Lolli(s, c) => {
                let d1 = self.dom(env1, ty)?;
                let d2 = self.dom(env2, ty)?;
                let back: Vec<(TyVar, Iso)> = isos.iter().map(|(v, i)| (v.clone(), i.inverse())).collect();
                let mut table = Vec::new();
                for &y in self.dom(env2, s)?.members()?.iter() {
                    let x1 = self.transport(s, env2, env1, &back, y)?;
                    table.push(self.transport(c, env1, env2, isos, apply(&d1, x, x1)?)?);
                }
                tabulate(&d2, &table)
            }
            Type::ForallV(n, b) | Type::ForallC(n, b) => {
                let sort = if matches!(ty, Type::ForallV(..)) { Sort::Value } else { Sort::Computation };
                let v = TyVar { sort, name: n.clone() };
                let d1 = self.dom(env1, ty)?;
                let d2 = self.dom(env2, ty)?;
                let inner: Vec<(TyVar, Iso)> = isos.iter().filter(|(w, _)| *w != v).cloned().collect();
                let row1 = &d1.rows().unwrap()[x as usize];
                let mut row = Vec::with_capacity(row1.len());
                for (k, r) in self.reps(sort).iter().enumerate() {
                    let e1 = env1.extend(v.clone(), r.clone());
                    let e2 = env2.extend(v.clone(), r.clone());
                    row.push(self.transport(b, &e1, &e2, &inner, row1[k])?);
                }
                d2.row_index(&row).ok_or_else(|| SemError::NotParametric(format!("transported family of {ty} is missing")))
            }
        }
    }

    /// The instance at `target` of a polymorphic element of `forall v. body`.
    pub fn project(&self, env: &Env, v: &TyVar, body: &Type, p: Ix, target: &Obj) -> SemResult<Ix> {
        let all = Type::forall(v, body.clone());
        let d = self.dom(env, &all)?;
        let row = &d.rows().unwrap()[p as usize];
        if let Some(i) = self.reps(v.sort).iter().position(|r| r.id() == target.id()) {
            return Ok(row[i]);
        }
        let Some((i, iso)) = self.isos_to(target, 1)?.into_iter().next() else {
            return oob(format!("no representative of {} objects is isomorphic to the instance of {all}", v.sort_word()));
        };
        let rep = self.reps(v.sort)[i].clone();
        self.transport(body, &env.extend(v.clone(), rep), &env.extend(v.clone(), target.clone()), &[(v.clone(), iso)], row[i])
    }

    // -- terms ------------------------------------------------------------------

    /// The denotation of a term together with its type. `tenv` binds the term
    /// variables (stoup included) to elements of their types.
    pub fn eval(&self, env: &Env, tenv: &[(Name, Type, Ix)], t: &Term) -> SemResult<(Ix, Type)> {
        match t {
            Term::Var(x) => tenv
                .iter()
                .rev()
                .find(|(y, _, _)| y == x)
                .map(|(_, ty, v)| (*v, ty.clone()))
                .ok_or_else(|| SemError::IllFormed(format!("unbound variable {x}"))),
            Term::Const(c) => {
                let ty = self.const_type(c)?;
                let (sort, x, body) = ty.as_forall().ok_or_else(|| SemError::IllFormed(format!("constant {c} is not polymorphic")))?;
                let v = TyVar { sort, name: x.clone() };
                let row: Vec<Ix> = self.reps(sort).iter().map(|r| self.const_at(c, &v, body, r)).collect::<SemResult<_>>()?;
                let d = self.dom(&Env::new(), &ty)?;
                let i = d.row_index(&row).ok_or_else(|| SemError::NotParametric(format!("constant {c}")))?;
                Ok((i, ty))
            }
            Term::Lam(x, b, body) | Term::LinLam(x, b, body) => {
                let db = self.dom(env, b)?;
                let mut vals = Vec::new();
                let mut res_ty = None;
                let mut te = tenv.to_vec();
                for &m in db.members()?.iter() {
                    te.push((x.clone(), b.clone(), m));
                    let (r, ty) = self.eval(env, &te, body)?;
                    te.pop();
                    vals.push(r);
                    res_ty.get_or_insert(ty);
                }
                let c = match res_ty {
                    Some(c) => c,
                    None => {
                        let mut te: Vec<(Name, Type)> = tenv.iter().map(|(n, ty, _)| (n.clone(), ty.clone())).collect();
                        te.push((x.clone(), b.clone()));
                        infer(&self.sig, &te, body)?
                    }
                };
                let ty = if matches!(t, Term::Lam(..)) { Type::arrow(b.clone(), c) } else { Type::lolli(b.clone(), c) };
                let d = self.dom(env, &ty)?;
                let f = tabulate(&d, &vals)?;
                if matches!(t, Term::LinLam(..)) && !d.contains(f)? {
                    return Err(SemError::NotHomomorphism(format!("denotation of {t}")));
                }
                Ok((f, ty))
            }
            Term::App(s, u) => {
                let (f, fty) = self.eval(env, tenv, s)?;
                let (a, _) = self.eval(env, tenv, u)?;
                let res = match &fty {
                    Type::Arrow(_, c) | Type::Lolli(_, c) => (**c).clone(),
                    _ => return ill(format!("applying a term of type {fty}")),
                };
                Ok((apply(&*self.dom(env, &fty)?, f, a)?, res))
            }
            Term::TyLamV(x, body) | Term::TyLamC(x, body) => {
                let sort = if matches!(t, Term::TyLamV(..)) { Sort::Value } else { Sort::Computation };
                let v = TyVar { sort, name: x.clone() };
                let mut row = Vec::new();
                let mut bty = None;
                for r in self.reps(sort) {
                    let (val, ty) = self.eval(&env.extend(v.clone(), r.clone()), tenv, body)?;
                    row.push(val);
                    bty.get_or_insert(ty);
                }
                let ty = Type::forall(&v, bty.unwrap());
                let d = self.dom(env, &ty)?;
                let i = d.row_index(&row).ok_or_else(|| SemError::NotParametric(format!("denotation of {t}")))?;
                Ok((i, ty))
            }
            Term::TyAppV(f, a) | Term::TyAppC(f, a) => {
                let sort = if matches!(t, Term::TyAppV(..)) { Sort::Value } else { Sort::Computation };
                let target = self.obj(env, sort, a)?;
                match &**f {
                    Term::TyLamV(x, body) | Term::TyLamC(x, body) if matches!(**f, Term::TyLamV(..)) == (sort == Sort::Value) => {
                        let v = TyVar { sort, name: x.clone() };
                        let (val, ty) = self.eval(&env.extend(v.clone(), target), tenv, body)?;
                        Ok((val, subst_type(&ty, &v, a).map_err(|e| SemError::IllFormed(e.to_string()))?))
                    }
                    Term::Const(c) => {
                        let ty = self.const_type(c)?;
                        let (_, x, body) = ty.as_forall().unwrap();
                        let v = TyVar { sort, name: x.clone() };
                        let val = self.const_at(c, &v, body, &target)?;
                        Ok((val, subst_type(body, &v, a).map_err(|e| SemError::IllFormed(e.to_string()))?))
                    }
                    _ => {
                        let (p, fty) = self.eval(env, tenv, f)?;
                        let Some((s2, x, body)) = fty.as_forall() else { return ill(format!("instantiating {fty}")) };
                        if s2 != sort {
                            return ill(format!("instantiating {fty} with a type of the wrong sort"));
                        }
                        let v = TyVar { sort, name: x.clone() };
                        let val = self.project(env, &v, body, p, &target)?;
                        Ok((val, subst_type(body, &v, a).map_err(|e| SemError::IllFormed(e.to_string()))?))
                    }
                }
            }
        }
    }

    /// Evaluate a closed term.
    pub fn eval_closed(&self, t: &Term) -> SemResult<(Ix, Type)> {
        self.eval(&Env::new(), &[], t)
    }

    fn const_type(&self, c: &Name) -> SemResult<Type> {
        self.sig.get(c).cloned().ok_or_else(|| SemError::IllFormed(format!("constant {c} has no denotation in this model")))
    }

    /// A constant instantiated at an object, as an element of `body[target/v]`.
    fn const_at(&self, c: &Name, v: &TyVar, body: &Type, target: &Obj) -> SemResult<Ix> {
        let key = self.consts.get(c).ok_or_else(|| SemError::IllFormed(format!("unknown constant {c}")))?;
        let env = Env::new().extend(v.clone(), target.clone());
        if key == "semilattice.join" {
            let a = target.as_alg()?;
            let d = self.dom(&env, body)?;
            let n = a.dom.count()?;
            let mut vals = Vec::with_capacity((n * n) as usize);
            for x in 0..n {
                for y in 0..n {
                    vals.push(a.join(x, y)?);
                }
            }
            return encode_curried(&d, &vals);
        }
        if let Some(e) = key.strip_prefix("exception.raise:") {
            let e = self.exception(e)?;
            return target.as_alg()?.raise(e);
        }
        if let Some(e) = key.strip_prefix("exception.handle:") {
            let e = self.exception(e)?;
            let Type::Lolli(arg_ty, res_ty) = body else { return ill("handler type") };
            let arg = self.dom(&env, arg_ty)?;
            let bang = self.alg(&env, res_ty)?;
            let (inl, inr) = self.two()?;
            let raised = bang.raise(e)?;
            let mut table = Vec::new();
            for &k in arg.members()?.iter() {
                let p = apply(&arg, k, inl)?;
                table.push(if p == raised { apply(&arg, k, inr)? } else { p });
            }
            return tabulate(&*self.dom(&env, body)?, &table);
        }
        ill(format!("no denotation for key {key}"))
    }

    fn exception(&self, e: &str) -> SemResult<usize> {
        self.spec.exception_index(e).ok_or_else(|| SemError::IllFormed(format!("unknown exception {e}")))
    }

    /// The two elements of `2 = 1 + 1`, left injection first.
    pub fn two(&self) -> SemResult<(Ix, Ix)> {
        self.two
            .get_or_init(|| {
                let two = numeral(2);
                let Type::ForallV(x, _) = &two else { unreachable!() };
                let xt = Type::VVar(x.clone());
                let unit_val = Term::ty_lam_v("Y", Term::lam("y", Type::vvar("Y"), Term::var("y")));
                let k = Type::arrow(unit(), xt.clone());
                let pick = |left: bool| {
                    Term::TyLamV(
                        x.clone(),
                        Box::new(Term::lam(
                            "f",
                            k.clone(),
                            Term::lam("g", k.clone(), Term::app(Term::var(if left { "f" } else { "g" }), unit_val.clone())),
                        )),
                    )
                };
                Ok((self.eval_closed(&pick(true))?.0, self.eval_closed(&pick(false))?.0))
            })
            .clone()
    }

    // -- output ---------------------------------------------------------------

    /// A structured rendering of an element.
    pub fn sem_value(&self, d: &Dom, x: Ix) -> SemResult<SemValue> {
        Ok(match &d.shape {
            Shape::Atom(_) => SemValue::Elem(x),
            Shape::Fun { arg, res, .. } => {
                let mut out = Vec::new();
                for &a in arg.members()?.iter() {
                    out.push(self.sem_value(res, apply(d, x, a)?)?);
                }
                SemValue::Fun(out)
            }
            Shape::Lolli { res, .. } => {
                SemValue::Fun(table_of(d, x)?.into_iter().map(|v| self.sem_value(&res.dom, v)).collect::<SemResult<_>>()?)
            }
            Shape::Poly { sort, comps, rows, .. } => {
                let mut m = BTreeMap::new();
                for (k, (c, &v)) in comps.iter().zip(rows[x as usize].iter()).enumerate() {
                    m.insert(self.alg_label(&self.reps(*sort)[k]), self.sem_value(c, v)?);
                }
                SemValue::Poly(m)
            }
        })
    }

    /// JSON description of the representative objects.
    pub fn objects_json(&self) -> serde_json::Value {
        let sets: Vec<_> = self.sets.iter().map(|s| serde_json::json!({"label": self.alg_label(s), "size": s.count().unwrap_or(0)})).collect();
        let algs: Vec<_> = self
            .algs
            .iter()
            .map(|a| {
                let t = a.as_alg().unwrap().table().unwrap();
                serde_json::json!({"label": self.alg_label(a), "size": t.carrier, "ops": t.ops})
            })
            .collect();
        serde_json::json!({"sets": sets, "algebras": algs})
    }
}

/// A denotation as nested tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum SemValue {
    Elem(Ix),
    Fun(Vec<SemValue>),
    Poly(BTreeMap<String, SemValue>),
}

impl fmt::Display for SemValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemValue::Elem(x) => write!(f, "{x}"),
            SemValue::Fun(t) => {
                write!(f, "[")?;
                for (i, v) in t.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
            SemValue::Poly(m) => {
                write!(f, "{{")?;
                for (i, (k, v)) in m.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{k}: {v}")?;
                }
                write!(f, "}}")
            }
        }
    }
}

impl TyVar {
    fn sort_word(&self) -> &'static str {
        match self.sort {
            Sort::Value => "set",
            Sort::Computation => "algebra",
        }
    }
}

impl Type {
    fn forall(v: &TyVar, body: Type) -> Type {
        match v.sort {
            Sort::Value => Type::ForallV(v.name.clone(), Box::new(body)),
            Sort::Computation => Type::ForallC(v.name.clone(), Box::new(body)),
        }
    }

    fn as_forall(&self) -> Option<(Sort, &Name, &Type)> {
        match self {
            Type::ForallV(x, b) => Some((Sort::Value, x, b)),
            Type::ForallC(x, b) => Some((Sort::Computation, x, b)),
            _ => None,
        }
    }
}

/// The types of a term's parts, ignoring the stoup; used only for
/// abstractions over empty domains.
fn infer(sig: &Signature, gamma: &[(Name, Type)], t: &Term) -> SemResult<Type> {
    let mut g = gamma.to_vec();
    Ok(match t {
        Term::Var(x) => gamma.iter().rev().find(|(y, _)| y == x).map(|(_, ty)| ty.clone()).ok_or_else(|| SemError::IllFormed(format!("unbound {x}")))?,
        Term::Const(c) => sig.get(c).cloned().ok_or_else(|| SemError::IllFormed(format!("unknown constant {c}")))?,
        Term::Lam(x, b, body) | Term::LinLam(x, b, body) => {
            g.push((x.clone(), b.clone()));
            let c = infer(sig, &g, body)?;
            if matches!(t, Term::Lam(..)) {
                Type::arrow(b.clone(), c)
            } else {
                Type::lolli(b.clone(), c)
            }
        }
        Term::App(s, _) => match infer(sig, gamma, s)? {
            Type::Arrow(_, c) | Type::Lolli(_, c) => *c,
            other => return ill(format!("applying {other}")),
        },
        Term::TyLamV(x, body) => Type::ForallV(x.clone(), Box::new(infer(sig, gamma, body)?)),
        Term::TyLamC(x, body) => Type::ForallC(x.clone(), Box::new(infer(sig, gamma, body)?)),
        Term::TyAppV(f, a) | Term::TyAppC(f, a) => {
            let fty = infer(sig, gamma, f)?;
            let Some((sort, x, body)) = fty.as_forall() else { return ill(format!("instantiating {fty}")) };
            subst_type(body, &TyVar { sort, name: x.clone() }, a).map_err(|e| SemError::IllFormed(e.to_string()))?
        }
    })
}

/// `D1 -> ... -> Dk -> v` as `[D1, ..., Dk]`.
pub fn arrow_chain<'a>(body: &'a Type, v: &TyVar) -> Option<Vec<&'a Type>> {
    let mut args = Vec::new();
    let mut cur = body;
    loop {
        match cur {
            Type::Arrow(a, b) => {
                args.push(&**a);
                cur = b;
            }
            Type::VVar(x) if v.sort == Sort::Value && *x == v.name => return Some(args),
            Type::CVar(x) if v.sort == Sort::Computation && *x == v.name => return Some(args),
            _ => return None,
        }
    }
}

fn permutations(n: usize, limit: usize) -> Vec<Vec<usize>> {
    fn go(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                go(cur, used, out, limit);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out, limit);
    out
}

/// Isomorphisms `a -> b` between operation tables.
pub fn algebra_isos(a: &Alg, b: &Alg, limit: usize) -> Vec<Vec<u32>> {
    if a.carrier != b.carrier || std::mem::discriminant(&a.ops) != std::mem::discriminant(&b.ops) {
        return Vec::new();
    }
    permutations(a.carrier as usize, usize::MAX)
        .into_iter()
        .map(|p| p.into_iter().map(|x| x as u32).collect::<Vec<_>>())
        .filter(|f| finmodel::is_homomorphism(f, a, b))
        .take(limit)
        .collect()
}

// ---------------------------------------------------------------------------
// Binary constraint satisfaction over bitset domains

fn words(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

fn rel_rows(q: &RelTable, ni: usize, nj: usize) -> Vec<Vec<u64>> {
    let mut rows = vec![vec![0u64; words(nj)]; ni];
    for &(a, b) in q.pairs() {
        rows[a as usize][b as usize / 64] |= 1 << (b % 64);
    }
    rows
}

fn has(bits: &[u64], i: usize) -> bool {
    bits[i / 64] & (1 << (i % 64)) != 0
}

#[derive(Default)]
struct Csp {
    sizes: Vec<usize>,
    doms: Vec<Vec<u64>>,
    /// For each constraint `(a, b)`: allowed `b` values per value of `a`.
    cons: HashMap<(usize, usize), Vec<Vec<u64>>>,
}

impl Csp {
    fn vars(&self) -> usize {
        self.sizes.len()
    }

    fn add_var(&mut self, size: usize) {
        let mut d = vec![0u64; words(size)];
        for i in 0..size {
            d[i / 64] |= 1 << (i % 64);
        }
        self.sizes.push(size);
        self.doms.push(d);
    }

    /// Require `(value of a, value of b)` to lie in `rows`.
    fn constrain(&mut self, a: usize, b: usize, rows: &[Vec<u64>], nb: usize) {
        if a == b {
            for v in 0..self.sizes[a] {
                if !has(&rows[v], v) {
                    self.doms[a][v / 64] &= !(1 << (v % 64));
                }
            }
            return;
        }
        let (na, nbv) = (self.sizes[a], self.sizes[b]);
        debug_assert_eq!(nb, nbv);
        let full = |n: usize, m: usize| {
            let mut d = vec![0u64; words(m)];
            for i in 0..m {
                d[i / 64] |= 1 << (i % 64);
            }
            vec![d; n]
        };
        let fwd = self.cons.entry((a, b)).or_insert_with(|| full(na, nbv));
        for (r, row) in fwd.iter_mut().zip(rows) {
            for (w, x) in r.iter_mut().zip(row) {
                *w &= x;
            }
        }
        let bwd = self.cons.entry((b, a)).or_insert_with(|| full(nbv, na));
        for (vb, r) in bwd.iter_mut().enumerate() {
            for va in 0..na {
                if !has(&rows[va], vb) {
                    r[va / 64] &= !(1 << (va % 64));
                }
            }
        }
    }

    fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vars()];
        for &(a, b) in self.cons.keys() {
            out[a].push(b);
        }
        for n in &mut out {
            n.sort_unstable();
        }
        out
    }

    /// Arc consistency from the given queue; false on a wipe-out.
    fn propagate(&self, doms: &mut [Vec<u64>], nb: &[Vec<usize>], mut queue: Vec<usize>) -> bool {
        let mut queued = vec![false; doms.len()];
        for &q in &queue {
            queued[q] = true;
        }
        while let Some(b) = queue.pop() {
            queued[b] = false;
            for &a in &nb[b] {
                // revise a against b
                let rows = &self.cons[&(a, b)];
                let mut changed = false;
                for va in 0..self.sizes[a] {
                    if has(&doms[a], va) && !rows[va].iter().zip(&doms[b]).any(|(x, y)| x & y != 0) {
                        doms[a][va / 64] &= !(1 << (va % 64));
                        changed = true;
                    }
                }
                if changed {
                    if doms[a].iter().all(|&w| w == 0) {
                        return false;
                    }
                    if !queued[a] {
                        queued[a] = true;
                        queue.push(a);
                    }
                }
            }
        }
        true
    }

    /// All solutions, in lexicographic order of the variables' values.
    fn solve(&self) -> Vec<Vec<usize>> {
        let nb = self.neighbours();
        let mut doms = self.doms.clone();
        let mut out = Vec::new();
        if doms.iter().any(|d| d.iter().all(|&w| w == 0)) && !doms.is_empty() {
            return out;
        }
        if !self.propagate(&mut doms, &nb, (0..self.vars()).collect()) {
            return out;
        }
        self.search(0, doms, &nb, &mut out);
        out
    }

    fn search(&self, i: usize, doms: Vec<Vec<u64>>, nb: &[Vec<usize>], out: &mut Vec<Vec<usize>>) {
        if i == self.vars() {
            out.push(doms.iter().map(|d| first_bit(d).unwrap()).collect());
            return;
        }
        for v in 0..self.sizes[i] {
            if !has(&doms[i], v) {
                continue;
            }
            let mut d2 = doms.clone();
            d2[i] = vec![0u64; words(self.sizes[i])];
            d2[i][v / 64] |= 1 << (v % 64);
            if self.propagate(&mut d2, nb, vec![i]) {
                self.search(i + 1, d2, nb, out);
            }
        }
    }
}

fn first_bit(d: &[u64]) -> Option<usize> {
    d.iter().enumerate().find(|(_, &w)| w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encodings::bang;

    fn exc1() -> MonadSpec {
        MonadSpec::exception(&["e"])
    }

    fn ty(s: &str) -> Type {
        crate::encodings::elaborate_type(&crate::surface::parse_type(s).unwrap()).unwrap()
    }

    #[test]
    fn function_spaces() {
        let m = Model::new(exc1(), 2);
        let env = Env::new().with(TyVar::v("X"), m.sets[2].clone());
        let d = m.dom(&env, &ty("X -> X")).unwrap();
        assert_eq!(d.count().unwrap(), 4);
        let f = tabulate(&d, &[1, 0]).unwrap();
        assert_eq!(apply(&d, f, 0).unwrap(), 1);
        assert_eq!(table_of(&d, f).unwrap(), vec![1, 0]);
    }

    #[test]
    fn small_polymorphic_counts() {
        let m = Model::with_free_algebras(exc1(), 2, &[0, 1, 2]);
        let count = |s: &str| m.dom(&Env::new(), &ty(s)).unwrap().count().unwrap();
        assert_eq!(count("forall ^X. ^X"), 1);
        assert_eq!(count("forall ^X. ^X -> ^X"), 2);
        assert_eq!(count("forall ^X. ^X -> ^X -> ^X"), 3);
        assert_eq!(count("forall X. X -> X"), 1);
        assert_eq!(count("forall X. X -> X -> X"), 2);
        assert_eq!(count("forall X. X"), 0);
    }

    #[test]
    fn naive_and_propagation_agree() {
        for spec in [exc1(), MonadSpec::powerset()] {
            for s in ["forall ^X. ^X -> ^X", "forall ^X. ^X -> ^X -> ^X", "forall X. (X -> X) -> X -> X", "forall ^X. ^X"] {
                let t = ty(s);
                let (sort, x, body) = t.as_forall().unwrap();
                let v = TyVar { sort, name: x.clone() };
                let m = Model::new(spec.clone(), 2);
                let comps: Vec<Arc<Dom>> =
                    m.reps(sort).iter().map(|r| m.dom(&Env::new().with(v.clone(), r.clone()), body).unwrap()).collect();
                let a = m.parametric_families(&Env::new(), &v, body, &comps, Enumeration::Naive).unwrap();
                let b = m.parametric_families(&Env::new(), &v, body, &comps, Enumeration::Propagate).unwrap();
                assert_eq!(a, b, "{s} in {spec:?}");
            }
        }
    }

    #[test]
    fn component_search_agrees() {
        let m = Model::new(exc1(), 2);
        let t = ty("forall ^X. (^X -> ^X) -> ^X -> ^X");
        let (sort, x, body) = t.as_forall().unwrap();
        let v = TyVar { sort, name: x.clone() };
        let comps: Vec<Arc<Dom>> =
            m.reps(sort).iter().map(|r| m.dom(&Env::new().with(v.clone(), r.clone()), body).unwrap()).collect();
        let a = m.families_naive(&Env::new(), &v, body, &comps).unwrap();
        let mut b = m.families_by_components(&Env::new(), &v, body, &comps).unwrap();
        let mut c = m.families_by_entries(&Env::new(), &v, &arrow_chain(body, &v).unwrap(), &comps).unwrap();
        b.sort();
        c.sort();
        let mut a = a;
        a.sort();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn bang_has_size_of_free_algebra() {
        let m = Model::with_free_algebras(exc1(), 2, &[0, 1, 2]);
        for n in 0..=2u32 {
            let env = Env::new().with(TyVar::v("A"), m.sets[n as usize].clone());
            assert_eq!(m.dom(&env, &bang(&Type::vvar("A"))).unwrap().count().unwrap(), n as u64 + 1);
        }
    }

    #[test]
    fn identity_extension_on_arrows() {
        let m = Model::new(exc1(), 2);
        for t in ["X -> X", "(X -> X) -> X", "^A -> ^A", "^A -o ^A", "forall ^B. ^B -> ^B"] {
            for s in &m.sets {
                for a in &m.algs {
                    let env = Env::new().with(TyVar::v("X"), s.clone()).with(TyVar::c("A"), a.clone());
                    let tt = ty(t);
                    let r = m.rel(&m.diag_env(&env, tt.ftv()).unwrap(), &tt).unwrap();
                    let d = m.dom(&env, &tt).unwrap();
                    let diag: Vec<(Ix, Ix)> = d.members().unwrap().iter().map(|&x| (x, x)).collect();
                    assert_eq!(r.pairs(), &diag[..], "{t}");
                }
            }
        }
    }

    #[test]
    fn evaluation_of_identity_and_bang() {
        let m = Model::with_free_algebras(exc1(), 2, &[1]);
        let id = Term::ty_lam_v("X", Term::lam("x", Type::vvar("X"), Term::var("x")));
        let (v, t) = m.eval_closed(&id).unwrap();
        assert_eq!(t, ty("forall X. X -> X"));
        assert_eq!(v, 0);
        let raise = Term::ty_app_c(Term::constant("raise[e]"), Type::cvar("A"));
        let env = Env::new().with(TyVar::c("A"), m.algs[1].clone());
        let (r, _) = m.eval(&env, &[], &raise).unwrap();
        assert_eq!(r, m.algs[1].as_alg().unwrap().raise(0).unwrap());
    }

    #[test]
    fn transport_is_independent_of_the_iso() {
        // an algebra isomorphic to, but distinct from, a representative
        let m = Model::new(MonadSpec::powerset(), 2);
        let chain = Alg { carrier: 2, ops: AlgOps::Semilattice { join: vec![0, 1, 1, 1] } };
        let target = Obj::Alg(Algebra::base(chain.clone()));
        let isos = m.isos_to(&target, 4).unwrap();
        assert_eq!(isos.len(), 2);
        let t = ty("forall ^X. ^X -> ^X -> ^X");
        let (_, x, body) = t.as_forall().unwrap();
        let v = TyVar::c(x);
        let d = m.dom(&Env::new(), &t).unwrap();
        for p in 0..d.count().unwrap() {
            let row = &d.rows().unwrap()[p as usize];
            let results: Vec<Ix> = isos
                .iter()
                .map(|(i, iso)| {
                    let rep = m.algs[*i].clone();
                    m.transport(body, &Env::new().with(v.clone(), rep), &Env::new().with(v.clone(), target.clone()), &[(v.clone(), iso.clone())], row[*i])
                        .unwrap()
                })
                .collect();
            assert!(results.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn csp_finds_all_solutions() {
        let mut csp = Csp::default();
        csp.add_var(3);
        csp.add_var(3);
        // a < b
        let rows: Vec<Vec<u64>> = (0..3).map(|a| vec![(0..3).filter(|&b| b > a).fold(0u64, |m, b| m | 1 << b)]).collect();
        csp.constrain(0, 1, &rows, 3);
        assert_eq!(csp.solve(), vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
    }
}

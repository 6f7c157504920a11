//! Finite sets, the three configured finite monads, their Eilenberg-Moore
//! algebras (as operation tables), homomorphisms and relations.
//!
//! Elements of a carrier of size `n` are `0..n`. For the nonempty-powerset
//! monad an element `k` of `T A` encodes the subset with bitmask `k + 1`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonadKind {
    Identity,
    Exception,
    Powerset,
}

impl fmt::Display for MonadKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MonadKind::Identity => "identity",
            MonadKind::Exception => "exception",
            MonadKind::Powerset => "powerset",
        })
    }
}

/// A monad together with its exception names (only used by `Exception`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonadSpec {
    pub kind: MonadKind,
    pub exceptions: Vec<String>,
}

/// Model configuration as read from JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub monad: MonadKind,
    #[serde(rename = "E", default)]
    pub exceptions: Vec<String>,
    pub bound: u32,
    #[serde(rename = "include-free-algebras", default)]
    pub include_free_algebras: bool,
}

impl ModelConfig {
    pub fn spec(&self) -> MonadSpec {
        MonadSpec { kind: self.monad, exceptions: self.exceptions.clone() }
    }
}

/// Largest `T A` we are willing to tabulate.
pub const MAX_T_SIZE: u64 = 1 << 16;

impl MonadSpec {
    pub fn identity() -> Self {
        MonadSpec { kind: MonadKind::Identity, exceptions: Vec::new() }
    }

    pub fn exception(names: &[&str]) -> Self {
        MonadSpec { kind: MonadKind::Exception, exceptions: names.iter().map(|s| s.to_string()).collect() }
    }

    pub fn powerset() -> Self {
        MonadSpec { kind: MonadKind::Powerset, exceptions: Vec::new() }
    }

    pub fn n_exceptions(&self) -> usize {
        match self.kind {
            MonadKind::Exception => self.exceptions.len(),
            _ => 0,
        }
    }

    pub fn exception_index(&self, e: &str) -> Option<usize> {
        self.exceptions.iter().position(|x| x == e)
    }

    /// `|T A|` for `|A| = n`.
    pub fn t_size(&self, n: u32) -> u64 {
        match self.kind {
            MonadKind::Identity => n as u64,
            MonadKind::Exception => n as u64 + self.exceptions.len() as u64,
            MonadKind::Powerset => 1u64.checked_shl(n).map_or(u64::MAX, |p| p - 1),
        }
    }

    /// `eta_A` as a table.
    pub fn unit(&self, n: u32) -> Vec<u32> {
        match self.kind {
            MonadKind::Identity | MonadKind::Exception => (0..n).collect(),
            MonadKind::Powerset => (0..n).map(|i| (1u32 << i) - 1).collect(),
        }
    }

    /// Kleisli extension: for `f : A -> T B` (`|A| = n`, `|B| = m`) the table of `f† : T A -> T B`.
    pub fn extend(&self, n: u32, m: u32, f: &[u32]) -> Vec<u32> {
        debug_assert_eq!(f.len(), n as usize);
        match self.kind {
            MonadKind::Identity => f.to_vec(),
            MonadKind::Exception => {
                let mut out = f.to_vec();
                out.extend((0..self.exceptions.len() as u32).map(|e| m + e));
                out
            }
            MonadKind::Powerset => (1u32..(1 << n))
                .map(|mask| {
                    let mut acc = 0u32;
                    for i in 0..n {
                        if mask & (1 << i) != 0 {
                            acc |= f[i as usize] + 1;
                        }
                    }
                    acc - 1
                })
                .collect(),
        }
    }

    /// `T f` for `f : A -> B`.
    pub fn fmap(&self, n: u32, m: u32, f: &[u32]) -> Vec<u32> {
        let eta = self.unit(m);
        let g: Vec<u32> = f.iter().map(|&b| eta[b as usize]).collect();
        self.extend(n, m, &g)
    }

    /// The free algebra on a set of size `n`; its carrier is `T A`.
    pub fn free_algebra(&self, n: u32) -> Alg {
        let size = self.t_size(n) as u32;
        let ops = match self.kind {
            MonadKind::Identity => AlgOps::Identity,
            MonadKind::Exception => AlgOps::Exception { raise: (0..self.exceptions.len() as u32).map(|e| n + e).collect() },
            MonadKind::Powerset => {
                let mut join = vec![0; (size * size) as usize];
                for a in 0..size {
                    for b in 0..size {
                        join[(a * size + b) as usize] = ((a + 1) | (b + 1)) - 1;
                    }
                }
                AlgOps::Semilattice { join }
            }
        };
        Alg { carrier: size, ops }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct FinSet {
    pub size: u32,
    pub labels: Option<Vec<String>>,
}

impl FinSet {
    pub fn new(size: u32) -> Self {
        FinSet { size, labels: None }
    }
}

/// One canonical set per cardinality `0..=bound`.
pub fn enumerate_sets(bound: u32) -> Vec<FinSet> {
    (0..=bound).map(FinSet::new).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum AlgOps {
    Identity,
    /// One point per exception.
    Exception { raise: Vec<u32> },
    /// Row-major binary table.
    Semilattice { join: Vec<u32> },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Alg {
    pub carrier: u32,
    pub ops: AlgOps,
}

impl Alg {
    pub fn join(&self, a: u32, b: u32) -> u32 {
        match &self.ops {
            AlgOps::Semilattice { join } => join[(a * self.carrier + b) as usize],
            _ => panic!("join on an algebra without one"),
        }
    }

    pub fn satisfies_laws(&self) -> bool {
        match &self.ops {
            AlgOps::Identity => true,
            AlgOps::Exception { raise } => raise.iter().all(|&p| p < self.carrier),
            AlgOps::Semilattice { join } => {
                let n = self.carrier;
                if join.len() != (n * n) as usize || join.iter().any(|&v| v >= n) {
                    return false;
                }
                (0..n).all(|x| {
                    self.join(x, x) == x
                        && (0..n).all(|y| {
                            self.join(x, y) == self.join(y, x)
                                && (0..n).all(|z| self.join(x, self.join(y, z)) == self.join(self.join(x, y), z))
                        })
                })
            }
        }
    }

    /// The structure map `xi : T(carrier) -> carrier`.
    pub fn em_map(&self, m: &MonadSpec) -> Vec<u32> {
        let n = self.carrier;
        match &self.ops {
            AlgOps::Identity => (0..n).collect(),
            AlgOps::Exception { raise } => (0..n).chain(raise.iter().copied()).collect(),
            AlgOps::Semilattice { .. } => {
                debug_assert_eq!(m.kind, MonadKind::Powerset);
                (1u32..(1 << n))
                    .map(|mask| {
                        let mut acc: Option<u32> = None;
                        for i in 0..n {
                            if mask & (1 << i) != 0 {
                                acc = Some(acc.map_or(i, |a| self.join(a, i)));
                            }
                        }
                        acc.unwrap()
                    })
                    .collect()
            }
        }
    }

    /// `xi . eta = id` and `xi . mu = xi . T xi`, checked on every element.
    pub fn em_laws_hold(&self, m: &MonadSpec) -> bool {
        let n = self.carrier;
        if m.t_size(n) > MAX_T_SIZE {
            return true;
        }
        let xi = self.em_map(m);
        let eta = m.unit(n);
        if (0..n).any(|a| xi[eta[a as usize] as usize] != a) {
            return false;
        }
        let tn = m.t_size(n) as u32;
        if m.t_size(tn) > MAX_T_SIZE {
            return true;
        }
        let ident: Vec<u32> = (0..tn).collect();
        let mu = m.extend(tn, n, &ident);
        let txi = m.fmap(tn, n, &xi);
        (0..m.t_size(tn) as usize).all(|t| xi[mu[t] as usize] == xi[txi[t] as usize])
    }

    /// Apply a generic effect `t in T(k)` to arguments `args` in this algebra.
    pub fn eval_effect(&self, m: &MonadSpec, k: u32, t: u32, args: &[u32]) -> u32 {
        let tk = m.fmap(k, self.carrier, args);
        self.em_map(m)[tk[t as usize] as usize]
    }

    /// Pointwise product algebra; the pair `(a, b)` has index `a * other.carrier + b`.
    pub fn product(&self, other: &Alg) -> Alg {
        let (n, m) = (self.carrier, other.carrier);
        let ops = match (&self.ops, &other.ops) {
            (AlgOps::Identity, AlgOps::Identity) => AlgOps::Identity,
            (AlgOps::Exception { raise: r1 }, AlgOps::Exception { raise: r2 }) => {
                AlgOps::Exception { raise: r1.iter().zip(r2).map(|(a, b)| a * m + b).collect() }
            }
            (AlgOps::Semilattice { .. }, AlgOps::Semilattice { .. }) => {
                let size = n * m;
                let mut join = vec![0; (size * size) as usize];
                for p in 0..size {
                    for q in 0..size {
                        let a = self.join(p / m, q / m);
                        let b = other.join(p % m, q % m);
                        join[(p * size + q) as usize] = a * m + b;
                    }
                }
                AlgOps::Semilattice { join }
            }
            _ => panic!("product of algebras for different monads"),
        };
        Alg { carrier: n * m, ops }
    }
}

fn semilattice_tables(n: u32) -> Vec<Vec<u32>> {
    // free choice of the strict upper triangle, the rest forced
    let cells: Vec<(u32, u32)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    let mut vals = vec![0u32; cells.len()];
    loop {
        let mut join = vec![0; (n * n) as usize];
        for a in 0..n {
            join[(a * n + a) as usize] = a;
        }
        for (&(a, b), &v) in cells.iter().zip(&vals) {
            join[(a * n + b) as usize] = v;
            join[(b * n + a) as usize] = v;
        }
        let alg = Alg { carrier: n, ops: AlgOps::Semilattice { join } };
        if alg.satisfies_laws() {
            if let AlgOps::Semilattice { join } = alg.ops {
                out.push(join);
            }
        }
        let mut i = 0;
        loop {
            if i == vals.len() {
                return out;
            }
            vals[i] += 1;
            if vals[i] < n {
                break;
            }
            vals[i] = 0;
            i += 1;
        }
    }
}

/// All algebra structures on carriers `0..=bound`, deduplicated by table equality.
pub fn enumerate_algebras(m: &MonadSpec, bound: u32) -> Vec<Alg> {
    let mut out: Vec<Alg> = Vec::new();
    for n in 0..=bound {
        match m.kind {
            MonadKind::Identity => out.push(Alg { carrier: n, ops: AlgOps::Identity }),
            MonadKind::Exception => {
                let k = m.exceptions.len() as u32;
                if n == 0 && k > 0 {
                    continue;
                }
                for code in 0..n.pow(k) {
                    let raise = (0..k).map(|e| (code / n.pow(e)) % n).collect();
                    out.push(Alg { carrier: n, ops: AlgOps::Exception { raise } });
                }
            }
            MonadKind::Powerset => {
                for join in semilattice_tables(n) {
                    out.push(Alg { carrier: n, ops: AlgOps::Semilattice { join } });
                }
            }
        }
    }
    out
}

/// Append the free algebras on sets of the given sizes unless an identical table is present.
/// Returns, per requested size, the position of its free algebra in `algs`.
pub fn append_free_algebras(m: &MonadSpec, algs: &mut Vec<Alg>, sizes: &[u32]) -> Vec<usize> {
    sizes
        .iter()
        .map(|&n| {
            let free = m.free_algebra(n);
            match algs.iter().position(|a| *a == free) {
                Some(i) => i,
                None => {
                    algs.push(free);
                    algs.len() - 1
                }
            }
        })
        .collect()
}

pub fn is_homomorphism(f: &[u32], dom: &Alg, cod: &Alg) -> bool {
    if f.len() != dom.carrier as usize || f.iter().any(|&y| y >= cod.carrier) {
        return false;
    }
    match (&dom.ops, &cod.ops) {
        (AlgOps::Identity, AlgOps::Identity) => true,
        (AlgOps::Exception { raise: r1 }, AlgOps::Exception { raise: r2 }) => {
            r1.iter().zip(r2).all(|(&a, &b)| f[a as usize] == b)
        }
        (AlgOps::Semilattice { .. }, AlgOps::Semilattice { .. }) => (0..dom.carrier).all(|x| {
            (0..dom.carrier).all(|y| f[dom.join(x, y) as usize] == cod.join(f[x as usize], f[y as usize]))
        }),
        _ => false,
    }
}

/// All homomorphisms `dom -> cod` in lexicographic table order.
pub fn homomorphisms(dom: &Alg, cod: &Alg) -> Vec<Vec<u32>> {
    homomorphisms_limited(dom, cod, usize::MAX).expect("no limit")
}

/// As [`homomorphisms`], or `None` once more than `limit` are found.
pub fn homomorphisms_limited(dom: &Alg, cod: &Alg, limit: usize) -> Option<Vec<Vec<u32>>> {
    let n = dom.carrier as usize;
    let mut out = Vec::new();
    let mut f = vec![0u32; n];
    fn go(i: usize, f: &mut Vec<u32>, dom: &Alg, cod: &Alg, out: &mut Vec<Vec<u32>>, limit: usize) -> bool {
        if i == f.len() {
            if is_homomorphism(f, dom, cod) {
                out.push(f.clone());
            }
            return out.len() <= limit;
        }
        'v: for v in 0..cod.carrier {
            f[i] = v;
            // early checks on fully assigned cells
            match (&dom.ops, &cod.ops) {
                (AlgOps::Exception { raise: r1 }, AlgOps::Exception { raise: r2 }) => {
                    for (&a, &b) in r1.iter().zip(r2) {
                        if a as usize == i && v != b {
                            continue 'v;
                        }
                    }
                }
                (AlgOps::Semilattice { .. }, AlgOps::Semilattice { .. }) => {
                    for x in 0..=i as u32 {
                        let j = dom.join(x, i as u32) as usize;
                        if j <= i && f[j] != cod.join(f[x as usize], v) {
                            continue 'v;
                        }
                    }
                }
                _ => {}
            }
            if !go(i + 1, f, dom, cod, out, limit) {
                return false;
            }
        }
        true
    }
    if (cod.carrier > 0 || n == 0) && !go(0, &mut f, dom, cod, &mut out, limit) {
        return None;
    }
    Some(out)
}

pub fn carries_subalgebra(s: &[bool], a: &Alg) -> bool {
    match &a.ops {
        AlgOps::Identity => true,
        AlgOps::Exception { raise } => raise.iter().all(|&p| s[p as usize]),
        AlgOps::Semilattice { .. } => (0..a.carrier)
            .all(|x| !s[x as usize] || (0..a.carrier).all(|y| !s[y as usize] || s[a.join(x, y) as usize])),
    }
}

/// The subalgebra generated by `s`.
pub fn generated_subalgebra(s: &[bool], a: &Alg) -> Vec<bool> {
    let mut out = s.to_vec();
    match &a.ops {
        AlgOps::Identity => {}
        AlgOps::Exception { raise } => {
            for &p in raise {
                out[p as usize] = true;
            }
        }
        AlgOps::Semilattice { .. } => loop {
            let mut changed = false;
            for x in 0..a.carrier {
                for y in 0..a.carrier {
                    if out[x as usize] && out[y as usize] {
                        let j = a.join(x, y) as usize;
                        if !out[j] {
                            out[j] = true;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        },
    }
    out
}

/// All subalgebras of `a` (sets closed under the operations), via next-closure
/// enumeration in lectic order.
pub fn subalgebras(a: &Alg) -> Vec<Vec<bool>> {
    let n = a.carrier as usize;
    let mut out = Vec::new();
    let mut cur = generated_subalgebra(&vec![false; n], a);
    loop {
        out.push(cur.clone());
        // next closure after cur
        let mut found = None;
        for i in (0..n).rev() {
            if cur[i] {
                continue;
            }
            let mut seed: Vec<bool> = (0..n).map(|j| j < i && cur[j]).collect();
            seed[i] = true;
            let cl = generated_subalgebra(&seed, a);
            if (0..i).all(|j| cl[j] == cur[j]) {
                found = Some(cl);
                break;
            }
        }
        match found {
            Some(c) => cur = c,
            None => return out,
        }
    }
}

/// A binary relation between carriers of the given sizes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Rel {
    pub left: u32,
    pub right: u32,
    pub pairs: BTreeSet<(u32, u32)>,
}

impl Rel {
    pub fn new(left: u32, right: u32, pairs: impl IntoIterator<Item = (u32, u32)>) -> Self {
        let pairs: BTreeSet<_> = pairs.into_iter().collect();
        debug_assert!(pairs.iter().all(|&(a, b)| a < left && b < right));
        Rel { left, right, pairs }
    }

    pub fn empty(left: u32, right: u32) -> Self {
        Rel::new(left, right, [])
    }

    pub fn diagonal(n: u32) -> Self {
        Rel::new(n, n, (0..n).map(|i| (i, i)))
    }

    pub fn full(left: u32, right: u32) -> Self {
        Rel::new(left, right, (0..left).flat_map(|a| (0..right).map(move |b| (a, b))))
    }

    /// `{(x, f x)}`.
    pub fn graph(f: &[u32], right: u32) -> Self {
        Rel::new(f.len() as u32, right, f.iter().enumerate().map(|(i, &y)| (i as u32, y)))
    }

    pub fn contains(&self, a: u32, b: u32) -> bool {
        self.pairs.contains(&(a, b))
    }

    pub fn opposite(&self) -> Self {
        Rel::new(self.right, self.left, self.pairs.iter().map(|&(a, b)| (b, a)))
    }

    /// `(f, g)^{-1} R = {(x, y) | (f x, g y) in R}`.
    pub fn preimage(&self, f: &[u32], g: &[u32]) -> Self {
        let mut pairs = Vec::new();
        for (x, &fx) in f.iter().enumerate() {
            for (y, &gy) in g.iter().enumerate() {
                if self.contains(fx, gy) {
                    pairs.push((x as u32, y as u32));
                }
            }
        }
        Rel::new(f.len() as u32, g.len() as u32, pairs)
    }

    pub fn intersection(&self, other: &Rel) -> Self {
        Rel::new(self.left, self.right, self.pairs.intersection(&other.pairs).copied())
    }

    pub fn is_subset(&self, other: &Rel) -> bool {
        self.pairs.is_subset(&other.pairs)
    }

    /// Characteristic vector over the product, index `a * right + b`.
    pub fn to_mask(&self) -> Vec<bool> {
        let mut out = vec![false; (self.left * self.right) as usize];
        for &(a, b) in &self.pairs {
            out[(a * self.right + b) as usize] = true;
        }
        out
    }

    pub fn from_mask(left: u32, right: u32, mask: &[bool]) -> Self {
        Rel::new(left, right, (0..left * right).filter(|&i| mask[i as usize]).map(|i| (i / right, i % right)))
    }

    /// Relations between algebras are admissible when they carry a subalgebra of the product.
    pub fn is_admissible(&self, a: &Alg, b: &Alg) -> bool {
        carries_subalgebra(&self.to_mask(), &a.product(b))
    }
}

/// All relations between sets of the given sizes.
pub fn all_relations(left: u32, right: u32) -> Vec<Rel> {
    let cells = left * right;
    assert!(cells <= 20, "too many relations to enumerate");
    (0u32..1 << cells)
        .map(|m| Rel::from_mask(left, right, &(0..cells).map(|i| m & (1 << i) != 0).collect::<Vec<_>>()))
        .collect()
}

/// All admissible relations between two algebras.
pub fn admissible_relations(a: &Alg, b: &Alg) -> Vec<Rel> {
    subalgebras(&a.product(b)).iter().map(|m| Rel::from_mask(a.carrier, b.carrier, m)).collect()
}

/// The smallest admissible relation containing `r`.
pub fn admissible_closure(r: &Rel, a: &Alg, b: &Alg) -> Rel {
    let m = generated_subalgebra(&r.to_mask(), &a.product(b));
    Rel::from_mask(a.carrier, b.carrier, &m)
}

/// Outcome of a law check: how many instances were examined and the first failure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LawReport {
    pub instances: u64,
    pub exhaustive: bool,
    pub failure: Option<String>,
}

impl LawReport {
    fn new() -> Self {
        LawReport { instances: 0, exhaustive: true, failure: None }
    }

    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// Iterate over all functions `n -> m` as tables, in mixed-radix order.
pub fn for_each_function(n: u32, m: u32, mut f: impl FnMut(&[u32]) -> bool) {
    if m == 0 && n > 0 {
        return;
    }
    let mut t = vec![0u32; n as usize];
    loop {
        if !f(&t) {
            return;
        }
        let mut i = 0;
        loop {
            if i == t.len() {
                return;
            }
            t[i] += 1;
            if t[i] < m {
                break;
            }
            t[i] = 0;
            i += 1;
        }
    }
}

fn function_count(n: u32, m: u32) -> u64 {
    (m as u64).checked_pow(n).unwrap_or(u64::MAX)
}

/// Kleisli-form monad laws on all sets of size `<= max`. Associativity
/// `(g† . f)† = g† . f†` is checked over every pair `(f, g)` when there are at
/// most `pair_budget` of them for a size triple; beyond that every `f` is paired
/// with a seeded sample of `g`s and the report is marked non-exhaustive.
pub fn check_monad_laws(m: &MonadSpec, max: u32, pair_budget: u64, seed: u64) -> LawReport {
    use rand::{Rng, SeedableRng};
    let mut rep = LawReport::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for a in 0..=max {
        let ta = m.t_size(a) as u32;
        // eta† = id
        let eta = m.unit(a);
        rep.instances += 1;
        if m.extend(a, a, &eta) != (0..ta).collect::<Vec<_>>() {
            rep.failure = Some(format!("unit extension is not the identity on T({a})"));
            return rep;
        }
        for b in 0..=max {
            let tb = m.t_size(b) as u32;
            let mut bad = None;
            for_each_function(a, tb, |f| {
                rep.instances += 1;
                let fd = m.extend(a, b, f);
                if (0..a as usize).any(|i| fd[eta[i] as usize] != f[i]) {
                    bad = Some(format!("f† . eta != f for f = {f:?}"));
                }
                bad.is_none()
            });
            if bad.is_some() {
                rep.failure = bad;
                return rep;
            }
            for c in 0..=max {
                let tc = m.t_size(c) as u32;
                let nf = function_count(a, tb);
                let ng = function_count(b, tc);
                let sampled = nf.saturating_mul(ng) > pair_budget;
                let gs: Vec<Vec<u32>> = if sampled {
                    rep.exhaustive = false;
                    let k = (pair_budget / nf.max(1)).max(1);
                    (0..k).map(|_| (0..b).map(|_| rng.gen_range(0..tc)).collect()).collect()
                } else {
                    let mut v = Vec::new();
                    for_each_function(b, tc, |g| {
                        v.push(g.to_vec());
                        true
                    });
                    v
                };
                for g in &gs {
                    let gd = m.extend(b, c, g);
                    let mut bad = None;
                    for_each_function(a, tb, |f| {
                        rep.instances += 1;
                        let h: Vec<u32> = f.iter().map(|&y| gd[y as usize]).collect();
                        let lhs = m.extend(a, c, &h);
                        let fd = m.extend(a, b, f);
                        if lhs.iter().zip(&fd).any(|(&l, &y)| l != gd[y as usize]) {
                            bad = Some(format!("(g† . f)† != g† . f† for f = {f:?}, g = {g:?}"));
                        }
                        bad.is_none()
                    });
                    if bad.is_some() {
                        rep.failure = bad;
                        return rep;
                    }
                }
            }
        }
    }
    rep
}

/// Objects on which (R1)-(R3) are checked: plain sets or algebras.
#[derive(Clone, Debug)]
pub enum Object {
    Set(u32),
    Alg(Alg),
}

impl Object {
    fn same_kind(&self, other: &Object) -> bool {
        matches!((self, other), (Object::Set(_), Object::Set(_)) | (Object::Alg(_), Object::Alg(_)))
    }

    pub fn size(&self) -> u32 {
        match self {
            Object::Set(n) => *n,
            Object::Alg(a) => a.carrier,
        }
    }

    fn admissible(&self, other: &Object) -> Vec<Rel> {
        match (self, other) {
            (Object::Set(a), Object::Set(b)) => all_relations(*a, *b),
            (Object::Alg(a), Object::Alg(b)) => admissible_relations(a, b),
            _ => panic!("relations between a set and an algebra"),
        }
    }

    fn is_admissible(&self, other: &Object, r: &Rel) -> bool {
        match (self, other) {
            (Object::Set(_), Object::Set(_)) => true,
            (Object::Alg(a), Object::Alg(b)) => r.is_admissible(a, b),
            _ => false,
        }
    }

    fn morphisms(&self, other: &Object) -> Vec<Vec<u32>> {
        match (self, other) {
            (Object::Set(a), Object::Set(b)) => {
                let mut v = Vec::new();
                for_each_function(*a, *b, |f| {
                    v.push(f.to_vec());
                    true
                });
                v
            }
            (Object::Alg(a), Object::Alg(b)) => homomorphisms(a, b),
            _ => Vec::new(),
        }
    }
}

/// (R1) diagonals, (R2) reindexing along morphisms and (R3) binary
/// intersections, exhaustively over the given objects.
pub fn check_relation_axioms(objs: &[Object]) -> [LawReport; 3] {
    let mut r1 = LawReport::new();
    let mut r2 = LawReport::new();
    let mut r3 = LawReport::new();
    for o in objs {
        r1.instances += 1;
        if r1.failure.is_none() && !o.is_admissible(o, &Rel::diagonal(o.size())) {
            r1.failure = Some(format!("diagonal on {o:?} is not admissible"));
        }
    }
    for a in objs {
        for b in objs.iter().filter(|b| a.same_kind(b)) {
            let rels = a.admissible(b);
            for (i, r) in rels.iter().enumerate() {
                for s in &rels[i..] {
                    r3.instances += 1;
                    if r3.failure.is_none() && !a.is_admissible(b, &r.intersection(s)) {
                        r3.failure = Some(format!("{r:?} and {s:?} have a non-admissible intersection"));
                    }
                }
            }
            for a2 in objs.iter().filter(|o| o.same_kind(a)) {
                let fs = a2.morphisms(a);
                for b2 in objs.iter().filter(|o| o.same_kind(b)) {
                    let gs = b2.morphisms(b);
                    for r in &rels {
                        for f in &fs {
                            for g in &gs {
                                r2.instances += 1;
                                if r2.failure.is_none() && !a2.is_admissible(b2, &r.preimage(f, g)) {
                                    r2.failure = Some(format!("preimage of {r:?} along {f:?}, {g:?} is not admissible"));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    [r1, r2, r3]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exc1() -> MonadSpec {
        MonadSpec::exception(&["e"])
    }

    #[test]
    fn set_enumeration() {
        assert_eq!(enumerate_sets(2).iter().map(|s| s.size).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert_eq!(enumerate_sets(0).len(), 1);
    }

    #[test]
    fn algebra_counts() {
        let count = |m: &MonadSpec, n: u32| enumerate_algebras(m, n).iter().filter(|a| a.carrier == n).count();
        assert_eq!(count(&exc1(), 2), 2);
        assert_eq!(count(&MonadSpec::powerset(), 2), 2);
        assert_eq!(count(&MonadSpec::powerset(), 3), 9);
        for m in [exc1(), MonadSpec::powerset(), MonadSpec::identity()] {
            assert_eq!(count(&m, 1), 1);
        }
        assert_eq!(count(&MonadSpec::exception(&["a", "b"]), 2), 4);
    }

    #[test]
    fn free_algebras() {
        assert_eq!(exc1().free_algebra(2).carrier, 3);
        assert_eq!(MonadSpec::powerset().free_algebra(2).carrier, 3);
        assert_eq!(MonadSpec::identity().free_algebra(2).carrier, 2);
        for m in [exc1(), MonadSpec::powerset(), MonadSpec::exception(&["a", "b"])] {
            for n in 0..=3 {
                let f = m.free_algebra(n);
                assert!(f.satisfies_laws());
                assert!(f.em_laws_hold(&m));
            }
        }
    }

    #[test]
    fn em_maps_agree_with_tables() {
        for m in [exc1(), MonadSpec::powerset()] {
            for a in enumerate_algebras(&m, 3) {
                assert!(a.em_laws_hold(&m), "{a:?}");
            }
        }
    }

    #[test]
    fn homomorphism_examples() {
        let a = Alg { carrier: 2, ops: AlgOps::Exception { raise: vec![1] } };
        assert!(is_homomorphism(&[0, 1], &a, &a));
        assert!(!is_homomorphism(&[0, 0], &a, &a));
        let algs: Vec<Alg> = enumerate_algebras(&MonadSpec::powerset(), 2).into_iter().filter(|a| a.carrier == 2).collect();
        for x in &algs {
            for y in &algs {
                let mut count = 0;
                for_each_function(2, 2, |f| {
                    if is_homomorphism(f, x, y) {
                        count += 1;
                    }
                    true
                });
                assert_eq!(count, homomorphisms(x, y).len());
                // constants and the order-preserving bijection
                assert_eq!(count, 3);
            }
        }
    }

    #[test]
    fn subalgebra_examples() {
        let a = Alg { carrier: 2, ops: AlgOps::Exception { raise: vec![1] } };
        assert!(carries_subalgebra(&[true, true], &a));
        assert!(!carries_subalgebra(&[true, false], &a));
        let chain = Alg { carrier: 2, ops: AlgOps::Semilattice { join: vec![0, 1, 1, 1] } };
        assert!(carries_subalgebra(&[true, false], &chain));
        assert_eq!(subalgebras(&chain).len(), 4);
        assert_eq!(subalgebras(&a).len(), 2);
    }

    #[test]
    fn subalgebras_match_brute_force() {
        for m in [exc1(), MonadSpec::powerset(), MonadSpec::exception(&["a", "b"])] {
            let algs = enumerate_algebras(&m, 2);
            for x in &algs {
                for y in &algs {
                    let p = x.product(y);
                    let n = p.carrier;
                    let mut brute = Vec::new();
                    for mask in 0u32..1 << n {
                        let s: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
                        if carries_subalgebra(&s, &p) {
                            brute.push(s);
                        }
                    }
                    let mut fast = subalgebras(&p);
                    brute.sort();
                    fast.sort();
                    assert_eq!(brute, fast);
                }
            }
        }
    }

    #[test]
    fn closure_examples() {
        let m = exc1();
        let f1 = m.free_algebra(1);
        let c = admissible_closure(&Rel::empty(2, 2), &f1, &f1);
        assert_eq!(c, Rel::new(2, 2, [(1, 1)]));
        let c = admissible_closure(&Rel::new(2, 2, [(0, 0)]), &f1, &f1);
        assert_eq!(c, Rel::new(2, 2, [(0, 0), (1, 1)]));
        let p = MonadSpec::powerset().free_algebra(2);
        assert_eq!(admissible_closure(&Rel::diagonal(3), &p, &p), Rel::diagonal(3));
    }

    #[test]
    fn relation_ops() {
        let d = Rel::diagonal(3);
        assert_eq!(d.opposite(), d);
        let r = Rel::new(2, 3, [(0, 2), (1, 0)]);
        assert_eq!(r.preimage(&[0, 1], &[0, 1, 2]), r);
        let f = [2, 0];
        assert_eq!(Rel::graph(&f, 3), Rel::diagonal(3).preimage(&f, &[0, 1, 2]));
    }

    #[test]
    fn monad_laws_small() {
        for m in [MonadSpec::identity(), exc1(), MonadSpec::exception(&["a", "b"]), MonadSpec::powerset()] {
            let r = check_monad_laws(&m, 2, u64::MAX, 0);
            assert!(r.ok(), "{m:?}: {r:?}");
            assert!(r.exhaustive);
        }
    }

    #[test]
    fn broken_extension_is_caught() {
        // a wrong table for f† must violate f† . eta = f
        let m = exc1();
        let f = [1u32, 0];
        let mut fd = m.extend(2, 2, &f);
        fd.swap(0, 1);
        assert!(m.unit(2).iter().enumerate().any(|(i, &e)| fd[e as usize] != f[i]));
    }

    #[test]
    fn effect_evaluation() {
        let m = MonadSpec::powerset();
        let chain = Alg { carrier: 2, ops: AlgOps::Semilattice { join: vec![0, 1, 1, 1] } };
        // the generic effect {0,1} in T(2) is binary join
        assert_eq!(chain.eval_effect(&m, 2, 2, &[0, 1]), 1);
        assert_eq!(chain.eval_effect(&m, 2, 0, &[0, 1]), 0);
    }

    #[test]
    fn config_json() {
        let c: ModelConfig =
            serde_json::from_str(r#"{"monad":"exception","E":["e1"],"bound":2,"include-free-algebras":true}"#).unwrap();
        assert_eq!(c.spec(), MonadSpec::exception(&["e1"]));
        assert!(c.include_free_algebras);
    }
}

//! Seeded, type-directed generation of well-typed judgments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{synth, typecheck, Signature, SubstInstance};
use crate::kernel::{alpha_eq_type, name, subst_type, Judgment, Name, Sort, Term, TyVar, Type};

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub value_vars: Vec<&'static str>,
    pub comp_vars: Vec<&'static str>,
    /// Depth of context and target types.
    pub type_depth: usize,
    /// Depth budget for terms.
    pub term_depth: usize,
    pub max_gamma: usize,
    pub stoup_prob: f64,
    /// Probability of a quantifier at each type node that admits one.
    pub forall_prob: f64,
    pub use_constants: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            value_vars: vec!["X", "Y"],
            comp_vars: vec!["A", "B"],
            type_depth: 2,
            term_depth: 4,
            max_gamma: 3,
            stoup_prob: 0.4,
            forall_prob: 0.15,
            use_constants: true,
        }
    }
}

impl GenConfig {
    /// Small types and terms whose denotations stay tiny at bound 2.
    pub fn semantic() -> Self {
        GenConfig {
            value_vars: vec!["X"],
            comp_vars: vec!["A"],
            type_depth: 1,
            term_depth: 3,
            max_gamma: 2,
            stoup_prob: 0.4,
            forall_prob: 0.0,
            use_constants: true,
        }
    }
}

pub struct Generator<'a> {
    sig: &'a Signature,
    cfg: GenConfig,
    rng: ChaCha8Rng,
    fresh: usize,
}

type Ctx = Vec<(Name, Type)>;

impl<'a> Generator<'a> {
    pub fn new(sig: &'a Signature, cfg: GenConfig, seed: u64) -> Self {
        Generator { sig, cfg, rng: ChaCha8Rng::seed_from_u64(seed), fresh: 0 }
    }

    fn fresh_var(&mut self) -> Name {
        self.fresh += 1;
        name(&format!("v{}", self.fresh))
    }

    fn fresh_tyvar(&mut self) -> Name {
        self.fresh += 1;
        name(&format!("Z{}", self.fresh))
    }

    pub fn random_type(&mut self, depth: usize, comp: bool) -> Type {
        let (vs, cs) = (
            self.cfg.value_vars.iter().map(|v| TyVar::v(v)).collect::<Vec<_>>(),
            self.cfg.comp_vars.iter().map(|v| TyVar::c(v)).collect::<Vec<_>>(),
        );
        self.type_in(depth, comp, &vs, &cs)
    }

    fn type_in(&mut self, depth: usize, comp: bool, vs: &[TyVar], cs: &[TyVar]) -> Type {
        if depth > 0 && self.rng.gen_bool(self.cfg.forall_prob) {
            let z = self.fresh_tyvar();
            let value_binder = !comp && self.rng.gen_bool(0.5);
            let (mut vs2, mut cs2) = (vs.to_vec(), cs.to_vec());
            if value_binder {
                vs2.push(TyVar { sort: Sort::Value, name: z.clone() });
                let body = self.type_in(depth - 1, comp, &vs2, &cs2);
                return Type::ForallV(z, Box::new(body));
            }
            cs2.push(TyVar { sort: Sort::Computation, name: z.clone() });
            let body = self.type_in(depth - 1, comp, &vs2, &cs2);
            return Type::ForallC(z, Box::new(body));
        }
        let choice = if depth == 0 { 0 } else { self.rng.gen_range(0..4) };
        match (comp, choice) {
            (true, 0) | (true, 3) => cs.choose(&mut self.rng).unwrap().as_type(),
            (true, _) => {
                let a = self.type_in(depth - 1, false, vs, cs);
                let b = self.type_in(depth - 1, true, vs, cs);
                Type::arrow(a, b)
            }
            (false, 0) => {
                if self.rng.gen_bool(0.6) {
                    vs.choose(&mut self.rng).unwrap().as_type()
                } else {
                    cs.choose(&mut self.rng).unwrap().as_type()
                }
            }
            (false, 1) => {
                let a = self.type_in(depth - 1, false, vs, cs);
                let b = self.type_in(depth - 1, false, vs, cs);
                Type::arrow(a, b)
            }
            (false, 2) => {
                let a = self.type_in(depth - 1, true, vs, cs);
                let b = self.type_in(depth - 1, true, vs, cs);
                Type::lolli(a, b)
            }
            _ => self.type_in(depth, true, vs, cs),
        }
    }

    /// A random well-typed judgment, ascribed with its type.
    pub fn judgment(&mut self) -> Judgment {
        loop {
            let stoup = self.rng.gen_bool(self.cfg.stoup_prob);
            if let Some(j) = self.try_judgment(stoup) {
                return j;
            }
        }
    }

    /// A random judgment with (`true`) or without a stoup.
    pub fn judgment_with_stoup(&mut self, stoup: bool) -> Judgment {
        loop {
            if let Some(j) = self.try_judgment(stoup) {
                return j;
            }
        }
    }

    fn try_judgment(&mut self, stoup: bool) -> Option<Judgment> {
        let n = self.rng.gen_range(0..=self.cfg.max_gamma);
        let depth = self.cfg.type_depth;
        let mut gamma: Ctx = Vec::new();
        for _ in 0..n {
            let comp = self.rng.gen_bool(0.5);
            let ty = self.random_type(depth, comp);
            let x = self.fresh_var();
            gamma.push((x, ty));
        }
        let delta = if stoup {
            let ty = self.random_type(depth, true);
            Some((self.fresh_var(), ty))
        } else {
            None
        };
        let comp = delta.is_some() || self.rng.gen_bool(0.3);
        let target = self.random_type(depth, comp);
        let d = delta.as_ref().map(|(a, b)| (a, b));
        let t = self.term_of(&gamma, d, &target, self.cfg.term_depth)?;
        let j = Judgment { gamma, delta, subject: t, ascription: Some(target) };
        match typecheck(self.sig, &j) {
            Ok(_) => Some(j),
            Err(e) => panic!("generator produced an ill-typed judgment {j:?}: {e}"),
        }
    }

    /// A term of type `target` in `gamma | delta`, if one is found.
    pub fn term_of(&mut self, gamma: &Ctx, delta: Option<(&Name, &Type)>, target: &Type, depth: usize) -> Option<Term> {
        let mut options = vec![0u8, 1, 2, 2, 3];
        options.shuffle(&mut self.rng);
        for opt in options {
            let r = match opt {
                0 => self.variable(gamma, delta, target),
                1 | 2 if depth > 0 => self.elimination(gamma, delta, target, depth),
                3 if depth > 0 => self.introduction(gamma, delta, target, depth),
                _ => None,
            };
            if r.is_some() {
                return r;
            }
        }
        // a last deterministic attempt keeps failure rates down
        self.variable(gamma, delta, target).or_else(|| {
            if depth > 0 {
                self.introduction(gamma, delta, target, depth)
            } else {
                None
            }
        })
    }

    fn variable(&mut self, gamma: &Ctx, delta: Option<(&Name, &Type)>, target: &Type) -> Option<Term> {
        match delta {
            Some((x, ty)) => alpha_eq_type(ty, target).then(|| Term::Var(x.clone())),
            None => {
                let hits: Vec<&Name> = visible(gamma)
                    .into_iter()
                    .filter(|(_, t)| alpha_eq_type(t, target))
                    .map(|(x, _)| x)
                    .collect();
                hits.choose(&mut self.rng).map(|x| Term::Var((*x).clone()))
            }
        }
    }

    fn introduction(&mut self, gamma: &Ctx, delta: Option<(&Name, &Type)>, target: &Type, depth: usize) -> Option<Term> {
        match target {
            Type::Arrow(b, c) => {
                let x = self.fresh_var();
                let mut g = gamma.clone();
                g.push((x.clone(), (**b).clone()));
                let body = self.term_of(&g, delta, c, depth - 1)?;
                Some(Term::Lam(x, (**b).clone(), Box::new(body)))
            }
            Type::Lolli(a, b) => {
                if delta.is_some() {
                    return None;
                }
                let x = self.fresh_var();
                let body = self.term_of(gamma, Some((&x, a)), b, depth - 1)?;
                Some(Term::LinLam(x, (**a).clone(), Box::new(body)))
            }
            Type::ForallV(z, b) | Type::ForallC(z, b) => {
                let sort = target.binder_sort().unwrap();
                let fresh = self.fresh_tyvar();
                let body_ty = subst_type(b, &TyVar { sort, name: z.clone() }, &TyVar { sort, name: fresh.clone() }.as_type())
                    .ok()?;
                let body = self.term_of(gamma, delta, &body_ty, depth - 1)?;
                Some(match sort {
                    Sort::Value => Term::TyLamV(fresh, Box::new(body)),
                    Sort::Computation => Term::TyLamC(fresh, Box::new(body)),
                })
            }
            _ => None,
        }
    }

    fn elimination(&mut self, gamma: &Ctx, delta: Option<(&Name, &Type)>, target: &Type, depth: usize) -> Option<Term> {
        let mut heads: Vec<(Term, Type, bool)> = visible(gamma)
            .into_iter()
            .map(|(x, t)| (Term::Var(x.clone()), t.clone(), false))
            .collect();
        if let Some((x, t)) = delta {
            heads.push((Term::Var(x.clone()), t.clone(), true));
        }
        if self.cfg.use_constants {
            for (c, t) in self.sig.iter() {
                heads.push((Term::Const(c.clone()), t.clone(), false));
            }
        }
        heads.shuffle(&mut self.rng);
        for (h, ty, uses) in heads.into_iter().take(4) {
            if let Some(t) = self.spine(gamma, delta, h, ty, uses, target, depth, 4) {
                return Some(t);
            }
        }
        None
    }

    #[allow(clippy::too_many_arguments)]
    fn spine(
        &mut self,
        gamma: &Ctx,
        delta: Option<(&Name, &Type)>,
        head: Term,
        ty: Type,
        used: bool,
        target: &Type,
        depth: usize,
        steps: usize,
    ) -> Option<Term> {
        if alpha_eq_type(&ty, target) && (delta.is_none() || used) {
            return Some(head);
        }
        if steps == 0 {
            return None;
        }
        match &ty {
            Type::Arrow(b, c) => {
                let arg = self.term_of(gamma, None, b, depth - 1)?;
                self.spine(gamma, delta, Term::app(head, arg), (**c).clone(), used, target, depth, steps - 1)
            }
            Type::Lolli(a, b) => {
                if used {
                    return None;
                }
                let route = delta.is_some() && self.rng.gen_bool(0.7);
                let arg = self.term_of(gamma, if route { delta } else { None }, a, depth - 1)?;
                self.spine(gamma, delta, Term::app(head, arg), (**b).clone(), route, target, depth, steps - 1)
            }
            Type::ForallV(x, b) | Type::ForallC(x, b) => {
                let sort = ty.binder_sort().unwrap();
                let v = TyVar { sort, name: x.clone() };
                let comp = sort == Sort::Computation;
                let inst = if result_var(b).as_ref() == Some(&v) && (!comp || target.is_computation()) && self.rng.gen_bool(0.8) {
                    target.clone()
                } else {
                    self.random_type(1, comp)
                };
                let body = subst_type(b, &v, &inst).ok()?;
                let head = if comp { Term::ty_app_c(head, inst) } else { Term::ty_app_v(head, inst) };
                self.spine(gamma, delta, head, body, used, target, depth, steps - 1)
            }
            _ => None,
        }
    }

    /// A substitution-lemma instance; part 2 when `stoup_var` holds.
    pub fn subst_instance(&mut self, stoup_var: bool) -> SubstInstance {
        loop {
            if let Some(i) = self.try_subst_instance(stoup_var) {
                return i;
            }
        }
    }

    fn try_subst_instance(&mut self, stoup_var: bool) -> Option<SubstInstance> {
        let stoup = stoup_var || self.rng.gen_bool(0.3);
        let j = self.try_judgment(stoup)?;
        if stoup_var {
            let (x, a) = j.delta.clone()?;
            let new_delta = if self.rng.gen_bool(0.5) {
                Some((self.fresh_var(), self.random_type(self.cfg.type_depth, true)))
            } else {
                None
            };
            let s = self.term_of(&j.gamma, new_delta.as_ref().map(|(p, q)| (p, q)), &a, self.cfg.term_depth)?;
            return Some(SubstInstance { gamma: j.gamma, x, x_ty: a, stoup_var: true, delta: new_delta, t: j.subject, s });
        }
        if j.gamma.is_empty() {
            return None;
        }
        let k = self.rng.gen_range(0..j.gamma.len());
        let (x, a) = j.gamma[k].clone();
        let mut rest = j.gamma.clone();
        rest.remove(k);
        let s = self.term_of(&rest, None, &a, self.cfg.term_depth)?;
        debug_assert!(synth(self.sig, &rest, None, &s).is_ok());
        Some(SubstInstance { gamma: rest, x, x_ty: a, stoup_var: false, delta: j.delta, t: j.subject, s })
    }
}

/// Context entries not shadowed by a later binding of the same name.
fn visible(gamma: &Ctx) -> Vec<(&Name, &Type)> {
    gamma
        .iter()
        .enumerate()
        .filter(|(i, (x, _))| !gamma[i + 1..].iter().any(|(y, _)| y == x))
        .map(|(_, (x, t))| (x, t))
        .collect()
}

/// The variable at the end of an arrow chain, if any.
fn result_var(t: &Type) -> Option<TyVar> {
    let mut cur = t;
    while let Type::Arrow(_, c) | Type::Lolli(_, c) = cur {
        cur = c;
    }
    match cur {
        Type::VVar(n) => Some(TyVar { sort: Sort::Value, name: n.clone() }),
        Type::CVar(n) => Some(TyVar { sort: Sort::Computation, name: n.clone() }),
        _ => None,
    }
}

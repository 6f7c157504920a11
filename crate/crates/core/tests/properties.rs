//! Randomised properties of the kernel, the surface syntax and the model.

use proptest::prelude::*;
use proptest::test_runner::Config;

use pe_core::encodings::{elaborate_term, elaborate_type, register_effect_constants, signature_of};
use pe_core::finmodel::{self, ModelConfig, MonadKind, MonadSpec};
use pe_core::interp::{Enumeration, Model};
use pe_core::kernel::{alpha_eq_term, alpha_eq_type, classify_type, subst_type, Kind, TyVar, Type};
use pe_core::paramlab::{verify_abstraction, verify_free_algebra_candidate, verify_metatheory, Status, VerificationReport};
use pe_core::surface::{parse_term, parse_type, print_core_term, print_core_type};
use pe_core::typecheck::gen::{GenConfig, Generator};
use pe_core::typecheck::{check_unicity, typecheck, Signature};

fn exc1() -> MonadSpec {
    MonadSpec::exception(&["e"])
}

fn sig() -> Signature {
    signature_of(&register_effect_constants(&exc1()))
}

fn spec_of(k: u8) -> MonadSpec {
    match k % 3 {
        0 => MonadSpec::identity(),
        1 => exc1(),
        _ => MonadSpec::powerset(),
    }
}

fn stable(mut r: VerificationReport) -> String {
    r.runtime_ms = 0;
    serde_json::to_string(&r).unwrap()
}

proptest! {
    #![proptest_config(Config { cases: 64, ..Config::default() })]

    #[test]
    fn printed_types_parse_back(seed in any::<u64>(), comp in any::<bool>()) {
        let s = sig();
        let t = Generator::new(&s, GenConfig::default(), seed).random_type(3, comp);
        let back = elaborate_type(&parse_type(&print_core_type(&t)).unwrap()).unwrap();
        prop_assert!(alpha_eq_type(&t, &back), "{t} printed as {}", print_core_type(&t));
    }

    #[test]
    fn printed_terms_parse_back(seed in any::<u64>()) {
        let s = sig();
        let j = Generator::new(&s, GenConfig::default(), seed).judgment();
        let text = print_core_term(&j.subject);
        let delta = j.delta.as_ref().map(|(x, t)| (x, t));
        let (back, ty) = elaborate_term(&s, &j.gamma, delta, &parse_term(&text).unwrap()).unwrap();
        prop_assert!(alpha_eq_term(&j.subject, &back), "{} printed as {text}", j.subject);
        prop_assert!(alpha_eq_type(&ty, &typecheck(&s, &j).unwrap()));
    }

    #[test]
    fn generated_judgments_have_unique_types(seed in any::<u64>()) {
        let s = sig();
        let mut g = Generator::new(&s, GenConfig::default(), seed);
        let corpus: Vec<_> = (0..8).map(|_| g.judgment()).collect();
        let rep = check_unicity(&s, &corpus);
        prop_assert!(rep.ok(), "{:?}", rep.failures);
    }

    #[test]
    fn classification_is_stable_under_substitution(seed in any::<u64>()) {
        let s = sig();
        let mut g = Generator::new(&s, GenConfig::default(), seed);
        let body = g.random_type(2, false);
        let comp = g.random_type(2, true);
        let val = g.random_type(2, false);
        let kind = classify_type(&body).unwrap();
        // computation variables may only receive computation types
        let by_comp = subst_type(&body, &TyVar::c("A"), &comp).unwrap();
        prop_assert_eq!(classify_type(&by_comp).unwrap(), kind);
        // a value variable may become a computation type, never the reverse
        let by_val = classify_type(&subst_type(&body, &TyVar::v("X"), &val).unwrap()).unwrap();
        if kind == Kind::Computation {
            prop_assert_eq!(by_val, Kind::Computation);
        }
        prop_assert!(subst_type(&body, &TyVar::c("A"), &Type::vvar("X")).is_err() || !body.has_free(&TyVar::c("A")));
    }

    #[test]
    fn naive_and_propagating_enumeration_agree(
        k in any::<u8>(),
        comp in any::<bool>(),
        args in proptest::collection::vec(any::<bool>(), 0..=2),
    ) {
        let (x, arg) = if comp { ("^X", "(^X -> ^X)") } else { ("X", "(X -> X)") };
        let mut body = x.to_string();
        for &fun in args.iter().rev() {
            body = format!("{} -> {body}", if fun { arg } else { x });
        }
        let q = if comp { "forall ^X." } else { "forall X." };
        let t = elaborate_type(&parse_type(&format!("{q} {body}")).unwrap()).unwrap();
        let members = |how| {
            let mut m = Model::new(spec_of(k), 2);
            m.enumeration = how;
            m.dom(&Default::default(), &t).and_then(|d| d.members().map(|m| m.to_vec()))
        };
        match (members(Enumeration::Naive), members(Enumeration::Propagate)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            // too large for the naive tier
            (Err(_), _) => {}
            (Ok(_), Err(e)) => prop_assert!(false, "propagation failed: {e:?}"),
        }
    }

    #[test]
    fn extension_satisfies_the_unit_laws(k in any::<u8>(), n in 0u32..3, m in 0u32..3, f_seed in any::<u64>()) {
        let spec = spec_of(k);
        let tm = spec.t_size(m) as u32;
        prop_assume!(tm > 0 || n == 0);
        let f: Vec<u32> = (0..n).map(|i| ((f_seed >> (8 * i)) % tm.max(1) as u64) as u32).collect();
        // f^# . eta = f
        let ext = spec.extend(n, m, &f);
        let unit = spec.unit(n);
        let back: Vec<u32> = unit.iter().map(|&u| ext[u as usize]).collect();
        prop_assert_eq!(back, f);
        // eta^# = id
        let id = spec.extend(m, m, &spec.unit(m));
        prop_assert_eq!(id, (0..tm).collect::<Vec<_>>());
    }
}

proptest! {
    #![proptest_config(Config { cases: 8, ..Config::default() })]

    #[test]
    fn verifiers_are_deterministic(seed in any::<u64>()) {
        let cfg = ModelConfig { monad: MonadKind::Exception, exceptions: vec!["e".into()], bound: 2, include_free_algebras: false };
        prop_assert_eq!(stable(verify_metatheory(&cfg, seed, 20)), stable(verify_metatheory(&cfg, seed, 20)));
        prop_assert_eq!(stable(verify_abstraction(&cfg, seed, 5)), stable(verify_abstraction(&cfg, seed, 5)));
    }

    #[test]
    fn free_algebra_witnesses_replay(k in 1u8..3, n in 0u32..3, pick in any::<usize>(), eta_seed in any::<u64>()) {
        let spec = spec_of(k);
        let cfg = ModelConfig {
            monad: spec.kind,
            exceptions: spec.exceptions.clone(),
            bound: 2,
            include_free_algebras: false,
        };
        let cands = finmodel::enumerate_algebras(&spec, 2);
        let cand = &cands[pick % cands.len()];
        prop_assume!(cand.carrier > 0 || n == 0);
        let eta: Vec<u32> = (0..n).map(|i| ((eta_seed >> (8 * i)) % cand.carrier.max(1) as u64) as u32).collect();
        let rep = verify_free_algebra_candidate(&cfg, n, cand, &eta);
        if rep.status == Status::Counterexample {
            let w = &rep.witness.as_ref().unwrap()["failure"];
            let model = Model::from_config(&cfg);
            let b = model.algs.iter().find(|b| model.alg_label(b) == w["algebra"].as_str().unwrap()).unwrap();
            let bt = b.as_alg().unwrap().table().unwrap();
            let f: Vec<u32> = serde_json::from_value(w["f"].clone()).unwrap();
            let ext = finmodel::homomorphisms(cand, &bt)
                .into_iter()
                .filter(|h| (0..n as usize).all(|a| h[eta[a] as usize] == f[a]))
                .count();
            prop_assert_ne!(ext, 1);
        } else {
            prop_assert_eq!(rep.status, Status::Verified);
            // a free algebra on n elements has |T n| elements
            prop_assert_eq!(cand.carrier as u64, spec.t_size(n));
        }
    }
}

use std::path::PathBuf;

use pe_cli::{run, EXIT_FAILED, EXIT_OK, EXIT_OUT_OF_BOUND, EXIT_USAGE};

fn corpus(rel: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(rel).display().to_string()
}

fn pe(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("pe").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn check_accepts_the_positive_corpus() {
    let (code, out, _) = pe(&["check", &corpus("typing/core.pe")]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("stoup_axiom : ^A"));
    let (code, _, _) = pe(&["--monad", "powerset", "check", &corpus("typing/powerset.pe")]);
    assert_eq!(code, EXIT_OK);
}

#[test]
fn check_reports_type_errors_with_exit_1() {
    let (code, out, _) = pe(&["--format", "json", "check", &corpus("typing/negative.pe")]);
    assert_eq!(code, EXIT_FAILED);
    let first: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(first["status"], "error");
    assert_eq!(first["diagnostic"]["code"], "StoupViolation");
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(pe(&["verify", "no-such-suite"]).0, EXIT_USAGE);
    assert_eq!(pe(&["--monad", "identity", "--exceptions", "e", "verify", "cbpv"]).0, EXIT_USAGE);
    assert_eq!(pe(&["--exceptions", "a,a", "verify", "cbpv"]).0, EXIT_USAGE);
    assert_eq!(pe(&["eval"]).0, EXIT_USAGE);
    assert_eq!(pe(&["check", "/nonexistent.pe"]).0, EXIT_USAGE);
    assert_eq!(pe(&["frobnicate"]).0, EXIT_USAGE);
}

#[test]
fn missing_free_algebra_is_out_of_bound() {
    let (code, out, _) = pe(&["verify", "bang-cardinality", "--sizes", "2"]);
    assert_eq!(code, EXIT_OUT_OF_BOUND, "{out}");
    let (code, _, _) = pe(&["--include-free-algebras", "verify", "bang-cardinality", "--sizes", "0,1,2"]);
    assert_eq!(code, EXIT_OK);
}

#[test]
fn json_reports_are_byte_stable_for_a_seed() {
    let args = ["--format", "json", "--seed", "11", "verify", "abstraction", "--terms", "10", "--omit-runtime"];
    let (code, a, _) = pe(&args);
    assert_eq!(code, EXIT_OK, "{a}");
    let (_, b, _) = pe(&args);
    assert_eq!(a, b);
    let report: serde_json::Value = serde_json::from_str(a.trim()).unwrap();
    assert_eq!(report["theorem-id"], "abstraction");
    assert_eq!(report["status"], "verified");
    assert_eq!(report["runtime-ms"], 0);
}

#[test]
fn eval_runs_the_handler_program() {
    let file = corpus("programs/exceptions.pe");
    let value = |def: &str| {
        let (code, out, err) = pe(&["--format", "json", "--include-free-algebras", "eval", &file, "--def", def]);
        assert_eq!(code, EXIT_OK, "{err}");
        serde_json::from_str::<serde_json::Value>(out.trim()).unwrap()["value"].clone()
    };
    assert_eq!(value("recover"), value("ret"));
    assert_eq!(value("passed"), value("ret"));
    assert_eq!(value("reraised"), value("fail"));
    assert_ne!(value("ret"), value("fail"));
}

#[test]
fn eval_of_choice_joins_the_branches() {
    let file = corpus("programs/choice.pe");
    let (code, out, err) = pe(&["--monad", "powerset", "--include-free-algebras", "eval", &file]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(out.lines().any(|l| l.starts_with("either : !")), "{out}");
}

#[test]
fn elaborate_prints_kernel_terms() {
    let (code, out, _) = pe(&["elaborate", "--term", "bang (Fun X => fun x:X => x)"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("Fun ^"), "{out}");
}

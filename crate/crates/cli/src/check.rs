//! Checking `.pe` files: parse, elaborate and typecheck every declaration.
//!
//! Definitions are checked in order and later declarations see earlier ones
//! as ordinary context variables.

use std::fmt;

use pe_core::encodings::{elaborate_term, elaborate_type, SpannedEncodingError};
use pe_core::kernel::{Judgment, Name, Term, Type};
use pe_core::surface::{parse_file, Decl, ParseError, SType, SourceSpan};
use pe_core::typecheck::{check_context, typecheck, Signature, TypeError};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub span: SourceSpan,
    pub code: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: error[{}]: {}", self.span, self.code, self.message)
    }
}

impl From<ParseError> for Diagnostic {
    fn from(e: ParseError) -> Self {
        let message = format!("expected {}, found {}", e.expected.join(" or "), e.found);
        Diagnostic { span: e.span, code: "SyntaxError".into(), message }
    }
}

fn type_diag(e: TypeError, fallback: &SourceSpan) -> Diagnostic {
    let span = if e.span == SourceSpan::default() { fallback.clone() } else { e.span };
    Diagnostic { span, code: format!("{:?}", e.code), message: e.detail }
}

fn encoding_diag(e: SpannedEncodingError) -> Diagnostic {
    use pe_core::encodings::EncodingError as E;
    let code = match &e.error {
        E::Positivity { .. } => "PositivityViolation",
        E::NotComputation { .. } | E::Kind(_) => "KindMismatch",
        E::BadBinder(_) => "BadBinder",
    };
    Diagnostic { span: e.span, code: code.into(), message: e.error.to_string() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DeclKind {
    Def,
    Judge,
}

/// A declaration after elaboration into the kernel.
#[derive(Clone, Debug)]
pub struct Elaborated {
    pub gamma: Vec<(Name, Type)>,
    pub delta: Option<(Name, Type)>,
    pub term: Term,
    pub ty: Type,
}

#[derive(Clone, Debug)]
pub struct Checked {
    pub name: Name,
    pub kind: DeclKind,
    pub span: SourceSpan,
    pub result: Result<Elaborated, Diagnostic>,
}

impl Checked {
    pub fn ok(&self) -> bool {
        self.result.is_ok()
    }
}

fn elab_ty(t: &SType) -> Result<Type, Diagnostic> {
    elaborate_type(t).map_err(encoding_diag)
}

/// Check every declaration of a file. A syntax error stops the whole file.
pub fn check_source(sig: &Signature, file: &str, text: &str) -> Result<Vec<Checked>, Diagnostic> {
    let decls = parse_file(file, text)?;
    let mut globals: Vec<(Name, Type)> = Vec::new();
    let mut out = Vec::new();
    for d in &decls {
        let (kind, result) = match d {
            Decl::Def { ty, body, span, .. } => (DeclKind::Def, check_decl(sig, &globals, &[], None, body, ty.as_ref(), span)),
            Decl::Judge { gamma, delta, subject, ty, span, .. } => {
                (DeclKind::Judge, check_decl(sig, &globals, gamma, delta.as_ref(), subject, ty.as_ref(), span))
            }
        };
        if let (DeclKind::Def, Ok(e)) = (kind, &result) {
            globals.push((d.name().clone(), e.ty.clone()));
        }
        out.push(Checked { name: d.name().clone(), kind, span: d.span().clone(), result });
    }
    Ok(out)
}

fn check_decl(
    sig: &Signature,
    globals: &[(Name, Type)],
    gamma: &[(Name, SType)],
    delta: Option<&(Name, SType)>,
    subject: &pe_core::surface::STerm,
    asc: Option<&SType>,
    span: &SourceSpan,
) -> Result<Elaborated, Diagnostic> {
    let mut ctx = globals.to_vec();
    for (x, t) in gamma {
        ctx.push((x.clone(), elab_ty(t)?));
    }
    let delta = match delta {
        Some((x, t)) => Some((x.clone(), elab_ty(t)?)),
        None => None,
    };
    let ascription = asc.map(elab_ty).transpose()?;
    let stoup = delta.as_ref().map(|(x, t)| (x, t));
    check_context(&ctx, stoup).map_err(|e| type_diag(e, span))?;
    let (term, _) = elaborate_term(sig, &ctx, stoup, subject).map_err(|e| type_diag(e, span))?;
    let j = Judgment { gamma: ctx.clone(), delta: delta.clone(), subject: term.clone(), ascription };
    let ty = typecheck(sig, &j).map_err(|e| type_diag(e, span))?;
    Ok(Elaborated { gamma: ctx, delta, term, ty })
}

/// `-- expect: Code` comments, in order of appearance.
pub fn expectations(text: &str) -> Vec<String> {
    text.lines()
        .filter_map(|l| l.trim().strip_prefix("--").map(str::trim))
        .filter_map(|l| l.strip_prefix("expect:").map(|c| c.trim().to_string()))
        .collect()
}

/// The `-- monad: name` directive of a file, if any.
pub fn monad_directive(text: &str) -> Option<String> {
    text.lines()
        .filter_map(|l| l.trim().strip_prefix("--").map(str::trim))
        .find_map(|l| l.strip_prefix("monad:").map(|m| m.trim().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pe_core::encodings::{register_effect_constants, signature_of};
    use pe_core::finmodel::MonadSpec;

    fn sig() -> Signature {
        signature_of(&register_effect_constants(&MonadSpec::exception(&["e"])))
    }

    #[test]
    fn definitions_are_in_scope_later() {
        let src = "def id : forall X. X -> X = Fun X => fun x:X => x;\n\
                   judge use : a : Y | |- id @[Y] a : Y;";
        let out = check_source(&sig(), "t.pe", src).unwrap();
        assert!(out.iter().all(Checked::ok), "{out:?}");
    }

    #[test]
    fn stoup_misuse_is_reported_with_its_code() {
        let src = "judge twice : f : ^A -> ^A -o ^B | x : ^A |- f x x;";
        let out = check_source(&sig(), "t.pe", src).unwrap();
        let d = out[0].result.as_ref().unwrap_err();
        assert_eq!(d.code, "StoupViolation");
        assert_eq!(d.span.file.as_ref(), "t.pe");
    }

    #[test]
    fn syntax_errors_stop_the_file() {
        let d = check_source(&sig(), "t.pe", "judge x : | |- fun x => x;").unwrap_err();
        assert_eq!(d.code, "SyntaxError");
    }

    #[test]
    fn directives() {
        let src = "-- monad: powerset\n-- expect: StoupViolation\njudge a : | |- x;\n  -- expect: UnboundVar\n";
        assert_eq!(monad_directive(src).as_deref(), Some("powerset"));
        assert_eq!(expectations(src), vec!["StoupViolation", "UnboundVar"]);
    }
}

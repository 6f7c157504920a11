//! The `pe` command-line driver.
//!
//! Exit codes: 0 when everything checks or verifies, 1 for a type error or a
//! counterexample, 2 for usage and configuration errors, 3 when a verifier
//! or evaluation exceeds the bound.

pub mod check;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use pe_core::encodings::{elaborate_term, elaborate_type};
use pe_core::finmodel::ModelConfig;
use pe_core::interp::{Model, SemError};
use pe_core::kernel::{Name, Term, Type};
use pe_core::paramlab::{run_suite, Params, Status, VerificationReport};
use pe_core::surface::{parse_term, parse_type, print_core_term, print_core_type};
use serde_json::json;

use check::{check_source, Checked, DeclKind, Diagnostic};
use config::{Format, ModelArgs};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_OUT_OF_BOUND: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pe", version, about = "Typecheck, evaluate and verify programs of the pe calculus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,
    /// Seed for randomized corpora
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and typecheck every declaration of the given files
    Check {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Print declarations, terms or types with all sugar expanded
    Elaborate {
        files: Vec<PathBuf>,
        #[arg(long)]
        term: Option<String>,
        #[arg(long = "type")]
        ty: Option<String>,
    },
    /// Evaluate closed definitions or a term in the configured model
    Eval {
        file: Option<PathBuf>,
        #[arg(long)]
        term: Option<String>,
        /// Only this definition of the file
        #[arg(long = "def")]
        def: Option<String>,
    },
    /// Run a verification suite, or `all`
    Verify {
        suite: String,
        /// Arity for algop
        #[arg(long = "n")]
        n: Option<u32>,
        /// Set sizes for bang-cardinality
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<u32>>,
        /// Number of generated judgments for randomized suites
        #[arg(long, default_value_t = 100)]
        terms: usize,
        /// Report runtime-ms as 0 so that output is byte-stable
        #[arg(long)]
        omit_runtime: bool,
    },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    format: Format,
}

impl Io<'_> {
    fn line(&mut self, s: impl AsRef<str>) {
        let _ = writeln!(self.out, "{}", s.as_ref());
    }

    fn json(&mut self, v: serde_json::Value) {
        let _ = writeln!(self.out, "{v}");
    }

    fn usage(&mut self, msg: impl AsRef<str>) -> i32 {
        let _ = writeln!(self.err, "pe: {}", msg.as_ref());
        EXIT_USAGE
    }

    fn diag(&mut self, d: &Diagnostic) {
        match self.format {
            Format::Text => self.line(d.to_string()),
            Format::Json => self.json(json!({ "status": "error", "diagnostic": d })),
        }
    }
}

/// Run the driver on command-line arguments (program name first).
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let mut io = Io { out, err, format: cli.format };
    let cfg = match cli.model.resolve() {
        Ok(c) => c,
        Err(m) => return io.usage(m),
    };
    match cli.command {
        Command::Check { files } => cmd_check(&mut io, &cfg, &files),
        Command::Elaborate { files, term, ty } => cmd_elaborate(&mut io, &cfg, &files, term, ty),
        Command::Eval { file, term, def } => cmd_eval(&mut io, &cfg, file, term, def),
        Command::Verify { suite, n, sizes, terms, omit_runtime } => {
            let p = Params { arity: n, sizes, seed: cli.seed, terms };
            cmd_verify(&mut io, &cfg, &suite, &p, omit_runtime)
        }
    }
}

fn read(io: &mut Io, path: &PathBuf) -> Result<String, i32> {
    std::fs::read_to_string(path).map_err(|e| io.usage(format!("cannot read {}: {e}", path.display())))
}

fn load(io: &mut Io, model: &Model, path: &PathBuf) -> Result<Result<Vec<Checked>, Diagnostic>, i32> {
    let text = read(io, path)?;
    Ok(check_source(&model.sig, &path.display().to_string(), &text))
}

fn cmd_check(io: &mut Io, cfg: &ModelConfig, files: &[PathBuf]) -> i32 {
    let model = Model::new(cfg.spec(), 0);
    let mut failed = false;
    for f in files {
        let decls = match load(io, &model, f) {
            Ok(Ok(d)) => d,
            Ok(Err(d)) => {
                io.diag(&d);
                failed = true;
                continue;
            }
            Err(code) => return code,
        };
        for d in &decls {
            match (&d.result, io.format) {
                (Ok(e), Format::Text) => io.line(format!("{}: {} : {}", d.span, d.name, e.ty)),
                (Ok(e), Format::Json) => io.json(json!({
                    "status": "ok", "name": d.name.as_ref(), "kind": d.kind, "span": d.span, "type": e.ty.to_string(),
                })),
                (Err(diag), Format::Text) => io.line(format!("{}: {}: error[{}]: {}", diag.span, d.name, diag.code, diag.message)),
                (Err(diag), Format::Json) => io.json(json!({ "status": "error", "name": d.name.as_ref(), "kind": d.kind, "diagnostic": diag })),
            }
            failed |= !d.ok();
        }
    }
    if failed {
        EXIT_FAILED
    } else {
        EXIT_OK
    }
}

fn cmd_elaborate(io: &mut Io, cfg: &ModelConfig, files: &[PathBuf], term: Option<String>, ty: Option<String>) -> i32 {
    if files.is_empty() && term.is_none() && ty.is_none() {
        return io.usage("elaborate needs files, --term or --type");
    }
    let model = Model::new(cfg.spec(), 0);
    let mut failed = false;
    let mut globals: Vec<(Name, Type)> = Vec::new();
    for f in files {
        let decls = match load(io, &model, f) {
            Ok(Ok(d)) => d,
            Ok(Err(d)) => {
                io.diag(&d);
                failed = true;
                continue;
            }
            Err(code) => return code,
        };
        for d in &decls {
            match &d.result {
                Ok(e) => {
                    if d.kind == DeclKind::Def {
                        globals.push((d.name.clone(), e.ty.clone()));
                    }
                    let (t, ty) = (print_core_term(&e.term), print_core_type(&e.ty));
                    match io.format {
                        Format::Text => io.line(format!("{} {} : {} = {}", kind_word(d.kind), d.name, ty, t)),
                        Format::Json => io.json(json!({ "name": d.name.as_ref(), "kind": d.kind, "type": ty, "term": t })),
                    }
                }
                Err(diag) => {
                    io.diag(diag);
                    failed = true;
                }
            }
        }
    }
    if let Some(text) = ty {
        match parse_type(&text).map_err(Diagnostic::from).and_then(|s| {
            elaborate_type(&s).map_err(|e| Diagnostic { span: e.span, code: "KindMismatch".into(), message: e.error.to_string() })
        }) {
            Ok(t) => match io.format {
                Format::Text => io.line(print_core_type(&t)),
                Format::Json => io.json(json!({ "type": print_core_type(&t) })),
            },
            Err(d) => {
                io.diag(&d);
                failed = true;
            }
        }
    }
    if let Some(text) = term {
        match elab_term(&model, &globals, &text) {
            Ok((t, ty)) => match io.format {
                Format::Text => io.line(format!("{} : {}", print_core_term(&t), print_core_type(&ty))),
                Format::Json => io.json(json!({ "term": print_core_term(&t), "type": print_core_type(&ty) })),
            },
            Err(d) => {
                io.diag(&d);
                failed = true;
            }
        }
    }
    if failed {
        EXIT_FAILED
    } else {
        EXIT_OK
    }
}

fn kind_word(k: DeclKind) -> &'static str {
    match k {
        DeclKind::Def => "def",
        DeclKind::Judge => "judge",
    }
}

fn elab_term(model: &Model, globals: &[(Name, Type)], text: &str) -> Result<(Term, Type), Diagnostic> {
    let s = parse_term(text)?;
    let span = s.span.clone();
    elaborate_term(&model.sig, &globals.to_vec(), None, &s).map_err(|e| Diagnostic {
        span: if e.span == Default::default() { span } else { e.span },
        code: format!("{:?}", e.code),
        message: e.detail,
    })
}

fn sem_exit(io: &mut Io, what: &str, e: SemError) -> i32 {
    let code = if matches!(e, SemError::OutOfBound(_)) { EXIT_OUT_OF_BOUND } else { EXIT_FAILED };
    match io.format {
        Format::Text => io.line(format!("{what}: {e}")),
        Format::Json => io.json(json!({ "status": if code == EXIT_OUT_OF_BOUND { "out-of-bound" } else { "error" }, "name": what, "error": e })),
    }
    code
}

fn cmd_eval(io: &mut Io, cfg: &ModelConfig, file: Option<PathBuf>, term: Option<String>, def: Option<String>) -> i32 {
    if file.is_none() && term.is_none() {
        return io.usage("eval needs a file or --term");
    }
    if def.is_some() && term.is_some() {
        return io.usage("--def and --term are exclusive");
    }
    let model = Model::from_config(cfg);
    let mut tenv: Vec<(Name, Type, u64)> = Vec::new();
    let mut globals: Vec<(Name, Type)> = Vec::new();
    let mut shown = Vec::new();
    if let Some(f) = &file {
        let decls = match load(io, &model, f) {
            Ok(Ok(d)) => d,
            Ok(Err(d)) => {
                io.diag(&d);
                return EXIT_FAILED;
            }
            Err(code) => return code,
        };
        for d in decls.iter().filter(|d| d.kind == DeclKind::Def) {
            let e = match &d.result {
                Ok(e) => e,
                Err(diag) => {
                    io.diag(diag);
                    return EXIT_FAILED;
                }
            };
            if !e.ty.ftv().is_empty() {
                return sem_exit(io, &d.name, SemError::IllFormed(format!("type {} is not closed", e.ty)));
            }
            let v = match model.eval(&pe_core::interp::Env::new(), &tenv, &e.term) {
                Ok((v, _)) => v,
                Err(err) => return sem_exit(io, &d.name, err),
            };
            tenv.push((d.name.clone(), e.ty.clone(), v));
            globals.push((d.name.clone(), e.ty.clone()));
            if def.as_deref().is_none_or(|n| n == d.name.as_ref()) && term.is_none() {
                shown.push((d.name.to_string(), e.ty.clone(), v));
            }
        }
        if let Some(n) = &def {
            if shown.is_empty() {
                return io.usage(format!("no definition named {n}"));
            }
        }
    }
    if let Some(text) = &term {
        let (t, ty) = match elab_term(&model, &globals, text) {
            Ok(x) => x,
            Err(d) => {
                io.diag(&d);
                return EXIT_FAILED;
            }
        };
        if !ty.ftv().is_empty() {
            return sem_exit(io, "term", SemError::IllFormed(format!("type {ty} is not closed")));
        }
        match model.eval(&pe_core::interp::Env::new(), &tenv, &t) {
            Ok((v, _)) => shown.push(("term".to_string(), ty, v)),
            Err(e) => return sem_exit(io, "term", e),
        }
    }
    for (n, ty, v) in shown {
        let value = match model.dom(&pe_core::interp::Env::new(), &ty).and_then(|d| model.sem_value(&d, v)) {
            Ok(x) => x,
            Err(e) => return sem_exit(io, &n, e),
        };
        match io.format {
            Format::Text => io.line(format!("{n} : {ty} = {value}")),
            Format::Json => io.json(json!({ "name": n, "type": ty.to_string(), "value": value })),
        }
    }
    EXIT_OK
}

fn cmd_verify(io: &mut Io, cfg: &ModelConfig, suite: &str, p: &Params, omit_runtime: bool) -> i32 {
    let reports: Vec<VerificationReport> = match run_suite(suite, cfg, p) {
        Ok(r) => r,
        Err(e) => return io.usage(e.to_string()),
    };
    let mut code = EXIT_OK;
    for mut r in reports {
        if omit_runtime {
            r.runtime_ms = 0;
        }
        match io.format {
            Format::Text => io.line(r.summary()),
            Format::Json => io.json(serde_json::to_value(&r).expect("reports serialize")),
        }
        code = match (code, r.status) {
            (_, Status::Counterexample) | (EXIT_FAILED, _) => EXIT_FAILED,
            (_, Status::OutOfBound) | (EXIT_OUT_OF_BOUND, _) => EXIT_OUT_OF_BOUND,
            _ => code,
        };
    }
    code
}

//! Concrete syntax: lexer, recursive-descent parser and pretty-printer.
//!
//! Types, lowest to highest precedence: binders (`forall`, `exists`, `mu`,
//! `nu`, `existso`, `muo`, `nuo`) extend maximally to the right; `->` and
//! `-o` are right-associative at one level; `+` and `(+)`; `*` and `*o`;
//! the copower `B . A`; prefix `!`.
//!
//! Terms: binders (`fun`, `lfun`, `Fun`, `let`, `case`, `caseo`) extend to the
//! right; application and `t @[T]` associate to the left; `bang`, `fst`,
//! `snd`, `inl[T]`, `inr[T]`, `inlo[T]`, `inro[T]` are prefix forms taking one
//! atomic argument.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::kernel::{name, Name, Type};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Default)]
pub struct SourceSpan {
    pub file: Arc<str>,
    pub start: (u32, u32),
    pub end: (u32, u32),
}

impl SourceSpan {
    pub fn join(&self, other: &SourceSpan) -> SourceSpan {
        SourceSpan { file: self.file.clone(), start: self.start, end: other.end }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}-{}:{}", self.file, self.start.0, self.start.1, self.end.0, self.end.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Binder {
    Forall,
    Exists,
    Mu,
    Nu,
    ExistsO,
    MuO,
    NuO,
}

impl Binder {
    fn keyword(self) -> &'static str {
        match self {
            Binder::Forall => "forall",
            Binder::Exists => "exists",
            Binder::Mu => "mu",
            Binder::Nu => "nu",
            Binder::ExistsO => "existso",
            Binder::MuO => "muo",
            Binder::NuO => "nuo",
        }
    }

    fn from_keyword(s: &str) -> Option<Binder> {
        Some(match s {
            "forall" => Binder::Forall,
            "exists" => Binder::Exists,
            "mu" => Binder::Mu,
            "nu" => Binder::Nu,
            "existso" => Binder::ExistsO,
            "muo" => Binder::MuO,
            "nuo" => Binder::NuO,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Arrow,
    Lolli,
    Prod,
    Sum,
    ProdC,
    Oplus,
    Copower,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Arrow => "->",
            BinOp::Lolli => "-o",
            BinOp::Prod => "*",
            BinOp::Sum => "+",
            BinOp::ProdC => "*o",
            BinOp::Oplus => "(+)",
            BinOp::Copower => ".",
        }
    }

    fn level(self) -> u8 {
        match self {
            BinOp::Arrow | BinOp::Lolli => 1,
            BinOp::Sum | BinOp::Oplus => 2,
            BinOp::Prod | BinOp::ProdC => 3,
            BinOp::Copower => 4,
        }
    }

    fn right_assoc(self) -> bool {
        matches!(self, BinOp::Arrow | BinOp::Lolli | BinOp::Copower)
    }
}

/// Surface type syntax, sugar included.
#[derive(Clone, Debug, PartialEq)]
pub enum STypeKind {
    VVar(Name),
    CVar(Name),
    /// `1`, `0`, or an n-fold sum of units for n >= 2.
    Num(u32),
    UnitC,
    ZeroC,
    Bin(BinOp, Box<SType>, Box<SType>),
    Bind(Binder, bool, Name, Box<SType>),
    Bang(Box<SType>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SType {
    pub kind: STypeKind,
    pub span: SourceSpan,
}

impl SType {
    pub fn new(kind: STypeKind) -> Self {
        SType { kind, span: SourceSpan::default() }
    }
}

/// Surface term syntax, sugar included.
#[derive(Clone, Debug, PartialEq)]
pub enum STermKind {
    Var(Name),
    Const(Name),
    Lam(Name, SType, Box<STerm>),
    LinLam(Name, SType, Box<STerm>),
    App(Box<STerm>, Box<STerm>),
    TyLam(bool, Name, Box<STerm>),
    TyApp(Box<STerm>, SType),
    Bang(Box<STerm>),
    Let(Name, Box<STerm>, Box<STerm>),
    Pair(Box<STerm>, Box<STerm>),
    Fst(Box<STerm>),
    Snd(Box<STerm>),
    /// `inl[B] t`, `inr[A] t`; the flag is true for the right injection.
    Inj(bool, SType, Box<STerm>),
    Case(Box<STerm>, Name, Box<STerm>, Name, Box<STerm>),
    /// `inlo[B] t`, `inro[A] t`.
    InjC(bool, SType, Box<STerm>),
    CaseC(Box<STerm>, Name, Box<STerm>, Name, Box<STerm>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct STerm {
    pub kind: STermKind,
    pub span: SourceSpan,
}

impl STerm {
    pub fn new(kind: STermKind) -> Self {
        STerm { kind, span: SourceSpan::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Decl {
    /// `def name [: T] = t;`
    Def { name: Name, ty: Option<SType>, body: STerm, span: SourceSpan },
    /// `judge name : x:A, y:B | z:^C |- t [: T];`
    Judge {
        name: Name,
        gamma: Vec<(Name, SType)>,
        delta: Option<(Name, SType)>,
        subject: STerm,
        ty: Option<SType>,
        span: SourceSpan,
    },
}

impl Decl {
    pub fn name(&self) -> &Name {
        match self {
            Decl::Def { name, .. } | Decl::Judge { name, .. } => name,
        }
    }

    pub fn span(&self) -> &SourceSpan {
        match self {
            Decl::Def { span, .. } | Decl::Judge { span, .. } => span,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
#[error("{span}: syntax error: expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: Vec<String>,
    pub found: String,
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    CIdent(String),
    Num(u32),
    NumO(u32),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::CIdent(s) => write!(f, "`^{s}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::NumO(n) => write!(f, "`{n}o`"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    start: (u32, u32),
    end: (u32, u32),
}

const KEYWORDS: &[&str] = &[
    "forall", "exists", "mu", "nu", "existso", "muo", "nuo", "fun", "lfun", "Fun", "bang", "let", "in", "case",
    "caseo", "of", "inl", "inr", "inlo", "inro", "fst", "snd", "def", "judge", "or", "raise", "handle",
];

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn lex(file: &Arc<str>, text: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let peek = |j: usize| chars.get(j).copied();
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && peek(i + 1) == Some('-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        let mut len = 1;
        let not_ident_at = |j: usize| !peek(j).is_some_and(is_ident_char);
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            len = j - i;
            Tok::Ident(chars[i..j].iter().collect())
        } else if c == '^' && peek(i + 1).is_some_and(|d| d.is_ascii_alphabetic() || d == '_') {
            let mut j = i + 1;
            while j < chars.len() && is_ident_char(chars[j]) {
                j += 1;
            }
            len = j - i;
            Tok::CIdent(chars[i + 1..j].iter().collect())
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let digits: String = chars[i..j].iter().collect();
            let n: u32 = digits.parse().map_err(|_| ParseError {
                span: SourceSpan { file: file.clone(), start, end: start },
                expected: vec!["a small numeral".into()],
                found: digits.clone(),
            })?;
            if peek(j) == Some('o') && not_ident_at(j + 1) {
                len = j + 1 - i;
                Tok::NumO(n)
            } else {
                len = j - i;
                Tok::Num(n)
            }
        } else {
            let two: String = chars[i..(i + 2).min(chars.len())].iter().collect();
            let three: String = chars[i..(i + 3).min(chars.len())].iter().collect();
            if three == "(+)" {
                len = 3;
                Tok::Sym("(+)")
            } else if two == "-o" && not_ident_at(i + 2) {
                len = 2;
                Tok::Sym("-o")
            } else if two == "*o" && not_ident_at(i + 2) {
                len = 2;
                Tok::Sym("*o")
            } else if let Some(s) = ["->", "=>", "<=", "|-"].iter().find(|s| **s == two) {
                len = 2;
                Tok::Sym(s)
            } else if let Some(s) = ["(", ")", "[", "]", ":", ".", "@", "*", "+", "!", ",", "|", ";", "="]
                .iter()
                .find(|s| s.starts_with(c))
            {
                Tok::Sym(s)
            } else {
                return Err(ParseError {
                    span: SourceSpan { file: file.clone(), start, end: start },
                    expected: vec!["a token".into()],
                    found: format!("`{c}`"),
                });
            }
        };
        i += len;
        col += len as u32;
        toks.push(Token { tok, start, end: (line, col) });
    }
    toks.push(Token { tok: Tok::Eof, start: (line, col), end: (line, col) });
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    file: Arc<str>,
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(file: &str, text: &str) -> PResult<Self> {
        let file: Arc<str> = Arc::from(file);
        let toks = lex(&file, text)?;
        Ok(Parser { file, toks, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> SourceSpan {
        let t = &self.toks[self.pos];
        SourceSpan { file: self.file.clone(), start: t.start, end: t.end }
    }

    fn span_from(&self, start: (u32, u32)) -> SourceSpan {
        let end = if self.pos == 0 { start } else { self.toks[self.pos - 1].end };
        SourceSpan { file: self.file.clone(), start, end }
    }

    fn start(&self) -> (u32, u32) {
        self.toks[self.pos].start
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError {
            span: self.here(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn expect_kw(&mut self, s: &str) -> PResult<()> {
        if self.is_kw(s) {
            self.bump();
            Ok(())
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(name(&s))
            }
            _ => self.error(&["an identifier"]),
        }
    }

    /// A type variable binder: `X` (false) or `^X` (true).
    fn ty_binder(&mut self) -> PResult<(bool, Name)> {
        match self.peek().clone() {
            Tok::CIdent(s) => {
                self.bump();
                Ok((true, name(&s)))
            }
            Tok::Ident(_) => Ok((false, self.ident()?)),
            _ => self.error(&["a type variable"]),
        }
    }

    fn eof(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.error(&["end of input"])
        }
    }

    // -- types --

    fn ty(&mut self) -> PResult<SType> {
        self.ty_arrow()
    }

    fn binary(&mut self, op: BinOp, lhs: SType, rhs: SType) -> SType {
        let span = lhs.span.join(&rhs.span);
        SType { kind: STypeKind::Bin(op, Box::new(lhs), Box::new(rhs)), span }
    }

    fn ty_arrow(&mut self) -> PResult<SType> {
        let lhs = self.ty_sum()?;
        let op = if self.eat_sym("->") {
            BinOp::Arrow
        } else if self.eat_sym("-o") {
            BinOp::Lolli
        } else {
            return Ok(lhs);
        };
        let rhs = self.ty_arrow()?;
        Ok(self.binary(op, lhs, rhs))
    }

    fn ty_sum(&mut self) -> PResult<SType> {
        let mut lhs = self.ty_prod()?;
        loop {
            let op = if self.eat_sym("+") {
                BinOp::Sum
            } else if self.eat_sym("(+)") {
                BinOp::Oplus
            } else {
                return Ok(lhs);
            };
            let rhs = self.ty_prod()?;
            lhs = self.binary(op, lhs, rhs);
        }
    }

    fn ty_prod(&mut self) -> PResult<SType> {
        let mut lhs = self.ty_copower()?;
        loop {
            let op = if self.eat_sym("*") {
                BinOp::Prod
            } else if self.eat_sym("*o") {
                BinOp::ProdC
            } else {
                return Ok(lhs);
            };
            let rhs = self.ty_copower()?;
            lhs = self.binary(op, lhs, rhs);
        }
    }

    fn ty_copower(&mut self) -> PResult<SType> {
        let lhs = self.ty_prefix()?;
        if self.eat_sym(".") {
            let rhs = self.ty_copower()?;
            return Ok(self.binary(BinOp::Copower, lhs, rhs));
        }
        Ok(lhs)
    }

    fn ty_prefix(&mut self) -> PResult<SType> {
        let start = self.start();
        if self.eat_sym("!") {
            let inner = self.ty_prefix()?;
            return Ok(SType { kind: STypeKind::Bang(Box::new(inner)), span: self.span_from(start) });
        }
        self.ty_atom()
    }

    fn ty_atom(&mut self) -> PResult<SType> {
        let start = self.start();
        let kind = match self.peek().clone() {
            Tok::Ident(s) if Binder::from_keyword(&s).is_some() => {
                self.bump();
                let b = Binder::from_keyword(&s).unwrap();
                let (comp, x) = self.ty_binder()?;
                self.expect_sym(".")?;
                let body = self.ty()?;
                STypeKind::Bind(b, comp, x, Box::new(body))
            }
            Tok::Ident(_) => STypeKind::VVar(self.ident()?),
            Tok::CIdent(s) => {
                self.bump();
                STypeKind::CVar(name(&s))
            }
            Tok::Num(n) => {
                self.bump();
                STypeKind::Num(n)
            }
            Tok::NumO(1) => {
                self.bump();
                STypeKind::UnitC
            }
            Tok::NumO(0) => {
                self.bump();
                STypeKind::ZeroC
            }
            Tok::Sym("(") => {
                self.bump();
                let inner = self.ty()?;
                self.expect_sym(")")?;
                return Ok(SType { kind: inner.kind, span: self.span_from(start) });
            }
            _ => return self.error(&["a type"]),
        };
        Ok(SType { kind, span: self.span_from(start) })
    }

    // -- terms --

    fn term(&mut self) -> PResult<STerm> {
        let start = self.start();
        let kind = if self.is_kw("fun") || self.is_kw("lfun") {
            let linear = self.is_kw("lfun");
            self.bump();
            let x = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            self.expect_sym("=>")?;
            let body = Box::new(self.term()?);
            if linear {
                STermKind::LinLam(x, ty, body)
            } else {
                STermKind::Lam(x, ty, body)
            }
        } else if self.is_kw("Fun") {
            self.bump();
            let (comp, x) = self.ty_binder()?;
            self.expect_sym("=>")?;
            STermKind::TyLam(comp, x, Box::new(self.term()?))
        } else if self.is_kw("let") {
            self.bump();
            let x = self.ident()?;
            self.expect_sym("<=")?;
            let t = self.term()?;
            self.expect_kw("in")?;
            let u = self.term()?;
            STermKind::Let(x, Box::new(t), Box::new(u))
        } else if self.is_kw("case") || self.is_kw("caseo") {
            let comp = self.is_kw("caseo");
            self.bump();
            let s = self.term()?;
            self.expect_kw("of")?;
            self.expect_kw("inl")?;
            let x = self.ident()?;
            self.expect_sym("=>")?;
            let u = self.term()?;
            self.expect_sym("|")?;
            self.expect_kw("inr")?;
            let y = self.ident()?;
            self.expect_sym("=>")?;
            let v = self.term()?;
            let (s, u, v) = (Box::new(s), Box::new(u), Box::new(v));
            if comp {
                STermKind::CaseC(s, x, u, y, v)
            } else {
                STermKind::Case(s, x, u, y, v)
            }
        } else {
            return self.term_app();
        };
        Ok(STerm { kind, span: self.span_from(start) })
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => {
                !KEYWORDS.contains(&s.as_str()) || matches!(s.as_str(), "or" | "raise" | "handle")
            }
            Tok::Sym("(") => true,
            _ => false,
        }
    }

    fn term_app(&mut self) -> PResult<STerm> {
        let start = self.start();
        let mut head = self.term_prefix()?;
        loop {
            if self.eat_sym("@") {
                self.expect_sym("[")?;
                let ty = self.ty()?;
                self.expect_sym("]")?;
                head = STerm { kind: STermKind::TyApp(Box::new(head), ty), span: self.span_from(start) };
            } else if self.starts_atom() {
                let arg = self.term_atom()?;
                head = STerm { kind: STermKind::App(Box::new(head), Box::new(arg)), span: self.span_from(start) };
            } else {
                return Ok(head);
            }
        }
    }

    fn bracket_type(&mut self) -> PResult<SType> {
        self.expect_sym("[")?;
        let ty = self.ty()?;
        self.expect_sym("]")?;
        Ok(ty)
    }

    fn term_prefix(&mut self) -> PResult<STerm> {
        let start = self.start();
        let kw = match self.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return self.term_atom(),
        };
        let kind = match kw.as_str() {
            "bang" | "fst" | "snd" => {
                self.bump();
                let arg = Box::new(self.term_atom()?);
                match kw.as_str() {
                    "bang" => STermKind::Bang(arg),
                    "fst" => STermKind::Fst(arg),
                    _ => STermKind::Snd(arg),
                }
            }
            "inl" | "inr" | "inlo" | "inro" => {
                self.bump();
                let ty = self.bracket_type()?;
                let arg = Box::new(self.term_atom()?);
                let right = kw.starts_with("inr");
                if kw.ends_with('o') {
                    STermKind::InjC(right, ty, arg)
                } else {
                    STermKind::Inj(right, ty, arg)
                }
            }
            _ => return self.term_atom(),
        };
        Ok(STerm { kind, span: self.span_from(start) })
    }

    fn term_atom(&mut self) -> PResult<STerm> {
        let start = self.start();
        let kind = match self.peek().clone() {
            Tok::Ident(s) if s == "or" => {
                self.bump();
                STermKind::Const(name("or"))
            }
            Tok::Ident(s) if s == "raise" || s == "handle" => {
                self.bump();
                self.expect_sym("[")?;
                let e = self.ident()?;
                self.expect_sym("]")?;
                STermKind::Const(name(&format!("{s}[{e}]")))
            }
            Tok::Ident(_) => STermKind::Var(self.ident()?),
            Tok::Sym("(") => {
                self.bump();
                let first = self.term()?;
                if self.eat_sym(",") {
                    let second = self.term()?;
                    self.expect_sym(")")?;
                    STermKind::Pair(Box::new(first), Box::new(second))
                } else {
                    self.expect_sym(")")?;
                    return Ok(STerm { kind: first.kind, span: self.span_from(start) });
                }
            }
            _ => return self.error(&["a term"]),
        };
        Ok(STerm { kind, span: self.span_from(start) })
    }

    // -- declarations --

    fn binding(&mut self) -> PResult<(Name, SType)> {
        let x = self.ident()?;
        self.expect_sym(":")?;
        Ok((x, self.ty()?))
    }

    fn decl(&mut self) -> PResult<Decl> {
        let start = self.start();
        if self.is_kw("def") {
            self.bump();
            let n = self.ident()?;
            let ty = if self.eat_sym(":") { Some(self.ty()?) } else { None };
            self.expect_sym("=")?;
            let body = self.term()?;
            self.expect_sym(";")?;
            return Ok(Decl::Def { name: n, ty, body, span: self.span_from(start) });
        }
        if self.is_kw("judge") {
            self.bump();
            let n = self.ident()?;
            self.expect_sym(":")?;
            let mut gamma = Vec::new();
            if !self.is_sym("|") {
                gamma.push(self.binding()?);
                while self.eat_sym(",") {
                    gamma.push(self.binding()?);
                }
            }
            self.expect_sym("|")?;
            let delta = if self.is_sym("|-") { None } else { Some(self.binding()?) };
            self.expect_sym("|-")?;
            let subject = self.term()?;
            let ty = if self.eat_sym(":") { Some(self.ty()?) } else { None };
            self.expect_sym(";")?;
            return Ok(Decl::Judge { name: n, gamma, delta, subject, ty, span: self.span_from(start) });
        }
        self.error(&["`def`", "`judge`"])
    }
}

pub fn parse_type(text: &str) -> Result<SType, ParseError> {
    let mut p = Parser::new("<input>", text)?;
    let t = p.ty()?;
    p.eof()?;
    Ok(t)
}

pub fn parse_term(text: &str) -> Result<STerm, ParseError> {
    let mut p = Parser::new("<input>", text)?;
    let t = p.term()?;
    p.eof()?;
    Ok(t)
}

pub fn parse_file(file: &str, text: &str) -> Result<Vec<Decl>, ParseError> {
    let mut p = Parser::new(file, text)?;
    let mut out = Vec::new();
    while *p.peek() != Tok::Eof {
        out.push(p.decl()?);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Printer

const TY_TOP: u8 = 0;
const TY_PREFIX: u8 = 5;
const TY_ATOM: u8 = 6;

fn type_level(t: &STypeKind) -> u8 {
    match t {
        STypeKind::Bind(..) => 0,
        STypeKind::Bin(op, ..) => op.level(),
        STypeKind::Bang(_) => TY_PREFIX,
        _ => TY_ATOM,
    }
}

/// `need` is the minimum level printable without parentheses; `rightmost`
/// says nothing follows, so a binder may stay bare.
fn write_type(out: &mut String, t: &SType, need: u8, rightmost: bool) {
    let lvl = type_level(&t.kind);
    let bare = lvl >= need || (lvl == 0 && rightmost);
    if !bare {
        out.push('(');
    }
    let rightmost = rightmost || !bare;
    match &t.kind {
        STypeKind::VVar(n) => out.push_str(n),
        STypeKind::CVar(n) => {
            out.push('^');
            out.push_str(n);
        }
        STypeKind::Num(n) => out.push_str(&n.to_string()),
        STypeKind::UnitC => out.push_str("1o"),
        STypeKind::ZeroC => out.push_str("0o"),
        STypeKind::Bang(inner) => {
            out.push('!');
            write_type(out, inner, TY_PREFIX, rightmost);
        }
        STypeKind::Bind(b, comp, x, body) => {
            out.push_str(b.keyword());
            out.push(' ');
            if *comp {
                out.push('^');
            }
            out.push_str(x);
            out.push_str(". ");
            write_type(out, body, TY_TOP, rightmost);
        }
        STypeKind::Bin(op, l, r) => {
            let (ln, rn) = if op.right_assoc() { (lvl + 1, lvl) } else { (lvl, lvl + 1) };
            write_type(out, l, ln, false);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_type(out, r, rn, rightmost);
        }
    }
    if !bare {
        out.push(')');
    }
}

pub fn print_type(t: &SType) -> String {
    let mut s = String::new();
    write_type(&mut s, t, TY_TOP, true);
    s
}

fn term_level(t: &STermKind) -> u8 {
    match t {
        STermKind::Lam(..)
        | STermKind::LinLam(..)
        | STermKind::TyLam(..)
        | STermKind::Let(..)
        | STermKind::Case(..)
        | STermKind::CaseC(..) => 0,
        STermKind::App(..)
        | STermKind::TyApp(..)
        | STermKind::Bang(_)
        | STermKind::Fst(_)
        | STermKind::Snd(_)
        | STermKind::Inj(..)
        | STermKind::InjC(..) => 1,
        STermKind::Var(_) | STermKind::Const(_) | STermKind::Pair(..) => 2,
    }
}

fn write_term(out: &mut String, t: &STerm, need: u8) {
    let bare = term_level(&t.kind) >= need;
    if !bare {
        out.push('(');
    }
    match &t.kind {
        STermKind::Var(x) | STermKind::Const(x) => out.push_str(x),
        STermKind::Lam(x, ty, b) | STermKind::LinLam(x, ty, b) => {
            out.push_str(if matches!(t.kind, STermKind::Lam(..)) { "fun " } else { "lfun " });
            out.push_str(x);
            out.push(':');
            write_type(out, ty, TY_TOP, true);
            out.push_str(" => ");
            write_term(out, b, 0);
        }
        STermKind::TyLam(comp, x, b) => {
            out.push_str("Fun ");
            if *comp {
                out.push('^');
            }
            out.push_str(x);
            out.push_str(" => ");
            write_term(out, b, 0);
        }
        STermKind::App(f, a) => {
            write_term(out, f, 1);
            out.push(' ');
            write_term(out, a, 2);
        }
        STermKind::TyApp(f, ty) => {
            write_term(out, f, 1);
            out.push_str(" @[");
            write_type(out, ty, TY_TOP, true);
            out.push(']');
        }
        STermKind::Bang(a) | STermKind::Fst(a) | STermKind::Snd(a) => {
            out.push_str(match t.kind {
                STermKind::Bang(_) => "bang ",
                STermKind::Fst(_) => "fst ",
                _ => "snd ",
            });
            write_term(out, a, 2);
        }
        STermKind::Inj(right, ty, a) | STermKind::InjC(right, ty, a) => {
            out.push_str(if *right { "inr" } else { "inl" });
            if matches!(t.kind, STermKind::InjC(..)) {
                out.push('o');
            }
            out.push('[');
            write_type(out, ty, TY_TOP, true);
            out.push_str("] ");
            write_term(out, a, 2);
        }
        STermKind::Let(x, a, b) => {
            out.push_str("let ");
            out.push_str(x);
            out.push_str(" <= ");
            write_term(out, a, 0);
            out.push_str(" in ");
            write_term(out, b, 0);
        }
        STermKind::Pair(a, b) => {
            out.push('(');
            write_term(out, a, 0);
            out.push_str(", ");
            write_term(out, b, 0);
            out.push(')');
        }
        STermKind::Case(s, x, u, y, v) | STermKind::CaseC(s, x, u, y, v) => {
            out.push_str(if matches!(t.kind, STermKind::Case(..)) { "case " } else { "caseo " });
            write_term(out, s, 0);
            out.push_str(" of inl ");
            out.push_str(x);
            out.push_str(" => ");
            write_term(out, u, 1);
            out.push_str(" | inr ");
            out.push_str(y);
            out.push_str(" => ");
            write_term(out, v, 0);
        }
    }
    if !bare {
        out.push(')');
    }
}

pub fn print_term(t: &STerm) -> String {
    let mut s = String::new();
    write_term(&mut s, t, 0);
    s
}

// ---------------------------------------------------------------------------
// Kernel syntax to surface syntax

/// Recognise `forall ^X. (B -> ^X) -> ^X` with `^X` not free in `B`.
pub fn match_bang(t: &Type) -> Option<&Type> {
    if let Type::ForallC(x, body) = t {
        if let Type::Arrow(k, res) = &**body {
            if let (Type::Arrow(b, r1), Type::CVar(r2)) = (&**k, &**res) {
                let xv = crate::kernel::TyVar { sort: crate::kernel::Sort::Computation, name: x.clone() };
                if **r1 == Type::CVar(x.clone()) && r2 == x && !b.has_free(&xv) {
                    return Some(b);
                }
            }
        }
    }
    None
}

pub fn type_to_surface(t: &Type) -> SType {
    to_surface(t, true)
}

/// Kernel types printed as they are, without folding `!`.
pub fn print_core_type(t: &Type) -> String {
    print_type(&to_surface(t, false))
}

fn to_surface(t: &Type, sugar: bool) -> SType {
    if sugar {
        if let Some(b) = match_bang(t) {
            return SType::new(STypeKind::Bang(Box::new(to_surface(b, sugar))));
        }
    }
    let go = |t: &Type| Box::new(to_surface(t, sugar));
    let kind = match t {
        Type::VVar(n) => STypeKind::VVar(n.clone()),
        Type::CVar(n) => STypeKind::CVar(n.clone()),
        Type::Arrow(a, b) => STypeKind::Bin(BinOp::Arrow, go(a), go(b)),
        Type::Lolli(a, b) => STypeKind::Bin(BinOp::Lolli, go(a), go(b)),
        Type::ForallV(x, b) => STypeKind::Bind(Binder::Forall, false, x.clone(), go(b)),
        Type::ForallC(x, b) => STypeKind::Bind(Binder::Forall, true, x.clone(), go(b)),
    };
    SType::new(kind)
}

pub fn term_to_surface(t: &crate::kernel::Term) -> STerm {
    term_surface(t, true)
}

/// Kernel terms printed without folding `!` in their type annotations.
pub fn print_core_term(t: &crate::kernel::Term) -> String {
    print_term(&term_surface(t, false))
}

fn term_surface(t: &crate::kernel::Term, sugar: bool) -> STerm {
    use crate::kernel::Term;
    let b = |t: &Term| Box::new(term_surface(t, sugar));
    let ty = |t: &Type| to_surface(t, sugar);
    let kind = match t {
        Term::Var(x) => STermKind::Var(x.clone()),
        Term::Const(c) => STermKind::Const(c.clone()),
        Term::Lam(x, t, body) => STermKind::Lam(x.clone(), ty(t), b(body)),
        Term::LinLam(x, t, body) => STermKind::LinLam(x.clone(), ty(t), b(body)),
        Term::App(f, a) => STermKind::App(b(f), b(a)),
        Term::TyLamV(x, body) => STermKind::TyLam(false, x.clone(), b(body)),
        Term::TyLamC(x, body) => STermKind::TyLam(true, x.clone(), b(body)),
        Term::TyAppV(f, t) | Term::TyAppC(f, t) => STermKind::TyApp(b(f), ty(t)),
    };
    STerm::new(kind)
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_type(&type_to_surface(self)))
    }
}

impl fmt::Display for crate::kernel::Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(&term_to_surface(self)))
    }
}

impl fmt::Display for SType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_type(self))
    }
}

impl fmt::Display for STerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

/// Strip spans so that structurally equal trees compare equal.
pub fn erase_type_spans(t: &SType) -> SType {
    let kind = match &t.kind {
        STypeKind::Bin(op, l, r) => STypeKind::Bin(*op, Box::new(erase_type_spans(l)), Box::new(erase_type_spans(r))),
        STypeKind::Bind(b, c, x, body) => STypeKind::Bind(*b, *c, x.clone(), Box::new(erase_type_spans(body))),
        STypeKind::Bang(inner) => STypeKind::Bang(Box::new(erase_type_spans(inner))),
        k => k.clone(),
    };
    SType::new(kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip_type(s: &str) -> String {
        print_type(&parse_type(s).unwrap())
    }

    #[test]
    fn parses_bang_shape() {
        let t = parse_type("forall ^X. (B -> ^X) -> ^X").unwrap();
        match t.kind {
            STypeKind::Bind(Binder::Forall, true, x, body) => {
                assert_eq!(&*x, "X");
                assert!(matches!(body.kind, STypeKind::Bin(BinOp::Arrow, ..)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn arrows_are_right_associative() {
        let t = parse_type("A -o B -> C").unwrap();
        match t.kind {
            STypeKind::Bin(BinOp::Lolli, l, r) => {
                assert_eq!(l.kind, STypeKind::VVar(name("A")));
                assert!(matches!(r.kind, STypeKind::Bin(BinOp::Arrow, ..)));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(roundtrip_type("(A -> B) -> C"), "(A -> B) -> C");
        assert_eq!(roundtrip_type("A -> (B -> C)"), "A -> B -> C");
    }

    #[test]
    fn minimal_parentheses_for_binders() {
        assert_eq!(roundtrip_type("forall X. forall ^Y. X -> ^Y"), "forall X. forall ^Y. X -> ^Y");
        assert_eq!(roundtrip_type("A -> (forall X. X)"), "A -> forall X. X");
        assert_eq!(roundtrip_type("(forall X. X) -> A"), "(forall X. X) -> A");
        assert_eq!(roundtrip_type("!(A -> B)"), "!(A -> B)");
        assert_eq!(roundtrip_type("!!A"), "!!A");
    }

    #[test]
    fn sugar_tokens() {
        assert_eq!(roundtrip_type("1 + 0 * 2"), "1 + 0 * 2");
        assert_eq!(roundtrip_type("(1 + 0) * 2"), "(1 + 0) * 2");
        assert_eq!(roundtrip_type("1o *o 0o (+) ^A"), "1o *o 0o (+) ^A");
        assert_eq!(roundtrip_type("B . ^A -o ^C"), "B . ^A -o ^C");
        assert_eq!(roundtrip_type("exists ^X. mu Y. nuo ^Z. ^Z"), "exists ^X. mu Y. nuo ^Z. ^Z");
    }

    #[test]
    fn parses_terms() {
        let t = parse_term("lfun x:^A => x").unwrap();
        assert!(matches!(t.kind, STermKind::LinLam(..)));
        let t = parse_term("f x @[A] y").unwrap();
        assert_eq!(print_term(&t), "f x @[A] y");
        let t = parse_term("let x <= bang (f a) in g x").unwrap();
        assert_eq!(print_term(&t), "let x <= bang (f a) in g x");
        let t = parse_term("case p of inl x => fst x | inr y => (y, raise[e])").unwrap();
        assert_eq!(print_term(&t), "case p of inl x => fst x | inr y => (y, raise[e])");
        let t = parse_term("handle[e] @[A] (inlo[^B] u)").unwrap();
        assert_eq!(print_term(&t), "handle[e] @[A] (inlo[^B] u)");
    }

    #[test]
    fn comments_and_declarations() {
        let src = "-- identity\ndef id : forall X. X -> X = Fun X => fun x:X => x;\n\
                   judge ax : | x : ^A |- x : ^A; -- stoup axiom\n\
                   judge two : f : A -> ^B, a : A | |- f a;";
        let decls = parse_file("t.pe", src).unwrap();
        assert_eq!(decls.len(), 3);
        match &decls[1] {
            Decl::Judge { gamma, delta, .. } => {
                assert!(gamma.is_empty());
                assert_eq!(&*delta.as_ref().unwrap().0, "x");
            }
            other => panic!("{other:?}"),
        }
        match &decls[2] {
            Decl::Judge { gamma, delta, ty, .. } => {
                assert_eq!(gamma.len(), 2);
                assert!(delta.is_none() && ty.is_none());
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(decls[0].span().start, (2, 1));
    }

    #[test]
    fn syntax_errors_carry_span_and_expectation() {
        let err = parse_type("forall X X").unwrap_err();
        assert_eq!(err.span.start, (1, 10));
        assert_eq!(err.expected, vec!["`.`".to_string()]);
        let err = parse_term("fun x => x").unwrap_err();
        assert!(err.expected.contains(&"`:`".to_string()));
    }
}

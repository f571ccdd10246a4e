//! Surface syntax for `.lp` files: a small Dedukti-style language with
//! symbol declarations and rewrite rules.
//!
//! ```text
//! constant symbol N : TYPE                 // comment
//! injective(1) symbol τ : T -> TYPE
//! symbol tail : Pi n : N, V (s n) -> V n
//! rule tail $n (cons $x $p $v) --> $v
//! ```
//!
//! Unicode `Π λ → ↪` and their ASCII spellings `Pi \ -> -->` are both
//! accepted; the printer emits ASCII. Identifiers that are not bound by an
//! enclosing binder parse to symbols, `$`-prefixed ones to rule variables.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::term::{name, Name, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{column}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// Argument positions (1-based) on which a symbol is declared injective.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Injectivity {
    All,
    Positions(BTreeSet<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolDecl {
    pub constant: bool,
    pub injective: Option<Injectivity>,
    pub name: Name,
    pub ty: Term,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleDecl {
    pub lhs: Term,
    pub rhs: Term,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Declaration {
    Symbol(SymbolDecl),
    Rule(RuleDecl),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceFile {
    pub declarations: Vec<Declaration>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    RuleVar(String),
    Type,
    Kind,
    Pi,
    Lambda,
    Arrow,
    RuleArrow,
    Colon,
    Comma,
    LParen,
    RParen,
    Semi,
    Symbol,
    Rule,
    Constant,
    Injective,
    With,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::RuleVar(s) => write!(f, "rule variable `${s}`"),
            Tok::Type => f.write_str("`TYPE`"),
            Tok::Kind => f.write_str("`KIND`"),
            Tok::Pi => f.write_str("`Pi`"),
            Tok::Lambda => f.write_str("`\\`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::RuleArrow => f.write_str("`-->`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::Symbol => f.write_str("`symbol`"),
            Tok::Rule => f.write_str("`rule`"),
            Tok::Constant => f.write_str("`constant`"),
            Tok::Injective => f.write_str("`injective`"),
            Tok::With => f.write_str("`with`"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

/// Characters allowed inside identifiers besides alphanumerics.
const IDENT_EXTRA: &str = "_'+*!?.@&~|<=/";

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || IDENT_EXTRA.contains(c)
}

/// Whether `s` can be printed as a bare identifier and read back.
pub fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| is_ident_char(c) || c == '-')
        && !s.contains("->")
        && !s.starts_with("//")
        && keyword(s).is_none()
}

fn keyword(s: &str) -> Option<Tok> {
    Some(match s {
        "TYPE" => Tok::Type,
        "KIND" => Tok::Kind,
        "Pi" | "Π" => Tok::Pi,
        "λ" => Tok::Lambda,
        "symbol" => Tok::Symbol,
        "rule" => Tok::Rule,
        "constant" => Tok::Constant,
        "injective" => Tok::Injective,
        "with" => Tok::With,
        _ => return None,
    })
}

fn lex(text: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let err = |line, column, message: String| SyntaxError { line, column, message };
    while i < chars.len() {
        let c = chars[i];
        let at = |k: usize| chars.get(i + k).copied();
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
        if c == '/' && at(1) == Some('/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            ':' => (Tok::Colon, 1),
            ',' => (Tok::Comma, 1),
            ';' => (Tok::Semi, 1),
            '\\' | 'λ' => (Tok::Lambda, 1),
            '→' => (Tok::Arrow, 1),
            '↪' => (Tok::RuleArrow, 1),
            '-' if at(1) == Some('-') && at(2) == Some('>') => (Tok::RuleArrow, 3),
            '-' if at(1) == Some('>') => (Tok::Arrow, 2),
            '$' => {
                let mut j = i + 1;
                while j < chars.len() && is_ident_char(chars[j]) {
                    j += 1;
                }
                if j == i + 1 {
                    return Err(err(line, col, "expected a name after `$`".into()));
                }
                (Tok::RuleVar(chars[i + 1..j].iter().collect()), j - i)
            }
            c if is_ident_char(c) || c == '-' => {
                let mut j = i;
                while j < chars.len() {
                    let d = chars[j];
                    let arrow_next = d == '-' && chars.get(j + 1) == Some(&'>');
                    let comment_next = d == '/' && chars.get(j + 1) == Some(&'/');
                    if arrow_next || comment_next || !(is_ident_char(d) || d == '-') {
                        break;
                    }
                    j += 1;
                }
                if j == i {
                    return Err(err(line, col, format!("unexpected character `{c}`")));
                }
                let word: String = chars[i..j].iter().collect();
                (keyword(&word).unwrap_or(Tok::Ident(word)), j - i)
            }
            _ => return Err(err(line, col, format!("unexpected character `{c}`"))),
        };
        out.push(Spanned { tok, line, column: col });
        i += len;
        col += len;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    /// Source names of enclosing binders, mapped to internal free names.
    scope: Vec<(String, Name)>,
    counter: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|s| (s.line, s.column)).unwrap_or(self.eof)
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        let (line, column) = self.here();
        Err(SyntaxError { line, column, message: message.into() })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            Some(t) => {
                let msg = format!("expected {want}, found {t}");
                self.error(msg)
            }
            None => self.error(format!("expected {want}, found end of input")),
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(t) => {
                let msg = format!("expected an identifier, found {t}");
                self.error(msg)
            }
            None => self.error("expected an identifier, found end of input"),
        }
    }

    fn file(&mut self) -> Result<SourceFile, SyntaxError> {
        let mut declarations = Vec::new();
        while self.peek().is_some() {
            match self.peek() {
                Some(Tok::Semi) => {
                    self.pos += 1;
                }
                Some(Tok::Rule) => {
                    self.pos += 1;
                    declarations.push(Declaration::Rule(self.rule()?));
                    while self.peek() == Some(&Tok::With) {
                        self.pos += 1;
                        declarations.push(Declaration::Rule(self.rule()?));
                    }
                }
                Some(Tok::Symbol | Tok::Constant | Tok::Injective) => {
                    declarations.push(Declaration::Symbol(self.symbol_decl()?));
                }
                Some(t) => {
                    let msg = format!("expected a declaration, found {t}");
                    return self.error(msg);
                }
                None => unreachable!(),
            }
        }
        Ok(SourceFile { declarations })
    }

    fn symbol_decl(&mut self) -> Result<SymbolDecl, SyntaxError> {
        let line = self.here().0;
        let mut constant = false;
        let mut injective = None;
        loop {
            match self.peek() {
                Some(Tok::Constant) => {
                    self.pos += 1;
                    constant = true;
                }
                Some(Tok::Injective) => {
                    self.pos += 1;
                    injective = Some(self.injectivity()?);
                }
                Some(Tok::Symbol) => {
                    self.pos += 1;
                    break;
                }
                _ => return self.error("expected `symbol`"),
            }
        }
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let ty = self.term()?;
        Ok(SymbolDecl { constant, injective, name: crate::term::name(&name), ty, line })
    }

    fn injectivity(&mut self) -> Result<Injectivity, SyntaxError> {
        if self.peek() != Some(&Tok::LParen) {
            return Ok(Injectivity::All);
        }
        self.pos += 1;
        let mut set = BTreeSet::new();
        loop {
            let word = self.ident()?;
            match word.parse::<usize>() {
                Ok(i) if i >= 1 => {
                    set.insert(i);
                }
                _ => {
                    self.pos -= 1;
                    return self.error(format!("expected a positive argument index, found `{word}`"));
                }
            }
            match self.bump() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => break,
                _ => {
                    self.pos -= 1;
                    return self.error("expected `,` or `)` in injectivity positions");
                }
            }
        }
        Ok(Injectivity::Positions(set))
    }

    fn rule(&mut self) -> Result<RuleDecl, SyntaxError> {
        let line = self.here().0;
        let lhs = self.term()?;
        self.expect(Tok::RuleArrow)?;
        let rhs = self.term()?;
        Ok(RuleDecl { lhs, rhs, line })
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        match self.peek() {
            Some(Tok::Pi) | Some(Tok::Lambda) => self.binder(),
            _ => {
                let dom = self.app()?;
                if self.peek() == Some(&Tok::Arrow) {
                    self.pos += 1;
                    let cod = self.term()?;
                    Ok(Term::arrow(dom, cod))
                } else {
                    Ok(dom)
                }
            }
        }
    }

    fn binder(&mut self) -> Result<Term, SyntaxError> {
        let is_pi = self.bump() == Some(Tok::Pi);
        let mut groups: Vec<(Vec<String>, Term)> = Vec::new();
        if self.peek() == Some(&Tok::LParen) {
            while self.peek() == Some(&Tok::LParen) {
                self.pos += 1;
                let group = self.binder_group()?;
                self.expect(Tok::RParen)?;
                groups.push(group);
            }
        } else {
            groups.push(self.binder_group()?);
        }
        self.expect(Tok::Comma)?;
        let body = self.term()?;
        let mut internals = Vec::new();
        for _ in groups.iter().flat_map(|g| &g.0) {
            internals.push(self.scope.pop().expect("binder scope").1);
        }
        internals.reverse();
        let mut names: Vec<(&String, &Term)> = Vec::new();
        for (xs, ty) in &groups {
            for x in xs {
                names.push((x, ty));
            }
        }
        let mut out = body;
        for ((x, ty), internal) in names.into_iter().zip(internals).rev() {
            let body = out.abstract_var(&internal);
            let b = crate::term::Binder { name: name(x), domain: ty.clone(), body };
            out = if is_pi {
                Term::Prod(std::sync::Arc::new(b))
            } else {
                Term::Abs(std::sync::Arc::new(b))
            };
        }
        Ok(out)
    }

    /// `x y z : A`; pushes the names into scope after parsing `A`.
    fn binder_group(&mut self) -> Result<(Vec<String>, Term), SyntaxError> {
        let mut xs = vec![self.ident()?];
        while let Some(Tok::Ident(_)) = self.peek() {
            xs.push(self.ident()?);
        }
        self.expect(Tok::Colon)?;
        let ty = self.term()?;
        // A shared annotation is parsed once, outside the scope of the names.
        let mut annotated = Vec::new();
        for x in &xs {
            self.counter += 1;
            let internal = name(&format!("{x}#{}", self.counter));
            self.scope.push((x.clone(), internal));
            annotated.push(x.clone());
        }
        Ok((annotated, ty))
    }

    fn app(&mut self) -> Result<Term, SyntaxError> {
        let mut head = match self.atom()? {
            Some(t) => t,
            None => {
                return match self.peek() {
                    Some(t) => {
                        let msg = format!("expected a term, found {t}");
                        self.error(msg)
                    }
                    None => self.error("expected a term, found end of input"),
                }
            }
        };
        loop {
            if matches!(self.peek(), Some(Tok::Pi) | Some(Tok::Lambda)) {
                let arg = self.binder()?;
                return Ok(Term::app(head, arg));
            }
            match self.atom()? {
                Some(arg) => head = Term::app(head, arg),
                None => return Ok(head),
            }
        }
    }

    fn atom(&mut self) -> Result<Option<Term>, SyntaxError> {
        let t = match self.peek() {
            Some(Tok::Ident(x)) => {
                let x = x.clone();
                self.pos += 1;
                match self.scope.iter().rev().find(|(src, _)| *src == x) {
                    Some((_, internal)) => Term::Var(internal.clone()),
                    None => Term::Sym(name(&x)),
                }
            }
            Some(Tok::RuleVar(x)) => {
                let t = Term::var(x);
                self.pos += 1;
                t
            }
            Some(Tok::Type) => {
                self.pos += 1;
                Term::star()
            }
            Some(Tok::Kind) => {
                self.pos += 1;
                Term::kind()
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(Tok::RParen)?;
                t
            }
            _ => return Ok(None),
        };
        Ok(Some(t))
    }
}

pub fn parse(text: &str) -> Result<SourceFile, SyntaxError> {
    let toks = lex(text)?;
    let eof = end_position(text);
    let mut p = Parser { toks, pos: 0, scope: Vec::new(), counter: 0, eof };
    p.file()
}

/// Parses a single term (used for tests, the CLI and precedence strings).
pub fn parse_term(text: &str) -> Result<Term, SyntaxError> {
    let toks = lex(text)?;
    let eof = end_position(text);
    let mut p = Parser { toks, pos: 0, scope: Vec::new(), counter: 0, eof };
    let t = p.term()?;
    if let Some(tok) = p.peek() {
        let msg = format!("unexpected {tok} after term");
        return p.error(msg);
    }
    Ok(t)
}

fn end_position(text: &str) -> (usize, usize) {
    let line = text.lines().count().max(1);
    let column = text.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
    (line, column)
}

/// Pretty-prints a term in ASCII surface syntax.
pub fn print(t: &Term) -> String {
    let mut out = String::new();
    Printer { scope: Vec::new() }.term(t, Level::Top, &mut out);
    out
}

pub fn print_rule(lhs: &Term, rhs: &Term) -> String {
    format!("{} --> {}", print(lhs), print(rhs))
}

pub fn print_file(file: &SourceFile) -> String {
    let mut out = String::new();
    for d in &file.declarations {
        match d {
            Declaration::Symbol(s) => {
                if s.constant {
                    out.push_str("constant ");
                }
                match &s.injective {
                    Some(Injectivity::All) => out.push_str("injective "),
                    Some(Injectivity::Positions(ps)) => {
                        let ps: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
                        out.push_str(&format!("injective({}) ", ps.join(",")));
                    }
                    None => {}
                }
                out.push_str(&format!("symbol {} : {}\n", s.name, print(&s.ty)));
            }
            Declaration::Rule(r) => {
                out.push_str(&format!("rule {}\n", print_rule(&r.lhs, &r.rhs)));
            }
        }
    }
    out
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    Top,
    App,
    Atom,
}

struct Printer {
    scope: Vec<String>,
}

impl Printer {
    fn term(&mut self, t: &Term, level: Level, out: &mut String) {
        match t {
            Term::Sort(crate::term::Sort::Star) => out.push_str("TYPE"),
            Term::Sort(crate::term::Sort::Box) => out.push_str("KIND"),
            Term::Var(x) => {
                out.push('$');
                out.push_str(x);
            }
            Term::Sym(f) => out.push_str(f),
            Term::BVar(i) => match self.scope.len().checked_sub(i + 1) {
                Some(k) => out.push_str(&self.scope[k]),
                None => out.push_str(&format!("#{i}")),
            },
            Term::App(..) => {
                let (head, args) = t.spine();
                if level == Level::Atom {
                    out.push('(');
                }
                self.term(head, Level::Atom, out);
                for a in args {
                    out.push(' ');
                    self.term(a, Level::Atom, out);
                }
                if level == Level::Atom {
                    out.push(')');
                }
            }
            Term::Abs(b) | Term::Prod(b) => {
                let is_pi = matches!(t, Term::Prod(_));
                if level > Level::Top {
                    out.push('(');
                }
                if is_pi && !b.body.uses_bound() {
                    self.term(&b.domain, Level::App, out);
                    out.push_str(" -> ");
                    self.scope.push(String::new());
                    self.term(&b.body, Level::Top, out);
                    self.scope.pop();
                } else {
                    let x = self.binder_name(&b.name, &b.body);
                    out.push_str(if is_pi { "Pi " } else { "\\" });
                    out.push_str(&x);
                    out.push_str(" : ");
                    self.term(&b.domain, Level::Top, out);
                    out.push_str(", ");
                    self.scope.push(x);
                    self.term(&b.body, Level::Top, out);
                    self.scope.pop();
                }
                if level > Level::Top {
                    out.push(')');
                }
            }
        }
    }

    fn binder_name(&self, hint: &str, body: &Term) -> String {
        let base: String = hint.split(['#', '%']).next().unwrap_or("").to_string();
        let mut x = if is_identifier(&base) && base != "_" { base } else { "x".to_string() };
        let syms = body.symbols();
        while self.scope.contains(&x) || syms.iter().any(|s| **s == *x) {
            x.push('\'');
        }
        x
    }
}

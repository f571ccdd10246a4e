//! Terms of the λΠ-calculus in locally nameless form.
//!
//! Bound variables are de Bruijn indices (`BVar`) relative to the nearest
//! enclosing binder; free variables and rule variables carry names (`Var`).
//! Binders keep a name hint for printing only, so structural equality is
//! α-equivalence. Substitution images are expected to be locally closed
//! (no dangling indices), which makes named substitution capture-free.

mod unify;

pub use unify::{rename_apart, unify};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use thiserror::Error;

/// Identifiers for symbols and variables.
pub type Name = Arc<str>;

pub fn name(s: &str) -> Name {
    Arc::from(s)
}

/// The two sorts: `★` (written `TYPE`) and `□` (written `KIND`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Star,
    Box,
}

#[derive(Clone, Debug)]
pub struct Binder {
    /// Printing hint; ignored by equality.
    pub name: Name,
    pub domain: Term,
    /// Body with index 0 referring to this binder.
    pub body: Term,
}

#[derive(Clone, Debug)]
pub enum Term {
    Sort(Sort),
    Var(Name),
    BVar(usize),
    Sym(Name),
    Abs(Arc<Binder>),
    App(Arc<Term>, Arc<Term>),
    Prod(Arc<Binder>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("invalid position {position} in {term}")]
    InvalidPosition { position: Position, term: String },
}

impl PartialEq for Term {
    fn eq(&self, other: &Term) -> bool {
        match (self, other) {
            (Term::Sort(a), Term::Sort(b)) => a == b,
            (Term::Var(a), Term::Var(b)) | (Term::Sym(a), Term::Sym(b)) => a == b,
            (Term::BVar(a), Term::BVar(b)) => a == b,
            (Term::App(f, a), Term::App(g, b)) => {
                (Arc::ptr_eq(f, g) || f == g) && (Arc::ptr_eq(a, b) || a == b)
            }
            (Term::Abs(a), Term::Abs(b)) | (Term::Prod(a), Term::Prod(b)) => {
                Arc::ptr_eq(a, b) || (a.domain == b.domain && a.body == b.body)
            }
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        std::mem::discriminant(self).hash(state);
        match self {
            Term::Sort(s) => s.hash(state),
            Term::Var(x) | Term::Sym(x) => x.hash(state),
            Term::BVar(i) => i.hash(state),
            Term::App(f, a) => {
                f.hash(state);
                a.hash(state);
            }
            Term::Abs(b) | Term::Prod(b) => {
                b.domain.hash(state);
                b.body.hash(state);
            }
        }
    }
}

static FRESH: AtomicU64 = AtomicU64::new(0);

/// A variable name that cannot be written in source files and has never
/// been handed out before. Used when reduction has to go under a binder.
pub fn fresh_name(hint: &str) -> Name {
    let n = FRESH.fetch_add(1, Ordering::Relaxed);
    let base = hint.split(['%', '#']).next().unwrap_or(hint);
    Arc::from(format!("{base}%{n}"))
}

impl Term {
    pub fn star() -> Term {
        Term::Sort(Sort::Star)
    }

    pub fn kind() -> Term {
        Term::Sort(Sort::Box)
    }

    pub fn var(x: &str) -> Term {
        Term::Var(name(x))
    }

    pub fn sym(f: &str) -> Term {
        Term::Sym(name(f))
    }

    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Arc::new(f), Arc::new(a))
    }

    /// `head a1 ... an`
    pub fn apps(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    /// Builds `λx:A, body` where `body` refers to the binder through the
    /// free variable `x`.
    pub fn lam(x: &str, domain: Term, body: Term) -> Term {
        let body = body.abstract_var(x);
        Term::Abs(Arc::new(Binder { name: name(x), domain, body }))
    }

    /// Builds `Πx:A, body` where `body` refers to the binder through the
    /// free variable `x`.
    pub fn pi(x: &str, domain: Term, body: Term) -> Term {
        let body = body.abstract_var(x);
        Term::Prod(Arc::new(Binder { name: name(x), domain, body }))
    }

    /// Non-dependent product `A → B`.
    pub fn arrow(domain: Term, codomain: Term) -> Term {
        Term::Prod(Arc::new(Binder { name: name("_"), domain, body: codomain }))
    }

    pub fn is_sort(&self) -> bool {
        matches!(self, Term::Sort(_))
    }

    /// Splits an application spine into its head and arguments.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut t = self;
        while let Term::App(f, a) = t {
            args.push(&**a);
            t = f;
        }
        args.reverse();
        (t, args)
    }

    /// Head symbol name of the application spine, if any.
    pub fn head_symbol(&self) -> Option<&Name> {
        match self.spine().0 {
            Term::Sym(f) => Some(f),
            _ => None,
        }
    }

    /// Replaces the index bound at the outermost level by `u` (which must be
    /// locally closed).
    pub fn instantiate(&self, u: &Term) -> Term {
        self.instantiate_at(0, u)
    }

    fn instantiate_at(&self, depth: usize, u: &Term) -> Term {
        match self {
            Term::BVar(i) if *i == depth => u.clone(),
            Term::Sort(_) | Term::Var(_) | Term::Sym(_) | Term::BVar(_) => self.clone(),
            Term::App(f, a) => Term::app(f.instantiate_at(depth, u), a.instantiate_at(depth, u)),
            Term::Abs(b) => Term::Abs(Arc::new(Binder {
                name: b.name.clone(),
                domain: b.domain.instantiate_at(depth, u),
                body: b.body.instantiate_at(depth + 1, u),
            })),
            Term::Prod(b) => Term::Prod(Arc::new(Binder {
                name: b.name.clone(),
                domain: b.domain.instantiate_at(depth, u),
                body: b.body.instantiate_at(depth + 1, u),
            })),
        }
    }

    /// Turns free occurrences of `x` into the index of a binder placed
    /// directly around `self`.
    pub fn abstract_var(&self, x: &str) -> Term {
        self.abstract_at(0, x)
    }

    fn abstract_at(&self, depth: usize, x: &str) -> Term {
        match self {
            Term::Var(y) if &**y == x => Term::BVar(depth),
            Term::Sort(_) | Term::Var(_) | Term::Sym(_) | Term::BVar(_) => self.clone(),
            Term::App(f, a) => Term::app(f.abstract_at(depth, x), a.abstract_at(depth, x)),
            Term::Abs(b) => Term::Abs(Arc::new(Binder {
                name: b.name.clone(),
                domain: b.domain.abstract_at(depth, x),
                body: b.body.abstract_at(depth + 1, x),
            })),
            Term::Prod(b) => Term::Prod(Arc::new(Binder {
                name: b.name.clone(),
                domain: b.domain.abstract_at(depth, x),
                body: b.body.abstract_at(depth + 1, x),
            })),
        }
    }

    /// Whether the outermost-level index occurs (i.e. a binder around `self`
    /// would be used).
    pub fn uses_bound(&self) -> bool {
        self.uses_at(0)
    }

    fn uses_at(&self, depth: usize) -> bool {
        match self {
            Term::BVar(i) => *i == depth,
            Term::Sort(_) | Term::Var(_) | Term::Sym(_) => false,
            Term::App(f, a) => f.uses_at(depth) || a.uses_at(depth),
            Term::Abs(b) | Term::Prod(b) => b.domain.uses_at(depth) || b.body.uses_at(depth + 1),
        }
    }

    /// True when no de Bruijn index escapes its binders.
    pub fn is_locally_closed(&self) -> bool {
        fn go(t: &Term, depth: usize) -> bool {
            match t {
                Term::BVar(i) => *i < depth,
                Term::Sort(_) | Term::Var(_) | Term::Sym(_) => true,
                Term::App(f, a) => go(f, depth) && go(a, depth),
                Term::Abs(b) | Term::Prod(b) => go(&b.domain, depth) && go(&b.body, depth + 1),
            }
        }
        go(self, 0)
    }

    /// Free (named) variables, in order of first occurrence.
    pub fn free_vars_ordered(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.visit(&mut |t| {
            if let Term::Var(x) = t {
                if !out.contains(x) {
                    out.push(x.clone());
                }
            }
        });
        out
    }

    /// Symbol names, in order of first occurrence.
    pub fn symbols(&self) -> Vec<Name> {
        let mut out = Vec::new();
        self.visit(&mut |t| {
            if let Term::Sym(f) = t {
                if !out.contains(f) {
                    out.push(f.clone());
                }
            }
        });
        out
    }

    /// Pre-order traversal of every node.
    pub fn visit(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        match self {
            Term::App(g, a) => {
                g.visit(f);
                a.visit(f);
            }
            Term::Abs(b) | Term::Prod(b) => {
                b.domain.visit(f);
                b.body.visit(f);
            }
            _ => {}
        }
    }

    pub fn occurs_sym(&self, f: &str) -> bool {
        let mut found = false;
        self.visit(&mut |t| {
            if let Term::Sym(g) = t {
                found |= &**g == f;
            }
        });
        found
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Renames free variables and symbols through `f`; used for freezing
    /// rule variables into constants and back.
    pub fn map_leaves(&self, f: &impl Fn(&Term) -> Option<Term>) -> Term {
        if let Some(t) = f(self) {
            return t;
        }
        match self {
            Term::Sort(_) | Term::Var(_) | Term::Sym(_) | Term::BVar(_) => self.clone(),
            Term::App(g, a) => Term::app(g.map_leaves(f), a.map_leaves(f)),
            Term::Abs(b) => Term::Abs(Arc::new(Binder {
                name: b.name.clone(),
                domain: b.domain.map_leaves(f),
                body: b.body.map_leaves(f),
            })),
            Term::Prod(b) => Term::Prod(Arc::new(Binder {
                name: b.name.clone(),
                domain: b.domain.map_leaves(f),
                body: b.body.map_leaves(f),
            })),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::syntax::print(self))
    }
}

/// A finite map from variable names to terms.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution(BTreeMap<Name, Term>);

impl Substitution {
    pub fn new() -> Self {
        Substitution(BTreeMap::new())
    }

    pub fn singleton(x: &str, t: Term) -> Self {
        let mut s = Self::new();
        s.insert(name(x), t);
        s
    }

    pub fn insert(&mut self, x: Name, t: Term) -> Option<Term> {
        self.0.insert(x, t)
    }

    pub fn get(&self, x: &str) -> Option<&Term> {
        self.0.get(x)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Term)> {
        self.0.iter()
    }

    /// `self ; other`: applying the result is applying `self` then `other`.
    pub fn compose(&self, other: &Substitution) -> Substitution {
        let mut out: BTreeMap<Name, Term> =
            self.0.iter().map(|(x, t)| (x.clone(), subst(t, other))).collect();
        for (x, t) in &other.0 {
            out.entry(x.clone()).or_insert_with(|| t.clone());
        }
        Substitution(out)
    }
}

impl FromIterator<(Name, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Name, Term)>>(iter: I) -> Self {
        Substitution(iter.into_iter().collect())
    }
}

/// Capture-avoiding replacement of the free variables in the domain of `s`.
pub fn subst(t: &Term, s: &Substitution) -> Term {
    if s.is_empty() {
        return t.clone();
    }
    match t {
        Term::Var(x) => s.get(x).cloned().unwrap_or_else(|| t.clone()),
        Term::Sort(_) | Term::Sym(_) | Term::BVar(_) => t.clone(),
        Term::App(f, a) => Term::app(subst(f, s), subst(a, s)),
        Term::Abs(b) => Term::Abs(Arc::new(Binder {
            name: b.name.clone(),
            domain: subst(&b.domain, s),
            body: subst(&b.body, s),
        })),
        Term::Prod(b) => Term::Prod(Arc::new(Binder {
            name: b.name.clone(),
            domain: subst(&b.domain, s),
            body: subst(&b.body, s),
        })),
    }
}

pub fn alpha_eq(t: &Term, u: &Term) -> bool {
    t == u
}

pub fn free_vars(t: &Term) -> BTreeSet<Name> {
    t.free_vars_ordered().into_iter().collect()
}

/// A position: a word over {1, 2}. For applications 1 is the function and
/// 2 the argument; for binders 1 is the annotation and 2 the body.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(pub Vec<u8>);

impl Position {
    pub fn root() -> Self {
        Position(Vec::new())
    }

    pub fn child(&self, i: u8) -> Self {
        let mut p = self.0.clone();
        p.push(i);
        Position(p)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("ε");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("·"))
    }
}

impl<const N: usize> From<[u8; N]> for Position {
    fn from(p: [u8; N]) -> Self {
        Position(p.to_vec())
    }
}

/// Subterm at `p`. Binder bodies are opened with a free variable named
/// after the binder, so the result never has dangling indices.
pub fn subterm_at(t: &Term, p: &Position) -> Result<Term, TermError> {
    let mut cur = t.clone();
    for &i in &p.0 {
        let next = match (&cur, i) {
            (Term::App(f, _), 1) => (**f).clone(),
            (Term::App(_, a), 2) => (**a).clone(),
            (Term::Abs(b) | Term::Prod(b), 1) => b.domain.clone(),
            (Term::Abs(b) | Term::Prod(b), 2) => b.body.instantiate(&Term::Var(b.name.clone())),
            _ => {
                return Err(TermError::InvalidPosition { position: p.clone(), term: t.to_string() })
            }
        };
        cur = next;
    }
    Ok(cur)
}

/// All positions of `t`, in pre-order.
pub fn positions(t: &Term) -> Vec<Position> {
    fn go(t: &Term, here: Position, out: &mut Vec<Position>) {
        out.push(here.clone());
        match t {
            Term::App(f, a) => {
                go(f, here.child(1), out);
                go(a, here.child(2), out);
            }
            Term::Abs(b) | Term::Prod(b) => {
                go(&b.domain, here.child(1), out);
                go(&b.body, here.child(2), out);
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    go(t, Position::root(), &mut out);
    out
}

//! Lexicographic path ordering and closed Knuth-Bendix completion.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::constraints::{is_hat, Equation, EquationSet, HAT};
use crate::signature::Signature;
use crate::syntax::print;
use crate::term::{name, Name, Term};

/// Bound on the number of equations processed by one completion run.
pub const MAX_STEPS: usize = 10_000;

/// Total order on symbol names, highest first.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Precedence {
    order: Vec<Name>,
    rank: HashMap<Name, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrecedenceError {
    #[error("empty name in precedence `{0}`")]
    EmptyName(String),
    #[error("`{0}` appears twice in the precedence")]
    Repeated(String),
    #[error("unknown name `{0}` in the precedence")]
    Unknown(String),
}

impl Precedence {
    pub fn new(order: impl IntoIterator<Item = Name>) -> Self {
        let mut p = Precedence::default();
        for f in order {
            if !p.rank.contains_key(&f) {
                p.rank.insert(f.clone(), p.order.len());
                p.order.push(f);
            }
        }
        p
    }

    /// Hats by first occurrence, then the signature's symbols in reverse
    /// declaration order, then frozen variables in reverse occurrence order.
    pub fn default_for(sig: &Signature, hats: &[Name], frozen: &[Name]) -> Self {
        let symbols = sig.symbols().iter().rev().map(|s| s.name.clone());
        Precedence::new(hats.iter().cloned().chain(symbols).chain(frozen.iter().rev().cloned()))
    }

    /// Parses `a > b > c`. Hats may be written `x̂` or `^x`.
    pub fn parse_override(text: &str) -> Result<Vec<Name>, PrecedenceError> {
        let mut out: Vec<Name> = Vec::new();
        for part in text.split('>') {
            let part = part.trim();
            if part.is_empty() {
                return Err(PrecedenceError::EmptyName(text.to_string()));
            }
            let f = match part.strip_prefix('^') {
                Some(x) => name(&format!("{x}{HAT}")),
                None => name(part),
            };
            if out.contains(&f) {
                return Err(PrecedenceError::Repeated(part.to_string()));
            }
            out.push(f);
        }
        Ok(out)
    }

    /// Reorders the names mentioned by `overrides` among the positions they
    /// already occupy, leaving every other name in place.
    pub fn with_override(&self, overrides: &[Name]) -> Result<Self, PrecedenceError> {
        if let Some(f) = overrides.iter().find(|f| !self.rank.contains_key(*f)) {
            return Err(PrecedenceError::Unknown(f.to_string()));
        }
        let mut slots: Vec<usize> = overrides.iter().map(|f| self.rank[f]).collect();
        slots.sort_unstable();
        let mut order = self.order.clone();
        for (slot, f) in slots.into_iter().zip(overrides) {
            order[slot] = f.clone();
        }
        Ok(Precedence::new(order))
    }

    pub fn contains(&self, f: &str) -> bool {
        self.rank.contains_key(f)
    }

    /// Names outside the order are below every listed name, and compared
    /// by name among themselves.
    pub fn compare(&self, f: &str, g: &str) -> Ordering {
        match (self.rank.get(f), self.rank.get(g)) {
            (Some(a), Some(b)) => b.cmp(a),
            (Some(_), None) => Ordering::Greater,
            (None, Some(_)) => Ordering::Less,
            (None, None) => g.cmp(f),
        }
    }

    pub fn gt(&self, f: &str, g: &str) -> bool {
        self.compare(f, g) == Ordering::Greater
    }

    pub fn names(&self) -> &[Name] {
        &self.order
    }
}

impl fmt::Display for Precedence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.order.iter().map(|n| &**n).collect();
        write!(f, "{}", names.join(" > "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompletionError {
    #[error("{0} is not a closed algebraic term")]
    NonAlgebraic(String),
    #[error("cannot orient {0}: completion inapplicable")]
    Unorientable(String),
    #[error("cannot orient {0}: the hat occurs on both sides")]
    OccursViolation(String),
    #[error("completion did not finish within {0} steps")]
    Exhausted(usize),
}

/// `f t1 ... tn` with `f` a symbol and every `ti` of the same shape.
pub fn is_closed_algebraic(t: &Term) -> bool {
    let (head, args) = t.spine();
    matches!(head, Term::Sym(_)) && args.into_iter().all(is_closed_algebraic)
}

/// `t >lpo u` over closed algebraic terms.
pub fn lpo_gt(prec: &Precedence, t: &Term, u: &Term) -> Result<bool, CompletionError> {
    for s in [t, u] {
        if !is_closed_algebraic(s) {
            return Err(CompletionError::NonAlgebraic(print(s)));
        }
    }
    Ok(lpo(prec, t, u))
}

fn lpo(prec: &Precedence, t: &Term, u: &Term) -> bool {
    let (Term::Sym(f), ts) = t.spine() else { return false };
    if ts.iter().any(|ti| *ti == u || lpo(prec, ti, u)) {
        return true;
    }
    let (Term::Sym(g), us) = u.spine() else { return false };
    let dominates = || us.iter().all(|uj| lpo(prec, t, uj));
    match prec.compare(f, g) {
        Ordering::Greater => dominates(),
        Ordering::Equal => lex(prec, &ts, &us) && dominates(),
        Ordering::Less => false,
    }
}

/// Lexicographic extension; a proper extension beats its prefix.
fn lex(prec: &Precedence, ts: &[&Term], us: &[&Term]) -> bool {
    for (t, u) in ts.iter().zip(us) {
        if t != u {
            return lpo(prec, t, u);
        }
    }
    ts.len() > us.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Orientation {
    /// `lhs >lpo rhs`
    Lpo,
    /// A hat oriented towards a non-algebraic term it does not occur in.
    Hat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundRule {
    pub lhs: Term,
    pub rhs: Term,
    pub orientation: Orientation,
}

impl fmt::Display for GroundRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} --> {}", print(&self.lhs), print(&self.rhs))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundRules {
    pub rules: Vec<GroundRule>,
}

impl GroundRules {
    pub fn iter(&self) -> std::slice::Iter<'_, GroundRule> {
        self.rules.iter()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn lines(&self) -> Vec<String> {
        self.iter().map(|r| r.to_string()).collect()
    }

    /// Contains exactly the given oriented pairs, in any order.
    pub fn same_rules(&self, pairs: &[(Term, Term)]) -> bool {
        self.len() == pairs.len() && pairs.iter().all(|(l, r)| self.iter().any(|g| &g.lhs == l && &g.rhs == r))
    }

    /// One rewrite step at the leftmost-outermost redex.
    pub fn step(&self, t: &Term) -> Option<Term> {
        rewrite_once(&self.rules, t)
    }

    /// All one-step reducts.
    pub fn reducts(&self, t: &Term) -> Vec<Term> {
        let mut out = Vec::new();
        all_reducts(&self.rules, t, &mut |s| out.push(s));
        out
    }

    pub fn normalize(&self, t: &Term) -> Term {
        normal_form(&self.rules, t)
    }
}

fn root_rule<'r>(rules: &'r [GroundRule], t: &Term) -> Option<&'r GroundRule> {
    rules.iter().find(|r| r.lhs == *t)
}

fn normal_form(rules: &[GroundRule], t: &Term) -> Term {
    let mut t = t.clone();
    while let Some(s) = rewrite_once(rules, &t) {
        t = s;
    }
    t
}

fn rewrite_once(rules: &[GroundRule], t: &Term) -> Option<Term> {
    if let Some(r) = root_rule(rules, t) {
        return Some(r.rhs.clone());
    }
    rebuild(t, |c| rewrite_once(rules, c))
}

/// Rewrites the first child for which `f` succeeds.
fn rebuild(t: &Term, mut f: impl FnMut(&Term) -> Option<Term>) -> Option<Term> {
    use std::sync::Arc;
    match t {
        Term::App(g, a) => {
            if let Some(g2) = f(g) {
                return Some(Term::App(Arc::new(g2), a.clone()));
            }
            f(a).map(|a2| Term::App(g.clone(), Arc::new(a2)))
        }
        Term::Abs(b) | Term::Prod(b) => {
            let make = |domain: Term, body: Term| {
                let binder = Arc::new(crate::term::Binder { name: b.name.clone(), domain, body });
                if matches!(t, Term::Abs(_)) {
                    Term::Abs(binder)
                } else {
                    Term::Prod(binder)
                }
            };
            if let Some(d) = f(&b.domain) {
                return Some(make(d, b.body.clone()));
            }
            f(&b.body).map(|body| make(b.domain.clone(), body))
        }
        _ => None,
    }
}

fn all_reducts(rules: &[GroundRule], t: &Term, out: &mut dyn FnMut(Term)) {
    use std::sync::Arc;
    for r in rules.iter().filter(|r| r.lhs == *t) {
        out(r.rhs.clone());
    }
    match t {
        Term::App(g, a) => {
            all_reducts(rules, g, &mut |g2| out(Term::App(Arc::new(g2), a.clone())));
            all_reducts(rules, a, &mut |a2| out(Term::App(g.clone(), Arc::new(a2))));
        }
        Term::Abs(b) | Term::Prod(b) => {
            let make = |domain: Term, body: Term| {
                let binder = Arc::new(crate::term::Binder { name: b.name.clone(), domain, body });
                if matches!(t, Term::Abs(_)) {
                    Term::Abs(binder)
                } else {
                    Term::Prod(binder)
                }
            };
            all_reducts(rules, &b.domain, &mut |d| out(make(d, b.body.clone())));
            all_reducts(rules, &b.body, &mut |body| out(make(b.domain.clone(), body)));
        }
        _ => {}
    }
}

fn contains_subterm(t: &Term, g: &Term) -> bool {
    let mut found = false;
    t.visit(&mut |s| found |= s == g);
    found
}

fn hat_symbol(t: &Term) -> Option<&Name> {
    match t {
        Term::Sym(x) if is_hat(x) => Some(x),
        _ => None,
    }
}

/// Completes closed equations into an interreduced convergent system.
///
/// Equations are taken from a queue and normalized with the rules found so
/// far; equal sides are dropped, others are oriented and every existing
/// rule is interreduced against the new one.
pub fn complete(eqs: &EquationSet, prec: &Precedence) -> Result<GroundRules, CompletionError> {
    let mut queue: VecDeque<Equation> = eqs.iter().cloned().collect();
    let mut rules: Vec<GroundRule> = Vec::new();
    let mut steps = 0;
    while let Some(e) = queue.pop_front() {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(CompletionError::Exhausted(MAX_STEPS));
        }
        for side in [&e.left, &e.right] {
            if !side.free_vars_ordered().is_empty() || !side.is_locally_closed() {
                return Err(CompletionError::NonAlgebraic(print(side)));
            }
        }
        let l = normal_form(&rules, &e.left);
        let r = normal_form(&rules, &e.right);
        if l == r {
            continue;
        }
        let rule = orient(prec, l, r)?;
        let mut kept = Vec::with_capacity(rules.len() + 1);
        for old in rules.drain(..) {
            if contains_subterm(&old.lhs, &rule.lhs) {
                queue.push_back(Equation::new(old.lhs, old.rhs));
            } else {
                kept.push(old);
            }
        }
        kept.push(rule);
        for i in 0..kept.len() {
            let rhs = normal_form(&kept, &kept[i].rhs);
            kept[i].rhs = rhs;
        }
        rules = kept;
    }
    Ok(GroundRules { rules })
}

fn orient(prec: &Precedence, l: Term, r: Term) -> Result<GroundRule, CompletionError> {
    let shown = || format!("{} = {}", print(&l), print(&r));
    if is_closed_algebraic(&l) && is_closed_algebraic(&r) {
        if lpo(prec, &l, &r) {
            return Ok(GroundRule { lhs: l, rhs: r, orientation: Orientation::Lpo });
        }
        if lpo(prec, &r, &l) {
            return Ok(GroundRule { lhs: r, rhs: l, orientation: Orientation::Lpo });
        }
        return Err(CompletionError::Unorientable(shown()));
    }
    for (h, other) in [(&l, &r), (&r, &l)] {
        if let Some(x) = hat_symbol(h) {
            if other.occurs_sym(x) {
                return Err(CompletionError::OccursViolation(shown()));
            }
            return Ok(GroundRule { lhs: h.clone(), rhs: other.clone(), orientation: Orientation::Hat });
        }
    }
    Err(CompletionError::Unorientable(shown()))
}

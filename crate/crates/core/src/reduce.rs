//! Rewriting: first-order matching, β and rule steps, weak-head and full
//! normalization, and conversion.
//!
//! The same engine serves the base theory and the extended theories built
//! while checking a rule, where the completed ground system is appended to
//! the rule set.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::term::{fresh_name, subst, Binder, Name, Substitution, Term};

pub const DEFAULT_FUEL: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReduceError {
    #[error("fuel exhausted after {0} rewrite steps")]
    FuelExhausted(u64),
}

/// Budget of rewrite steps. Every β or rule step consumes one unit.
#[derive(Debug, Clone)]
pub struct Fuel {
    initial: u64,
    remaining: u64,
}

impl Fuel {
    pub fn new(steps: u64) -> Self {
        Fuel { initial: steps, remaining: steps }
    }

    pub fn remaining(&self) -> u64 {
        self.remaining
    }

    pub fn used(&self) -> u64 {
        self.initial - self.remaining
    }

    pub fn tick(&mut self) -> Result<(), ReduceError> {
        if self.remaining == 0 {
            return Err(ReduceError::FuelExhausted(self.initial));
        }
        self.remaining -= 1;
        Ok(())
    }
}

impl Default for Fuel {
    fn default() -> Self {
        Fuel::new(DEFAULT_FUEL)
    }
}

/// A rewrite rule `lhs ↪ rhs` whose left-hand side is headed by a symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub lhs: Term,
    pub rhs: Term,
    pub head: Name,
    pub arity: usize,
    args: Vec<Term>,
}

impl Rule {
    /// `None` when the left-hand side is not headed by a symbol.
    pub fn new(lhs: Term, rhs: Term) -> Option<Rule> {
        let (head, args) = lhs.spine();
        let head = match head {
            Term::Sym(f) => f.clone(),
            _ => return None,
        };
        let args: Vec<Term> = args.into_iter().cloned().collect();
        Some(Rule { arity: args.len(), lhs, rhs, head, args })
    }

    pub fn pattern_args(&self) -> &[Term] {
        &self.args
    }

    pub fn is_left_linear(&self) -> bool {
        let mut seen = Vec::new();
        let mut linear = true;
        self.lhs.visit(&mut |t| {
            if let Term::Var(x) = t {
                if seen.contains(x) {
                    linear = false;
                }
                seen.push(x.clone());
            }
        });
        linear
    }
}

/// Rules indexed by head symbol. Ground rules appended with
/// [`RuleSet::add_ground`] are tried after the ordinary rules of the same
/// head, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct RuleSet {
    by_head: HashMap<Name, Vec<Rule>>,
    order: Vec<Rule>,
    ground: Vec<Rule>,
}

impl RuleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, rule: Rule) {
        self.by_head.entry(rule.head.clone()).or_default().push(rule.clone());
        self.order.push(rule);
    }

    /// Adds a closed rule. Returns `None` if the left-hand side has no head
    /// symbol.
    pub fn add_ground(&mut self, lhs: Term, rhs: Term) -> Option<()> {
        let rule = Rule::new(lhs, rhs)?;
        self.ground.push(rule.clone());
        self.add(rule);
        Some(())
    }

    pub fn rules_for(&self, head: &str) -> &[Rule] {
        self.by_head.get(head).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn is_defined(&self, head: &str) -> bool {
        !self.rules_for(head).is_empty()
    }

    /// All rules in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = &Rule> {
        self.order.iter()
    }

    pub fn ground_rules(&self) -> &[Rule] {
        &self.ground
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Syntactic first-order matching. Repeated pattern variables must be bound
/// to α-equal subterms.
pub fn match_term(pattern: &Term, subject: &Term) -> Option<Substitution> {
    let mut sigma = Substitution::new();
    if match_into(pattern, subject, &mut sigma) {
        Some(sigma)
    } else {
        None
    }
}

fn match_into(p: &Term, s: &Term, sigma: &mut Substitution) -> bool {
    match (p, s) {
        (Term::Var(x), _) => bind(x, s, sigma),
        (Term::App(f, a), Term::App(g, b)) => match_into(f, g, sigma) && match_into(a, b, sigma),
        _ => p == s,
    }
}

fn bind(x: &Name, s: &Term, sigma: &mut Substitution) -> bool {
    if !s.is_locally_closed() {
        return false;
    }
    match sigma.get(x) {
        Some(prev) => prev == s,
        None => {
            sigma.insert(x.clone(), s.clone());
            true
        }
    }
}

/// Matching that weak-head normalizes subject subterms sitting under rigid
/// pattern positions before giving up.
fn match_whnf(
    rs: &RuleSet,
    p: &Term,
    s: &Term,
    fuel: &mut Fuel,
    sigma: &mut Substitution,
) -> Result<bool, ReduceError> {
    if let Term::Var(x) = p {
        return Ok(bind(x, s, sigma));
    }
    let saved = sigma.clone();
    if match_rigid(rs, p, s, fuel, sigma)? {
        return Ok(true);
    }
    *sigma = saved;
    match step_head(rs, s, fuel)? {
        Some(next) => {
            let w = whnf(rs, &next, fuel)?;
            match_rigid(rs, p, &w, fuel, sigma)
        }
        None => Ok(false),
    }
}

fn match_rigid(
    rs: &RuleSet,
    p: &Term,
    s: &Term,
    fuel: &mut Fuel,
    sigma: &mut Substitution,
) -> Result<bool, ReduceError> {
    let (ph, pargs) = p.spine();
    let (sh, sargs) = s.spine();
    if !matches!(ph, Term::Sym(_)) {
        return Ok(p == s);
    }
    if ph != sh || pargs.len() != sargs.len() {
        return Ok(false);
    }
    for (pa, sa) in pargs.into_iter().zip(sargs) {
        if !match_whnf(rs, pa, sa, fuel, sigma)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// One head step (β or a rule at the head of the spine), if any applies.
pub fn step_head(rs: &RuleSet, t: &Term, fuel: &mut Fuel) -> Result<Option<Term>, ReduceError> {
    let (head, args) = t.spine();
    match head {
        Term::Abs(b) if !args.is_empty() => {
            fuel.tick()?;
            let reduct = b.body.instantiate(args[0]);
            Ok(Some(Term::apps(reduct, args[1..].iter().map(|a| (*a).clone()))))
        }
        Term::Sym(f) => {
            for rule in rs.rules_for(f) {
                if rule.arity > args.len() {
                    continue;
                }
                let mut sigma = Substitution::new();
                let mut ok = true;
                for (p, a) in rule.args.iter().zip(&args) {
                    if !match_whnf(rs, p, a, fuel, &mut sigma)? {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    fuel.tick()?;
                    let reduct = subst(&rule.rhs, &sigma);
                    let rest = args[rule.arity..].iter().map(|a| (*a).clone());
                    return Ok(Some(Term::apps(reduct, rest)));
                }
            }
            Ok(None)
        }
        _ => Ok(None),
    }
}

/// Weak-head normal form: no β or rule redex on the head spine.
pub fn whnf(rs: &RuleSet, t: &Term, fuel: &mut Fuel) -> Result<Term, ReduceError> {
    let mut t = t.clone();
    while let Some(next) = step_head(rs, &t, fuel)? {
        t = next;
    }
    Ok(t)
}

fn map_binder(
    b: &Binder,
    f: &mut impl FnMut(&Term) -> Result<Term, ReduceError>,
) -> Result<Binder, ReduceError> {
    let domain = f(&b.domain)?;
    let x = fresh_name(&b.name);
    let opened = b.body.instantiate(&Term::Var(x.clone()));
    let body = f(&opened)?.abstract_var(&x);
    Ok(Binder { name: b.name.clone(), domain, body })
}

/// Full normal form, leftmost-outermost.
pub fn normalize(rs: &RuleSet, t: &Term, fuel: &mut Fuel) -> Result<Term, ReduceError> {
    let w = whnf(rs, t, fuel)?;
    let n = match &w {
        Term::App(..) => {
            let (head, args) = w.spine();
            let head = normalize(rs, head, fuel)?;
            let mut out = head;
            for a in args {
                out = Term::app(out, normalize(rs, a, fuel)?);
            }
            out
        }
        Term::Abs(b) => Term::Abs(Arc::new(map_binder(b, &mut |u| normalize(rs, u, fuel))?)),
        Term::Prod(b) => Term::Prod(Arc::new(map_binder(b, &mut |u| normalize(rs, u, fuel))?)),
        _ => w.clone(),
    };
    if n != w {
        if let Some(next) = step_head(rs, &n, fuel)? {
            return normalize(rs, &next, fuel);
        }
    }
    Ok(n)
}

/// Conversion test, assuming the rewrite relation is convergent.
///
/// Compares weak-head normal forms structurally and falls back to comparing
/// full normal forms when the structural walk fails.
pub fn convertible(rs: &RuleSet, t: &Term, u: &Term, fuel: &mut Fuel) -> Result<bool, ReduceError> {
    if t == u || conv_whnf(rs, t, u, fuel)? {
        return Ok(true);
    }
    Ok(normalize(rs, t, fuel)? == normalize(rs, u, fuel)?)
}

fn conv_whnf(rs: &RuleSet, t: &Term, u: &Term, fuel: &mut Fuel) -> Result<bool, ReduceError> {
    if t == u {
        return Ok(true);
    }
    let t = whnf(rs, t, fuel)?;
    let u = whnf(rs, u, fuel)?;
    if t == u {
        return Ok(true);
    }
    match (&t, &u) {
        (Term::Abs(a), Term::Abs(b)) | (Term::Prod(a), Term::Prod(b)) => {
            if !conv_whnf(rs, &a.domain, &b.domain, fuel)? {
                return Ok(false);
            }
            let x = Term::Var(fresh_name(&a.name));
            conv_whnf(rs, &a.body.instantiate(&x), &b.body.instantiate(&x), fuel)
        }
        (Term::App(..), Term::App(..)) => {
            let (th, targs) = t.spine();
            let (uh, uargs) = u.spine();
            if targs.len() != uargs.len() || !matches!(th, Term::Sym(_) | Term::Var(_)) || th != uh {
                return Ok(false);
            }
            for (a, b) in targs.into_iter().zip(uargs) {
                if !conv_whnf(rs, a, b, fuel)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
        _ => Ok(false),
    }
}

/// All one-step reducts of `t`, at every position, β included. Duplicates
/// are removed; order is deterministic.
pub fn reducts(rs: &RuleSet, t: &Term) -> Vec<Term> {
    let mut out = Vec::new();
    reducts_into(rs, t, &mut out);
    let mut unique: Vec<Term> = Vec::with_capacity(out.len());
    for r in out {
        if !unique.contains(&r) {
            unique.push(r);
        }
    }
    unique
}

fn reducts_into(rs: &RuleSet, t: &Term, out: &mut Vec<Term>) {
    if let Term::App(f, a) = t {
        if let Term::Abs(b) = &**f {
            out.push(b.body.instantiate(a));
        }
    }
    let (head, args) = t.spine();
    if let Term::Sym(f) = head {
        for rule in rs.rules_for(f) {
            if rule.arity == args.len() {
                if let Some(sigma) = match_term(&rule.lhs, t) {
                    out.push(subst(&rule.rhs, &sigma));
                }
            }
        }
    }
    match t {
        Term::App(f, a) => {
            for r in reducts(rs, f) {
                out.push(Term::App(Arc::new(r), a.clone()));
            }
            for r in reducts(rs, a) {
                out.push(Term::App(f.clone(), Arc::new(r)));
            }
        }
        Term::Abs(b) | Term::Prod(b) => {
            let rebuild = |domain: Term, body: Term| {
                let nb = Arc::new(Binder { name: b.name.clone(), domain, body });
                if matches!(t, Term::Abs(_)) {
                    Term::Abs(nb)
                } else {
                    Term::Prod(nb)
                }
            };
            for r in reducts(rs, &b.domain) {
                out.push(rebuild(r, b.body.clone()));
            }
            let x = fresh_name(&b.name);
            let opened = b.body.instantiate(&Term::Var(x.clone()));
            for r in reducts(rs, &opened) {
                out.push(rebuild(b.domain.clone(), r.abstract_var(&x)));
            }
        }
        _ => {}
    }
}

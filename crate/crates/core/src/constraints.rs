//! Typability constraints of rule left-hand sides and their simplification.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::reduce::{convertible, normalize, reducts, whnf, Fuel, ReduceError, RuleSet};
use crate::signature::Signature;
use crate::syntax::print;
use crate::term::{name, Name, Term};
use crate::typing::Environment;

/// Combining circumflex appended to a variable name to form its hat. It is
/// not an identifier character, so hats never clash with user names.
pub const HAT: char = '\u{302}';

pub const MAX_PASSES: usize = 100;

/// Node budget of the search deciding side conditions of injectivity.
const SEARCH_LIMIT: usize = 400;

pub fn hat(x: &str) -> Name {
    name(&format!("{x}{HAT}"))
}

pub fn is_hat(x: &str) -> bool {
    x.ends_with(HAT)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Equation {
    pub left: Term,
    pub right: Term,
}

impl Equation {
    pub fn new(left: Term, right: Term) -> Self {
        Equation { left, right }
    }

    pub fn is_trivial(&self) -> bool {
        self.left == self.right
    }

    /// Equal up to swapping the sides.
    pub fn same_as(&self, other: &Equation) -> bool {
        self == other || (self.left == other.right && self.right == other.left)
    }

    pub fn map(&self, f: impl Fn(&Term) -> Term) -> Equation {
        Equation::new(f(&self.left), f(&self.right))
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", print(&self.left), print(&self.right))
    }
}

/// Equations in a deterministic order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EquationSet {
    eqs: Vec<Equation>,
}

impl EquationSet {
    pub fn new() -> Self {
        EquationSet::default()
    }

    /// Appends without checking for duplicates.
    pub fn push(&mut self, e: Equation) {
        self.eqs.push(e);
    }

    /// Adds `e` unless it is already present up to symmetry.
    pub fn insert(&mut self, e: Equation) -> bool {
        if self.contains(&e) {
            return false;
        }
        self.eqs.push(e);
        true
    }

    pub fn contains(&self, e: &Equation) -> bool {
        self.eqs.iter().any(|f| f.same_as(e))
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Equation> {
        self.eqs.iter()
    }

    pub fn len(&self) -> usize {
        self.eqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eqs.is_empty()
    }

    /// Same equations up to order, symmetry and repetition.
    pub fn same_set(&self, other: &EquationSet) -> bool {
        self.iter().all(|e| other.contains(e)) && other.iter().all(|e| self.contains(e))
    }

    pub fn lines(&self) -> Vec<String> {
        self.iter().map(|e| e.to_string()).collect()
    }

    pub fn map(&self, f: impl Fn(&Term) -> Term) -> EquationSet {
        self.iter().map(|e| e.map(&f)).collect()
    }
}

impl FromIterator<Equation> for EquationSet {
    fn from_iter<I: IntoIterator<Item = Equation>>(iter: I) -> Self {
        let mut set = EquationSet::new();
        for e in iter {
            set.insert(e);
        }
        set
    }
}

impl<'a> IntoIterator for &'a EquationSet {
    type Item = &'a Equation;
    type IntoIter = std::slice::Iter<'a, Equation>;

    fn into_iter(self) -> Self::IntoIter {
        self.eqs.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintError {
    #[error("not a pattern: {0}")]
    NotAPattern(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(Name),
    #[error("`{symbol}` is applied to {supplied} argument(s) but its type exposes only {exposed} product(s)")]
    ArityOverflow { symbol: Name, exposed: usize, supplied: usize },
    #[error("simplification did not stabilise within {0} passes")]
    NonTermination(usize),
    #[error(transparent)]
    Reduce(#[from] ReduceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintResult {
    pub inferred_type: Term,
    pub equations: EquationSet,
    /// Free variables of the pattern paired with their hats, in order of
    /// first occurrence.
    pub hat_map: Vec<(Name, Name)>,
    /// `ŷ1 : TYPE, y1 : ŷ1, ...`
    pub delta_env: Environment,
}

impl ConstraintResult {
    pub fn variables(&self) -> impl Iterator<Item = &Name> {
        self.hat_map.iter().map(|(x, _)| x)
    }
}

pub fn infer_constraints(sig: &Signature, l: &Term) -> Result<ConstraintResult, ConstraintError> {
    if l.head_symbol().is_none() {
        return Err(ConstraintError::NotAPattern(format!("{} is not headed by a symbol", print(l))));
    }
    let mut equations = EquationSet::new();
    let mut fuel = sig.fuel();
    let inferred_type = up(sig, l, &mut equations, &mut fuel)?;
    let hat_map: Vec<(Name, Name)> = l.free_vars_ordered().into_iter().map(|x| (x.clone(), hat(&x))).collect();
    let mut delta_env = Environment::new();
    for (x, h) in &hat_map {
        delta_env.push(h.clone(), Term::star());
        delta_env.push(x.clone(), Term::Var(h.clone()));
    }
    Ok(ConstraintResult { inferred_type, equations, hat_map, delta_env })
}

fn up(sig: &Signature, t: &Term, eqs: &mut EquationSet, fuel: &mut Fuel) -> Result<Term, ConstraintError> {
    let (head, args) = t.spine();
    match head {
        Term::Var(y) if args.is_empty() => Ok(Term::Var(hat(y))),
        Term::Sym(f) => {
            let info = sig.symbol(f).ok_or_else(|| ConstraintError::UnknownSymbol(f.clone()))?;
            let mut ty = info.ty.clone();
            let mut own = Vec::with_capacity(args.len());
            for (i, a) in args.iter().enumerate() {
                let Term::Prod(b) = whnf(sig.rules(), &ty, fuel)? else {
                    return Err(ConstraintError::ArityOverflow { symbol: f.clone(), exposed: i, supplied: args.len() });
                };
                let found = up(sig, a, eqs, fuel)?;
                own.push(Equation::new(found, b.domain.clone()));
                ty = b.body.instantiate(a);
            }
            for e in own {
                eqs.push(e);
            }
            Ok(ty)
        }
        _ => Err(ConstraintError::NotAPattern(format!("{} is not algebraic", print(t)))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simplified {
    pub equations: EquationSet,
    /// Defined symbols whose declared injectivity was relied upon.
    pub injectivity_used: BTreeSet<Name>,
    /// Variables introduced when splitting dependent products, with the
    /// domain they range over.
    pub introduced: Vec<(Name, Term)>,
    pub passes: usize,
}

/// Fixpoint of the simplification rules: each pass normalizes every side,
/// splits equal products, then decomposes injective applications.
pub fn simplify(sig: &Signature, eqs: &EquationSet, fuel: &mut Fuel) -> Result<Simplified, ConstraintError> {
    let mut s = Simplifier::new(sig, fuel.clone());
    let out = s.run(eqs);
    *fuel = s.fuel;
    let (equations, passes) = out?;
    Ok(Simplified { equations, injectivity_used: s.used, introduced: s.introduced, passes })
}

/// One application of one simplification rule, or `None` when none applies.
pub fn simplify_step(sig: &Signature, eqs: &EquationSet, fuel: &mut Fuel) -> Result<Option<EquationSet>, ConstraintError> {
    let mut s = Simplifier::new(sig, fuel.clone());
    let out = s.step(eqs);
    *fuel = s.fuel;
    out
}

struct Simplifier<'a> {
    sig: &'a Signature,
    fuel: Fuel,
    fresh: usize,
    used: BTreeSet<Name>,
    introduced: Vec<(Name, Term)>,
}

impl<'a> Simplifier<'a> {
    fn new(sig: &'a Signature, fuel: Fuel) -> Self {
        Simplifier { sig, fuel, fresh: 0, used: BTreeSet::new(), introduced: Vec::new() }
    }

    fn rules(&self) -> &'a RuleSet {
        self.sig.rules()
    }

    fn run(&mut self, eqs: &EquationSet) -> Result<(EquationSet, usize), ConstraintError> {
        let mut current: EquationSet = eqs.iter().cloned().collect();
        for pass in 1..=MAX_PASSES {
            let mut normal = EquationSet::new();
            for e in &current {
                let l = normalize(self.rules(), &e.left, &mut self.fuel)?;
                let r = normalize(self.rules(), &e.right, &mut self.fuel)?;
                normal.insert(Equation::new(l, r));
            }
            let mut split = EquationSet::new();
            let mut work: VecDeque<Equation> = normal.iter().cloned().collect();
            while let Some(e) = work.pop_front() {
                match self.decompose_product(&e) {
                    Some(parts) => {
                        for p in parts.into_iter().rev() {
                            work.push_front(p);
                        }
                    }
                    None => {
                        split.insert(e);
                    }
                }
            }
            let mut next = EquationSet::new();
            for e in &split {
                match self.decompose_injective(e, &split)? {
                    Some(parts) => parts.into_iter().for_each(|p| {
                        next.insert(p);
                    }),
                    None => {
                        next.insert(e.clone());
                    }
                }
            }
            if next == current {
                return Ok((next, pass));
            }
            current = next;
        }
        Err(ConstraintError::NonTermination(MAX_PASSES))
    }

    fn step(&mut self, eqs: &EquationSet) -> Result<Option<EquationSet>, ConstraintError> {
        for (i, e) in eqs.iter().enumerate() {
            let replaced = if let Some(l) = reducts(self.rules(), &e.left).into_iter().next() {
                Some(vec![Equation::new(l, e.right.clone())])
            } else if let Some(r) = reducts(self.rules(), &e.right).into_iter().next() {
                Some(vec![Equation::new(e.left.clone(), r)])
            } else if let Some(parts) = self.decompose_product(e) {
                Some(parts)
            } else {
                self.decompose_injective(e, eqs)?
            };
            if let Some(parts) = replaced {
                let mut out: EquationSet = eqs.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, f)| f.clone()).collect();
                for p in parts {
                    out.insert(p);
                }
                return Ok(Some(out));
            }
        }
        Ok(None)
    }

    fn decompose_product(&mut self, e: &Equation) -> Option<Vec<Equation>> {
        if e.is_trivial() {
            return None;
        }
        let (Term::Prod(a), Term::Prod(b)) = (&e.left, &e.right) else { return None };
        let x = if a.body.uses_bound() || b.body.uses_bound() {
            self.fresh += 1;
            let hint = if &*a.name == "_" { "x" } else { &a.name };
            let x = name(&format!("{hint}\u{b7}{}", self.fresh));
            self.introduced.push((x.clone(), a.domain.clone()));
            Term::Var(x)
        } else {
            Term::star()
        };
        Some(vec![
            Equation::new(a.domain.clone(), b.domain.clone()),
            Equation::new(a.body.instantiate(&x), b.body.instantiate(&x)),
        ])
    }

    fn decompose_injective(&mut self, e: &Equation, context: &EquationSet) -> Result<Option<Vec<Equation>>, ConstraintError> {
        if e.is_trivial() {
            return Ok(None);
        }
        let (f, ts) = e.left.spine();
        let (g, us) = e.right.spine();
        let (Term::Sym(f), Term::Sym(g)) = (f, g) else { return Ok(None) };
        if f != g || ts.len() != us.len() || ts.is_empty() {
            return Ok(None);
        }
        let injective = self.sig.injective_positions(f, ts.len());
        if injective.is_empty() {
            return Ok(None);
        }
        for i in 1..=ts.len() {
            if !injective.contains(&i) && !self.equal_modulo(ts[i - 1], us[i - 1], context)? {
                return Ok(None);
            }
        }
        if self.sig.is_defined(f) {
            self.used.insert(f.clone());
        }
        Ok(Some(injective.iter().map(|&i| Equation::new(ts[i - 1].clone(), us[i - 1].clone())).collect()))
    }

    /// Conservative test of `t ≃ u` modulo the rules and the equations:
    /// conversion first, then a bounded search from both ends with the
    /// equations used in both directions. Undecided counts as false.
    fn equal_modulo(&mut self, t: &Term, u: &Term, context: &EquationSet) -> Result<bool, ConstraintError> {
        if t == u || convertible(self.rules(), t, u, &mut self.fuel)? {
            return Ok(true);
        }
        let mut rules = self.rules().clone();
        for e in context {
            let (l, r) = (freeze_all(&e.left), freeze_all(&e.right));
            rules.add_ground(l.clone(), r.clone());
            rules.add_ground(r, l);
        }
        Ok(joinable(&rules, &freeze_all(t), &freeze_all(u), SEARCH_LIMIT))
    }
}

/// Turns every variable into a constant that cannot be written in source.
fn freeze_all(t: &Term) -> Term {
    t.map_leaves(&|s| match s {
        Term::Var(x) => Some(Term::Sym(name(&format!("${x}")))),
        _ => None,
    })
}

/// Breadth-first search from both ends for a common reduct.
fn joinable(rules: &RuleSet, t: &Term, u: &Term, limit: usize) -> bool {
    let mut seen = [HashSet::from([t.clone()]), HashSet::from([u.clone()])];
    let mut queues = [VecDeque::from([t.clone()]), VecDeque::from([u.clone()])];
    let mut expanded = 0;
    while expanded < limit && !(queues[0].is_empty() && queues[1].is_empty()) {
        for side in 0..2 {
            let Some(s) = queues[side].pop_front() else { continue };
            expanded += 1;
            for next in reducts(rules, &s) {
                if seen[1 - side].contains(&next) {
                    return true;
                }
                if seen[side].insert(next.clone()) {
                    queues[side].push_back(next);
                }
            }
        }
    }
    false
}

/// Maps the variables of a rule (and the fresh variables introduced by
/// simplification) to constants, and hats to constants of the same name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Freezer {
    map: BTreeMap<Name, Name>,
    order: Vec<(Name, Name)>,
}

impl Freezer {
    /// Frozen names avoid the signature's symbols and each other; a
    /// variable keeps its name when that is free.
    pub fn new(sig: &Signature, vars: &[Name]) -> Self {
        let mut taken: BTreeSet<String> = BTreeSet::new();
        let mut fz = Freezer::default();
        for x in vars {
            if fz.map.contains_key(x) {
                continue;
            }
            let base: String = x.chars().map(|c| if c == '\u{b7}' { '_' } else { c }).collect();
            let mut candidate = base.clone();
            let mut k = 0;
            while sig.contains(&candidate) || taken.contains(&candidate) {
                k += 1;
                candidate = format!("{base}_{k}");
            }
            taken.insert(candidate.clone());
            let frozen = name(&candidate);
            fz.map.insert(x.clone(), frozen.clone());
            fz.order.push((x.clone(), frozen));
        }
        fz
    }

    pub fn frozen_name(&self, x: &str) -> Option<&Name> {
        self.map.get(x)
    }

    /// Variable/constant pairs in the order given at construction.
    pub fn entries(&self) -> &[(Name, Name)] {
        &self.order
    }

    pub fn freeze(&self, t: &Term) -> Term {
        t.map_leaves(&|s| match s {
            Term::Var(x) if is_hat(x) => Some(Term::Sym(x.clone())),
            Term::Var(x) => self.map.get(x).map(|c| Term::Sym(c.clone())),
            _ => None,
        })
    }

    pub fn freeze_set(&self, eqs: &EquationSet) -> EquationSet {
        eqs.map(|t| self.freeze(t))
    }
}

/// Variables of the equations in order of first occurrence (hats excluded).
pub fn equation_variables(eqs: &EquationSet) -> Vec<Name> {
    let mut out: Vec<Name> = Vec::new();
    for e in eqs {
        for t in [&e.left, &e.right] {
            for x in t.free_vars_ordered() {
                if !is_hat(&x) && !out.contains(&x) {
                    out.push(x);
                }
            }
        }
    }
    out
}

/// Hats of the equations in order of first occurrence.
pub fn equation_hats(eqs: &EquationSet) -> Vec<Name> {
    let mut out: Vec<Name> = Vec::new();
    for e in eqs {
        for t in [&e.left, &e.right] {
            for x in t.free_vars_ordered() {
                if is_hat(&x) && !out.contains(&x) {
                    out.push(x);
                }
            }
        }
    }
    out
}

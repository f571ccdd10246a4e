//! The signature: declared symbols with their types and sorts, plus the
//! rewrite rules defining them.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

pub use crate::reduce::Rule;
pub use crate::syntax::Injectivity;

use crate::reduce::{whnf, Fuel, ReduceError, RuleSet, DEFAULT_FUEL};
use crate::syntax::{print, print_rule, SymbolDecl};
use crate::term::{fresh_name, positions, rename_apart, subterm_at, unify, Name, Position, Sort, Term};
use crate::typing::{Environment, TypeError, Typer};

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolInfo {
    pub name: Name,
    pub ty: Term,
    pub sort: Sort,
    pub constant: bool,
    /// Declared injectivity; `None` when nothing was declared.
    pub injective: Option<Injectivity>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SignatureError {
    #[error("symbol `{0}` is already declared")]
    DuplicateSymbol(Name),
    #[error("unknown symbol `{symbol}` in {context}")]
    UnknownSymbol { symbol: Name, context: String },
    #[error("ill-typed declaration of `{name}`: {reason}")]
    IllTypedDeclaration { name: Name, reason: String },
    #[error("left-hand side of `{rule}` is not a pattern: {reason}")]
    LhsNotPattern { rule: String, reason: String },
    #[error("variable ${var} of the right-hand side does not occur in the left-hand side of `{rule}`")]
    FreeRhsVariable { rule: String, var: Name },
    #[error("`{head}` is declared constant and cannot head the rule `{rule}`")]
    ConstantHead { rule: String, head: Name },
}

#[derive(Debug, Clone)]
pub struct Signature {
    symbols: Vec<SymbolInfo>,
    index: HashMap<Name, usize>,
    rules: RuleSet,
    fuel: u64,
}

impl Default for Signature {
    fn default() -> Self {
        Signature::new()
    }
}

impl Signature {
    pub fn new() -> Self {
        Signature::with_fuel(DEFAULT_FUEL)
    }

    /// Signature whose internal reductions (type checking of declarations,
    /// pattern checks) run with the given step budget.
    pub fn with_fuel(fuel: u64) -> Self {
        Signature { symbols: Vec::new(), index: HashMap::new(), rules: RuleSet::new(), fuel }
    }

    pub fn fuel(&self) -> Fuel {
        Fuel::new(self.fuel)
    }

    pub fn fuel_budget(&self) -> u64 {
        self.fuel
    }

    pub fn symbol(&self, f: &str) -> Option<&SymbolInfo> {
        self.index.get(f).map(|&i| &self.symbols[i])
    }

    pub fn contains(&self, f: &str) -> bool {
        self.index.contains_key(f)
    }

    /// Symbols in declaration order.
    pub fn symbols(&self) -> &[SymbolInfo] {
        &self.symbols
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    /// Undefined symbols (heading no rule) are injective on every argument.
    pub fn is_defined(&self, f: &str) -> bool {
        self.rules.is_defined(f)
    }

    pub fn declare(&mut self, d: &SymbolDecl) -> Result<&SymbolInfo, SignatureError> {
        self.declare_symbol(&d.name, d.ty.clone(), d.constant, d.injective.clone())
    }

    /// Registers `f : ty` after checking that `ty` is closed, mentions only
    /// declared symbols and has a sort in the empty environment.
    pub fn declare_symbol(
        &mut self,
        f: &str,
        ty: Term,
        constant: bool,
        injective: Option<Injectivity>,
    ) -> Result<&SymbolInfo, SignatureError> {
        let name = crate::term::name(f);
        if self.contains(f) {
            return Err(SignatureError::DuplicateSymbol(name));
        }
        self.check_known(&ty, &format!("the type of `{f}`"))?;
        let ill = |reason: String| SignatureError::IllTypedDeclaration { name: name.clone(), reason };
        if let Some(x) = ty.free_vars_ordered().first() {
            return Err(ill(format!("the type mentions the variable ${x}")));
        }
        let mut typer = Typer::new(self, &self.rules, self.fuel());
        let sort = typer.infer(&Environment::new(), &ty).map_err(|e| ill(e.to_string()))?;
        let sort = whnf(&self.rules, &sort, &mut self.fuel()).map_err(|e| ill(e.to_string()))?;
        let sort = match sort {
            Term::Sort(s) => s,
            other => return Err(ill(format!("{} has type {}, which is not a sort", print(&ty), print(&other)))),
        };
        let info = SymbolInfo { name: name.clone(), ty, sort, constant, injective };
        self.index.insert(name, self.symbols.len());
        self.symbols.push(info);
        Ok(self.symbols.last().expect("just pushed"))
    }

    fn check_known(&self, t: &Term, context: &str) -> Result<(), SignatureError> {
        for f in t.symbols() {
            if !self.contains(&f) {
                return Err(SignatureError::UnknownSymbol { symbol: f, context: context.to_string() });
            }
        }
        Ok(())
    }

    /// Number of leading products of `f`'s type, looking through weak-head
    /// reduction, capped at `limit`.
    pub fn exposed_arity(&self, f: &str, limit: usize) -> Result<usize, ReduceError> {
        let Some(info) = self.symbol(f) else { return Ok(0) };
        let mut ty = info.ty.clone();
        let mut fuel = self.fuel();
        let mut n = 0;
        while n < limit {
            match whnf(&self.rules, &ty, &mut fuel)? {
                Term::Prod(b) => {
                    ty = b.body.instantiate(&Term::Var(fresh_name(&b.name)));
                    n += 1;
                }
                _ => break,
            }
        }
        Ok(n)
    }

    /// A rule variable, or a symbol applied to algebraic terms whose type
    /// has at least as many products as there are arguments.
    pub fn is_algebraic(&self, t: &Term) -> bool {
        self.algebraic_reason(t, false).is_none()
    }

    /// Algebraic with every symbol of sort ★.
    pub fn is_object_algebraic(&self, t: &Term) -> bool {
        self.algebraic_reason(t, true).is_none()
    }

    /// A symbol applied to object-level algebraic terms.
    pub fn is_pattern(&self, t: &Term) -> bool {
        self.pattern_reason(t).is_none()
    }

    fn algebraic_reason(&self, t: &Term, object: bool) -> Option<String> {
        let (head, args) = t.spine();
        match head {
            Term::Var(x) if args.is_empty() => None,
            Term::Var(x) => Some(format!("the variable ${x} is applied")),
            Term::Sym(f) => {
                let Some(info) = self.symbol(f) else {
                    return Some(format!("`{f}` is not declared"));
                };
                if object && info.sort != Sort::Star {
                    return Some(format!("`{f}` is not of sort TYPE"));
                }
                match self.exposed_arity(f, args.len()) {
                    Ok(n) if n >= args.len() => {}
                    Ok(n) => {
                        return Some(format!("`{f}` takes {n} argument(s) but is applied to {}", args.len()))
                    }
                    Err(e) => return Some(e.to_string()),
                }
                args.iter().find_map(|a| self.algebraic_reason(a, object))
            }
            _ => Some(format!("`{}` is not algebraic", print(t))),
        }
    }

    fn pattern_reason(&self, t: &Term) -> Option<String> {
        let (head, args) = t.spine();
        let Term::Sym(f) = head else {
            return Some("it is not headed by a symbol".to_string());
        };
        if let Some(why) = self.algebraic_reason(&Term::apps(head.clone(), std::iter::empty()), false) {
            return Some(why);
        }
        match self.exposed_arity(f, args.len()) {
            Ok(n) if n >= args.len() => {}
            Ok(n) => return Some(format!("`{f}` takes {n} argument(s) but is applied to {}", args.len())),
            Err(e) => return Some(e.to_string()),
        }
        args.iter().find_map(|a| self.algebraic_reason(a, true))
    }

    /// Stores `lhs ↪ rhs` after checking the head, the pattern condition and
    /// that every right-hand side variable is bound by the left-hand side.
    pub fn add_rule(&mut self, lhs: Term, rhs: Term) -> Result<&Rule, SignatureError> {
        let shown = print_rule(&lhs, &rhs);
        self.check_known(&lhs, &format!("rule `{shown}`"))?;
        self.check_known(&rhs, &format!("rule `{shown}`"))?;
        if let Some(f) = lhs.head_symbol() {
            if self.symbol(f).is_some_and(|i| i.constant) {
                return Err(SignatureError::ConstantHead { rule: shown, head: f.clone() });
            }
        }
        if let Some(reason) = self.pattern_reason(&lhs) {
            return Err(SignatureError::LhsNotPattern { rule: shown, reason });
        }
        let bound = lhs.free_vars_ordered();
        if let Some(x) = rhs.free_vars_ordered().into_iter().find(|x| !bound.contains(x)) {
            return Err(SignatureError::FreeRhsVariable { rule: shown, var: x });
        }
        let rule = Rule::new(lhs, rhs).expect("patterns are headed by a symbol");
        self.rules.add(rule);
        Ok(self.rules.iter().last().expect("just added"))
    }

    /// Appends a closed rule without pattern checks (used for extended
    /// theories).
    pub fn add_ground_rule(&mut self, lhs: Term, rhs: Term) -> Option<()> {
        self.rules.add_ground(lhs, rhs)
    }

    /// Argument positions (1-based) on which `f` applied to `nargs`
    /// arguments may be decomposed: all of them for undefined symbols, the
    /// declared ones otherwise (only at the declared arity).
    pub fn injective_positions(&self, f: &str, nargs: usize) -> BTreeSet<usize> {
        if !self.is_defined(f) {
            return (1..=nargs).collect();
        }
        let Some(decl) = self.symbol(f).and_then(|i| i.injective.as_ref()) else {
            return BTreeSet::new();
        };
        let arity = self.exposed_arity(f, usize::MAX).unwrap_or(0);
        if arity != nargs {
            return BTreeSet::new();
        }
        match decl {
            Injectivity::All => (1..=nargs).collect(),
            Injectivity::Positions(ps) => ps.iter().copied().filter(|&i| i <= nargs).collect(),
        }
    }

    /// Re-checks every stored type against its recorded sort.
    pub fn recheck(&self) -> Result<(), TypeError> {
        let mut typer = Typer::new(self, &self.rules, self.fuel());
        for info in &self.symbols {
            typer.check(&Environment::new(), &info.ty, &Term::Sort(info.sort))?;
        }
        Ok(())
    }

    pub fn confluence_diagnostics(&self) -> ConfluenceReport {
        let rules: Vec<&Rule> = self.rules.iter().collect();
        let non_left_linear = rules
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.is_left_linear())
            .map(|(i, _)| i)
            .collect();
        let mut overlaps = Vec::new();
        for (i, outer) in rules.iter().enumerate() {
            for p in positions(&outer.lhs) {
                let sub = subterm_at(&outer.lhs, &p).expect("own position");
                if matches!(sub, Term::Var(_)) {
                    continue;
                }
                for (j, inner) in rules.iter().enumerate() {
                    if i == j && p.0.is_empty() {
                        continue;
                    }
                    let renamed = rename_apart(&inner.lhs, "'2");
                    if let Some(mgu) = unify(&sub, &renamed) {
                        let instance = crate::term::subst(&outer.lhs, &mgu);
                        overlaps.push(Overlap { outer: i, inner: j, position: p.clone(), instance });
                    }
                }
            }
        }
        ConfluenceReport {
            rules: rules.iter().map(|r| print_rule(&r.lhs, &r.rhs)).collect(),
            non_left_linear,
            overlaps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Overlap {
    /// Rule whose left-hand side contains the overlapping subterm.
    pub outer: usize,
    pub inner: usize,
    pub position: Position,
    /// Instance of the outer left-hand side on which both rules apply.
    pub instance: Term,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfluenceReport {
    pub rules: Vec<String>,
    pub non_left_linear: Vec<usize>,
    pub overlaps: Vec<Overlap>,
}

impl ConfluenceReport {
    pub fn is_orthogonal(&self) -> bool {
        self.non_left_linear.is_empty() && self.overlaps.is_empty()
    }

    pub fn lines(&self) -> Vec<String> {
        if self.is_orthogonal() {
            return vec!["orthogonal: confluence assumption discharged".to_string()];
        }
        let mut out = Vec::new();
        for &i in &self.non_left_linear {
            out.push(format!("rule `{}` is not left-linear", self.rules[i]));
        }
        for o in &self.overlaps {
            out.push(format!(
                "rule `{}` overlaps rule `{}` at position {} (on {})",
                self.rules[o.inner],
                self.rules[o.outer],
                o.position,
                print(&o.instance)
            ));
        }
        out.push("warning: confluence remains an assumption".to_string());
        out
    }
}

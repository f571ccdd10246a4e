//! Per-rule subject-reduction verdicts.
//!
//! A rule `l ↪ r` is accepted when `r` has the type inferred for `l` in the
//! system where the variables of `l` are constants and the (simplified,
//! completed) typability constraints of `l` are extra rewrite rules.

use thiserror::Error;

use crate::completion::{complete, GroundRules, Orientation, Precedence};
use crate::constraints::{
    equation_hats, equation_variables, infer_constraints, simplify, ConstraintResult, EquationSet, Freezer,
};
use crate::reduce::{reducts, Fuel, Rule, DEFAULT_FUEL};
use crate::signature::{ConfluenceReport, Signature};
use crate::syntax::print;
use crate::term::{positions, subterm_at, unify, Name, Term};
use crate::typing::{Environment, Typer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Status {
    Accepted,
    Rejected,
    Inapplicable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOptions {
    pub fuel: u64,
    /// Names to reorder in the default precedence, highest first.
    pub precedence: Option<Vec<Name>>,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { fuel: DEFAULT_FUEL, precedence: None }
    }
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub index: usize,
    pub head: Name,
    pub rule: String,
    pub status: Status,
    pub reasons: Vec<String>,
    pub inferred_type: Option<Term>,
    pub equations: EquationSet,
    pub simplified: EquationSet,
    pub freezer: Freezer,
    pub precedence: Option<Precedence>,
    pub ground_rules: GroundRules,
    pub postponement: Vec<PostponementItem>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

impl Verdict {
    fn new(index: usize, rule: &Rule) -> Self {
        Verdict {
            index,
            head: rule.head.clone(),
            rule: crate::syntax::print_rule(&rule.lhs, &rule.rhs),
            status: Status::Inapplicable,
            reasons: Vec::new(),
            inferred_type: None,
            equations: EquationSet::new(),
            simplified: EquationSet::new(),
            freezer: Freezer::default(),
            precedence: None,
            ground_rules: GroundRules::default(),
            postponement: Vec::new(),
            warnings: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn inapplicable(mut self, reason: impl ToString) -> Self {
        self.status = Status::Inapplicable;
        self.reasons.push(reason.to_string());
        self
    }

    pub fn is_accepted(&self) -> bool {
        self.status == Status::Accepted
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtensionError {
    #[error("name collision while extending the signature: {0}")]
    NameCollision(String),
    #[error("ground rule {0} has no head symbol")]
    Headless(String),
}

/// The signature extended with frozen variables, their hats and the
/// completed constraints.
#[derive(Debug, Clone)]
pub struct ExtendedSystem {
    pub sig: Signature,
    pub freezer: Freezer,
}

impl ExtendedSystem {
    pub fn freeze(&self, t: &Term) -> Term {
        self.freezer.freeze(t)
    }

    /// Checks `r : ty` (both unfrozen) in the empty environment.
    pub fn check(&self, r: &Term, ty: &Term, fuel: u64) -> Result<(), crate::typing::TypeError> {
        let mut typer = Typer::new(&self.sig, self.sig.rules(), Fuel::new(fuel));
        typer.check(&Environment::new(), &self.freeze(r), &self.freeze(ty))
    }
}

/// Installs `x̂ : TYPE` and `x : x̂` for every pattern variable, the ground
/// rules of `d`, then the variables introduced by simplification.
pub fn build_extended(
    sig: &Signature,
    constraints: &ConstraintResult,
    freezer: &Freezer,
    introduced: &[(Name, Term)],
    d: &GroundRules,
) -> Result<ExtendedSystem, ExtensionError> {
    let mut ext = sig.clone();
    let collision = |e: crate::signature::SignatureError| ExtensionError::NameCollision(e.to_string());
    let frozen = |x: &Name| freezer.frozen_name(x).cloned().unwrap_or_else(|| x.clone());
    for (_, h) in &constraints.hat_map {
        ext.declare_symbol(h, Term::star(), true, None).map_err(collision)?;
    }
    for (x, h) in &constraints.hat_map {
        ext.declare_symbol(&frozen(x), Term::Sym(h.clone()), true, None).map_err(collision)?;
    }
    for r in d.iter() {
        ext.add_ground_rule(r.lhs.clone(), r.rhs.clone()).ok_or_else(|| ExtensionError::Headless(r.to_string()))?;
    }
    for (y, domain) in introduced {
        ext.declare_symbol(&frozen(y), freezer.freeze(domain), true, None).map_err(collision)?;
    }
    Ok(ExtendedSystem { sig: ext, freezer: freezer.clone() })
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct PostponementItem {
    pub condition: char,
    /// `None` when the condition is assumed rather than checked.
    pub holds: Option<bool>,
    pub detail: String,
}

/// Syntactic conditions under which steps of `d` can be postponed after
/// β and rule steps, so that termination of the union follows from
/// termination of both parts.
pub fn postponement_report(sig: &Signature, d: &GroundRules) -> Vec<PostponementItem> {
    let item = |condition, holds, detail: String| PostponementItem { condition, holds, detail };
    let rules: Vec<&Rule> = sig.rules().iter().collect();
    let mut out = vec![item('a', None, "termination of β and the rules, and of the ground rules, is assumed".into())];

    let non_linear: Vec<String> =
        rules.iter().filter(|r| !r.is_left_linear()).map(|r| crate::syntax::print_rule(&r.lhs, &r.rhs)).collect();
    out.push(if non_linear.is_empty() {
        item('b', Some(true), "the rules are left-linear".into())
    } else {
        item('b', Some(false), format!("not left-linear: {}", non_linear.join("; ")))
    });

    let open: Vec<String> = d
        .iter()
        .filter(|r| !r.lhs.free_vars_ordered().is_empty() || !r.rhs.free_vars_ordered().is_empty())
        .map(|r| r.to_string())
        .collect();
    assert!(open.is_empty(), "completion produced open rules: {open:?}");
    out.push(item('c', Some(true), "the ground rules are closed".into()));

    let mut bad = Vec::new();
    for r in d.iter() {
        if matches!(r.rhs, Term::Abs(_)) {
            bad.push(format!("{} is headed by an abstraction", print(&r.rhs)));
        } else if !reducts(sig.rules(), &r.rhs).is_empty() {
            bad.push(format!("{} is reducible", print(&r.rhs)));
        }
    }
    out.push(if bad.is_empty() {
        item('d', Some(true), "no ground right-hand side is reducible or an abstraction".into())
    } else {
        item('d', Some(false), bad.join("; "))
    });

    let mut clashes = Vec::new();
    for r in d.iter() {
        for rule in &rules {
            for p in positions(&rule.lhs) {
                let sub = subterm_at(&rule.lhs, &p).expect("own position");
                if !matches!(sub, Term::Var(_)) && unify(&r.rhs, &sub).is_some() {
                    clashes.push(format!("{} unifies with {} in {}", print(&r.rhs), print(&sub), print(&rule.lhs)));
                }
            }
        }
    }
    out.push(if clashes.is_empty() {
        item('e', Some(true), "no ground right-hand side unifies with a left-hand side subterm".into())
    } else {
        item('e', Some(false), clashes.join("; "))
    });
    out
}

pub fn check_rule(sig: &Signature, index: usize, rule: &Rule, opts: &CheckOptions) -> Verdict {
    let mut v = Verdict::new(index, rule);
    let constraints = match infer_constraints(sig, &rule.lhs) {
        Ok(c) => c,
        Err(e) => return v.inapplicable(e),
    };
    v.inferred_type = Some(constraints.inferred_type.clone());
    v.equations = constraints.equations.clone();

    let mut fuel = Fuel::new(opts.fuel);
    let simplified = match simplify(sig, &constraints.equations, &mut fuel) {
        Ok(s) => s,
        Err(e) => return v.inapplicable(e),
    };
    v.simplified = simplified.equations.clone();
    for f in &simplified.injectivity_used {
        v.warnings.push(format!("relies on the declared injectivity of `{f}`, which is not checked"));
    }

    let mut vars: Vec<Name> = constraints.variables().cloned().collect();
    for x in equation_variables(&v.simplified).into_iter().chain(simplified.introduced.iter().map(|(x, _)| x.clone())) {
        if !vars.contains(&x) {
            vars.push(x);
        }
    }
    v.freezer = Freezer::new(sig, &vars);
    let mut hats = equation_hats(&constraints.equations);
    for (_, h) in &constraints.hat_map {
        if !hats.contains(h) {
            hats.push(h.clone());
        }
    }
    let frozen: Vec<Name> = v.freezer.entries().iter().map(|(_, c)| c.clone()).collect();
    let mut precedence = Precedence::default_for(sig, &hats, &frozen);
    if let Some(over) = &opts.precedence {
        // names belonging to other rules are ignored here
        let mine: Vec<Name> = over.iter().filter(|f| precedence.contains(f)).cloned().collect();
        match precedence.with_override(&mine) {
            Ok(p) => precedence = p,
            Err(e) => return v.inapplicable(e),
        }
    }
    v.precedence = Some(precedence.clone());

    let d = match complete(&v.freezer.freeze_set(&v.simplified), &precedence) {
        Ok(d) => d,
        Err(e) => return v.inapplicable(e),
    };
    v.ground_rules = d.clone();
    v.postponement = postponement_report(sig, &d);
    for p in &v.postponement {
        match p.holds {
            None => v.notes.push(format!("({}) {}", p.condition, p.detail)),
            Some(true) => {}
            Some(false) => v.warnings.push(format!("postponement condition ({}) fails: {}", p.condition, p.detail)),
        }
    }

    let ext = match build_extended(sig, &constraints, &v.freezer, &simplified.introduced, &d) {
        Ok(ext) => ext,
        Err(e) => return v.inapplicable(e),
    };
    match ext.check(&rule.rhs, &constraints.inferred_type, opts.fuel) {
        Ok(()) => {
            // conservativity: accepted only if the same judgement holds again
            assert!(ext.check(&rule.rhs, &constraints.inferred_type, opts.fuel).is_ok());
            v.status = Status::Accepted;
        }
        Err(crate::typing::TypeError::Reduce(e)) => return v.inapplicable(e),
        Err(e) => {
            v.status = Status::Rejected;
            v.reasons.push(e.to_string());
        }
    }
    v
}

/// Checks every rule of `sig`, in parallel when enabled; verdicts come back
/// in rule order.
pub fn check_all(sig: &Signature, opts: &CheckOptions) -> Vec<Verdict> {
    let rules: Vec<Rule> = sig.rules().iter().cloned().collect();
    let mut verdicts = crate::par::map(&rules, |i, r| check_rule(sig, i, r, opts));
    attach_confluence(&sig.confluence_diagnostics(), &mut verdicts);
    verdicts
}

/// Same as [`check_all`] but always on the calling thread.
pub fn check_all_sequential(sig: &Signature, opts: &CheckOptions) -> Vec<Verdict> {
    let rules: Vec<Rule> = sig.rules().iter().cloned().collect();
    let mut verdicts = crate::par::sequential(&rules, |i, r| check_rule(sig, i, r, opts));
    attach_confluence(&sig.confluence_diagnostics(), &mut verdicts);
    verdicts
}

fn attach_confluence(report: &ConfluenceReport, verdicts: &mut [Verdict]) {
    if report.is_orthogonal() {
        for v in verdicts.iter_mut() {
            v.notes.push("orthogonal: confluence assumption discharged".into());
        }
        return;
    }
    for v in verdicts.iter_mut() {
        let mut mine = Vec::new();
        if report.non_left_linear.contains(&v.index) {
            mine.push("the rule is not left-linear".to_string());
        }
        for o in report.overlaps.iter().filter(|o| o.outer == v.index || o.inner == v.index) {
            mine.push(format!(
                "`{}` overlaps `{}` at {} on {}",
                report.rules[o.inner],
                report.rules[o.outer],
                o.position,
                print(&o.instance)
            ));
        }
        if mine.is_empty() {
            v.notes.push("not involved in any overlap; confluence of the whole system is assumed".into());
        } else {
            for m in mine {
                v.warnings.push(format!("confluence remains an assumption: {m}"));
            }
        }
    }
}

/// Rules oriented by the hat shortcut rather than by the path ordering.
pub fn hat_rules(d: &GroundRules) -> impl Iterator<Item = &crate::completion::GroundRule> {
    d.iter().filter(|r| r.orientation == Orientation::Hat)
}

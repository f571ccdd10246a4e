//! Syntax-directed type inference and checking.

use std::sync::Arc;

use thiserror::Error;

use crate::reduce::{convertible, normalize, whnf, Fuel, ReduceError, RuleSet};
use crate::signature::Signature;
use crate::syntax::print;
use crate::term::{name, subst, Binder, Name, Sort, Substitution, Term};

/// An ordered telescope of typed variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Environment {
    bindings: Vec<(Name, Term)>,
}

impl Environment {
    pub fn new() -> Self {
        Environment::default()
    }

    pub fn push(&mut self, x: Name, ty: Term) {
        self.bindings.push((x, ty));
    }

    pub fn pop(&mut self) -> Option<(Name, Term)> {
        self.bindings.pop()
    }

    /// Innermost binding of `x`.
    pub fn lookup(&self, x: &str) -> Option<&Term> {
        self.bindings.iter().rev().find(|(y, _)| &**y == x).map(|(_, ty)| ty)
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Term)> {
        self.bindings.iter().map(|(x, t)| (x, t))
    }
}

impl FromIterator<(Name, Term)> for Environment {
    fn from_iter<I: IntoIterator<Item = (Name, Term)>>(iter: I) -> Self {
        Environment { bindings: iter.into_iter().collect() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum TermClass {
    Kind,
    Predicate,
    Object,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypeError {
    #[error("KIND has no type")]
    BoxUntypable,
    #[error("unbound variable ${0}")]
    UnboundVariable(Name),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(Name),
    #[error("dangling bound variable")]
    DanglingIndex,
    #[error("({rule}) {message}")]
    NotTypable { rule: &'static str, message: String },
    #[error("type mismatch for {term}: expected {expected}, found {found}")]
    Mismatch { term: String, expected: String, found: String },
    #[error("invalid environment at ${var}: {reason}")]
    InvalidEnvironment { var: Name, reason: String },
    #[error("substitution is ill-typed at ${var}: {reason}")]
    SubstitutionIllTyped { var: Name, reason: String },
    #[error(transparent)]
    Reduce(#[from] ReduceError),
}

/// Type checker over a fixed signature and rule set, sharing one step
/// budget across all the judgements it is asked.
pub struct Typer<'a> {
    sig: &'a Signature,
    rules: &'a RuleSet,
    pub fuel: Fuel,
}

impl<'a> Typer<'a> {
    pub fn new(sig: &'a Signature, rules: &'a RuleSet, fuel: Fuel) -> Self {
        Typer { sig, rules, fuel }
    }

    pub fn infer(&mut self, env: &Environment, t: &Term) -> Result<Term, TypeError> {
        let mut env = env.clone();
        self.infer_in(&mut env, t)
    }

    fn infer_in(&mut self, env: &mut Environment, t: &Term) -> Result<Term, TypeError> {
        match t {
            Term::Sort(Sort::Star) => Ok(Term::kind()),
            Term::Sort(Sort::Box) => Err(TypeError::BoxUntypable),
            Term::Var(x) => env.lookup(x).cloned().ok_or_else(|| TypeError::UnboundVariable(x.clone())),
            Term::BVar(_) => Err(TypeError::DanglingIndex),
            Term::Sym(f) => match self.sig.symbol(f) {
                Some(info) => Ok(info.ty.clone()),
                None => Err(TypeError::UnknownSymbol(f.clone())),
            },
            Term::App(f, a) => {
                let tf = self.infer_in(env, f)?;
                match whnf(self.rules, &tf, &mut self.fuel)? {
                    Term::Prod(b) => {
                        self.check_against(env, a, &b.domain)?;
                        Ok(b.body.instantiate(a))
                    }
                    other => Err(TypeError::NotTypable {
                        rule: "app",
                        message: format!("{} has type {}, which is not a product", print(f), print(&other)),
                    }),
                }
            }
            Term::Abs(b) => {
                self.domain_is_type(env, &b.domain, "abs")?;
                let x = self.fresh(env, &b.name);
                env.push(x.clone(), b.domain.clone());
                let result = self.infer_in(env, &b.body.instantiate(&Term::Var(x.clone())));
                let result = result.and_then(|ty| {
                    if ty == Term::kind() {
                        return Err(TypeError::NotTypable {
                            rule: "abs",
                            message: format!("the body of {} has type KIND", print(t)),
                        });
                    }
                    self.sort_of(env, &ty, "abs")?;
                    Ok(ty)
                });
                env.pop();
                let ty = result?;
                Ok(Term::Prod(Arc::new(Binder { name: b.name.clone(), domain: b.domain.clone(), body: ty.abstract_var(&x) })))
            }
            Term::Prod(b) => {
                self.domain_is_type(env, &b.domain, "prod")?;
                let x = self.fresh(env, &b.name);
                env.push(x.clone(), b.domain.clone());
                let body = b.body.instantiate(&Term::Var(x));
                let result = self.infer_in(env, &body).and_then(|s| self.as_sort(&s, &body, "prod"));
                env.pop();
                Ok(Term::Sort(result?))
            }
        }
    }

    fn fresh(&self, env: &Environment, hint: &str) -> Name {
        name(&format!("{hint}#{}", env.len()))
    }

    fn domain_is_type(&mut self, env: &mut Environment, a: &Term, rule: &'static str) -> Result<(), TypeError> {
        let s = self.infer_in(env, a)?;
        match whnf(self.rules, &s, &mut self.fuel)? {
            Term::Sort(Sort::Star) => Ok(()),
            other => Err(TypeError::NotTypable {
                rule,
                message: format!("the domain {} has type {}, expected TYPE", print(a), print(&other)),
            }),
        }
    }

    fn as_sort(&mut self, s: &Term, of: &Term, rule: &'static str) -> Result<Sort, TypeError> {
        match whnf(self.rules, s, &mut self.fuel)? {
            Term::Sort(s) => Ok(s),
            other => Err(TypeError::NotTypable {
                rule,
                message: format!("{} has type {}, which is not a sort", print(of), print(&other)),
            }),
        }
    }

    fn sort_of(&mut self, env: &mut Environment, ty: &Term, rule: &'static str) -> Result<Sort, TypeError> {
        let s = self.infer_in(env, ty)?;
        self.as_sort(&s, ty, rule)
    }

    fn check_against(&mut self, env: &mut Environment, t: &Term, expected: &Term) -> Result<(), TypeError> {
        let found = self.infer_in(env, t)?;
        if convertible(self.rules, &found, expected, &mut self.fuel)? {
            return Ok(());
        }
        Err(self.mismatch(t, expected, &found))
    }

    fn mismatch(&mut self, t: &Term, expected: &Term, found: &Term) -> TypeError {
        let mut show = |u: &Term| {
            let nf = normalize(self.rules, u, &mut self.fuel).unwrap_or_else(|_| u.clone());
            print(&nf)
        };
        TypeError::Mismatch { term: print(t), expected: show(expected), found: show(found) }
    }

    /// `env ⊢ t : ty`, where `ty` must itself have a sort unless both it and
    /// the inferred type are KIND.
    pub fn check(&mut self, env: &Environment, t: &Term, ty: &Term) -> Result<(), TypeError> {
        let mut env = env.clone();
        if *ty == Term::kind() {
            let found = self.infer_in(&mut env, t)?;
            if found == Term::kind() {
                return Ok(());
            }
            return Err(self.mismatch(t, ty, &found));
        }
        self.sort_of(&mut env, ty, "conv")?;
        self.check_against(&mut env, t, ty)
    }

    pub fn check_env(&mut self, env: &Environment) -> Result<(), TypeError> {
        let mut prefix = Environment::new();
        for (x, ty) in env.iter() {
            let invalid = |e: TypeError| TypeError::InvalidEnvironment { var: x.clone(), reason: e.to_string() };
            if prefix.bindings.iter().any(|(y, _)| y == x) {
                return Err(invalid(TypeError::NotTypable { rule: "var", message: "declared twice".into() }));
            }
            self.sort_of(&mut prefix, ty, "var").map_err(invalid)?;
            prefix.push(x.clone(), ty.clone());
        }
        Ok(())
    }

    /// Every `x : A` of `from` satisfies `to ⊢ xσ : Aσ`.
    pub fn check_subst(&mut self, to: &Environment, sigma: &Substitution, from: &Environment) -> Result<(), TypeError> {
        for (x, ty) in from.iter() {
            let image = sigma.get(x).cloned().unwrap_or_else(|| Term::Var(x.clone()));
            self.check(to, &image, &subst(ty, sigma))
                .map_err(|e| TypeError::SubstitutionIllTyped { var: x.clone(), reason: e.to_string() })?;
        }
        Ok(())
    }

    pub fn classify(&mut self, env: &Environment, t: &Term) -> Result<TermClass, TypeError> {
        let ty = self.infer(env, t)?;
        if ty == Term::kind() {
            return Ok(TermClass::Kind);
        }
        let k = self.infer(env, &ty)?;
        if whnf(self.rules, &k, &mut self.fuel)? == Term::kind() {
            Ok(TermClass::Predicate)
        } else {
            Ok(TermClass::Object)
        }
    }
}

pub fn infer(sig: &Signature, rs: &RuleSet, env: &Environment, t: &Term, fuel: &mut Fuel) -> Result<Term, TypeError> {
    with_typer(sig, rs, fuel, |ty| ty.infer(env, t))
}

pub fn check(
    sig: &Signature,
    rs: &RuleSet,
    env: &Environment,
    t: &Term,
    ty: &Term,
    fuel: &mut Fuel,
) -> Result<(), TypeError> {
    with_typer(sig, rs, fuel, |typer| typer.check(env, t, ty))
}

pub fn check_env(sig: &Signature, rs: &RuleSet, env: &Environment, fuel: &mut Fuel) -> Result<(), TypeError> {
    with_typer(sig, rs, fuel, |typer| typer.check_env(env))
}

pub fn check_subst(
    sig: &Signature,
    rs: &RuleSet,
    to: &Environment,
    sigma: &Substitution,
    from: &Environment,
    fuel: &mut Fuel,
) -> Result<(), TypeError> {
    with_typer(sig, rs, fuel, |typer| typer.check_subst(to, sigma, from))
}

pub fn classify(
    sig: &Signature,
    rs: &RuleSet,
    env: &Environment,
    t: &Term,
    fuel: &mut Fuel,
) -> Result<TermClass, TypeError> {
    with_typer(sig, rs, fuel, |typer| typer.classify(env, t))
}

fn with_typer<T>(
    sig: &Signature,
    rs: &RuleSet,
    fuel: &mut Fuel,
    f: impl FnOnce(&mut Typer) -> Result<T, TypeError>,
) -> Result<T, TypeError> {
    let mut typer = Typer::new(sig, rs, fuel.clone());
    let out = f(&mut typer);
    *fuel = typer.fuel;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn vectors() -> Signature {
        let mut sig = Signature::new();
        for (f, ty) in [
            ("N", "TYPE"),
            ("0", "N"),
            ("s", "N -> N"),
            ("R", "TYPE"),
            ("r", "R"),
            ("V", "N -> TYPE"),
            ("nil", "V 0"),
            ("cons", "R -> Pi n : N, V n -> V (s n)"),
            ("tail", "Pi n : N, V (s n) -> V n"),
        ] {
            sig.declare_symbol(f, t(ty), f != "tail", None).unwrap();
        }
        sig
    }

    fn env(bindings: &[(&str, &str)]) -> Environment {
        bindings.iter().map(|(x, ty)| (name(x), t(ty))).collect()
    }

    #[test]
    fn inference() {
        let sig = vectors();
        let rs = sig.rules();
        let mut fuel = Fuel::default();
        let e = Environment::new();
        assert_eq!(infer(&sig, rs, &e, &t("TYPE"), &mut fuel).unwrap(), t("KIND"));
        assert_eq!(infer(&sig, rs, &e, &t("KIND"), &mut fuel), Err(TypeError::BoxUntypable));
        assert_eq!(infer(&sig, rs, &e, &t("tail 0 (cons r 0 nil)"), &mut fuel).unwrap(), t("V 0"));
        assert_eq!(infer(&sig, rs, &e, &t("\\x : N, s x"), &mut fuel).unwrap(), t("N -> N"));
        assert_eq!(infer(&sig, rs, &e, &t("Pi n : N, V n"), &mut fuel).unwrap(), t("TYPE"));
        assert_eq!(infer(&sig, rs, &e, &t("N -> TYPE"), &mut fuel).unwrap(), t("KIND"));
        // dependent codomain instantiated with the argument
        assert_eq!(infer(&sig, rs, &e, &t("cons r (s 0)"), &mut fuel).unwrap(), t("V (s 0) -> V (s (s 0))"));
        assert!(matches!(
            infer(&sig, rs, &e, &t("s N"), &mut fuel),
            Err(TypeError::Mismatch { .. })
        ));
        assert!(matches!(
            infer(&sig, rs, &e, &t("0 0"), &mut fuel),
            Err(TypeError::NotTypable { rule: "app", .. })
        ));
        assert!(matches!(
            infer(&sig, rs, &e, &t("Pi x : TYPE, x"), &mut fuel),
            Err(TypeError::NotTypable { rule: "prod", .. })
        ));
        assert!(matches!(
            infer(&sig, rs, &e, &t("\\x : N, TYPE"), &mut fuel),
            Err(TypeError::NotTypable { rule: "abs", .. })
        ));
    }

    #[test]
    fn checking() {
        let sig = vectors();
        let rs = sig.rules();
        let mut fuel = Fuel::default();
        check(&sig, rs, &env(&[("x", "N")]), &t("s $x"), &t("N"), &mut fuel).unwrap();
        assert!(matches!(
            check(&sig, rs, &Environment::new(), &t("0"), &t("V 0"), &mut fuel),
            Err(TypeError::Mismatch { .. })
        ));
        check(&sig, rs, &Environment::new(), &t("N -> TYPE"), &t("KIND"), &mut fuel).unwrap();
        assert!(check(&sig, rs, &Environment::new(), &t("0"), &t("0"), &mut fuel).is_err());
    }

    #[test]
    fn environments() {
        let sig = vectors();
        let rs = sig.rules();
        let mut fuel = Fuel::default();
        check_env(&sig, rs, &env(&[("x", "N")]), &mut fuel).unwrap();
        assert!(matches!(
            check_env(&sig, rs, &env(&[("x", "0")]), &mut fuel),
            Err(TypeError::InvalidEnvironment { .. })
        ));
        check_env(&sig, rs, &env(&[("n", "N"), ("v", "V $n")]), &mut fuel).unwrap();
        assert!(check_env(&sig, rs, &env(&[("v", "V $n")]), &mut fuel).is_err());
    }

    #[test]
    fn substitutions() {
        let sig = vectors();
        let rs = sig.rules();
        let mut fuel = Fuel::default();
        let empty = Environment::new();
        let s1: Substitution = [(name("x"), t("0"))].into_iter().collect();
        check_subst(&sig, rs, &empty, &s1, &env(&[("x", "N")]), &mut fuel).unwrap();
        let s2: Substitution = [(name("x"), t("N"))].into_iter().collect();
        assert!(matches!(
            check_subst(&sig, rs, &empty, &s2, &env(&[("x", "N")]), &mut fuel),
            Err(TypeError::SubstitutionIllTyped { .. })
        ));
        let s3: Substitution = [(name("n"), t("0")), (name("v"), t("nil"))].into_iter().collect();
        check_subst(&sig, rs, &empty, &s3, &env(&[("n", "N"), ("v", "V $n")]), &mut fuel).unwrap();
    }

    #[test]
    fn classes() {
        let sig = vectors();
        let rs = sig.rules();
        let mut fuel = Fuel::default();
        let e = Environment::new();
        assert_eq!(classify(&sig, rs, &e, &t("N -> TYPE"), &mut fuel).unwrap(), TermClass::Kind);
        assert_eq!(classify(&sig, rs, &e, &t("V 0"), &mut fuel).unwrap(), TermClass::Predicate);
        assert_eq!(classify(&sig, rs, &e, &t("0"), &mut fuel).unwrap(), TermClass::Object);
        assert_eq!(classify(&sig, rs, &e, &t("TYPE"), &mut fuel).unwrap(), TermClass::Kind);
        assert_eq!(classify(&sig, rs, &e, &t("V"), &mut fuel).unwrap(), TermClass::Predicate);
    }

    #[test]
    fn conversion_through_rules() {
        let mut sig = Signature::new();
        for (f, ty) in [("T", "TYPE"), ("o", "T"), ("arr", "T -> T -> T"), ("τ", "T -> TYPE")] {
            sig.declare_symbol(f, t(ty), f != "τ", None).unwrap();
        }
        sig.add_rule(t("τ (arr $x $y)"), t("τ $x -> τ $y")).unwrap();
        sig.declare_symbol("id", t("τ (arr o o)"), false, None).unwrap();
        sig.declare_symbol("e", t("τ o"), false, None).unwrap();
        let mut fuel = Fuel::default();
        let ty = infer(&sig, sig.rules(), &Environment::new(), &t("id e"), &mut fuel).unwrap();
        assert_eq!(ty, t("τ o"));
    }
}

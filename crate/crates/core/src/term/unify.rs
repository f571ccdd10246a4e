//! Syntactic first-order unification, used for overlap and postponement
//! diagnostics.

use super::{name, subst, Name, Substitution, Term};

/// Most general unifier of `t` and `u`, treating named variables as
/// unification variables and everything else as rigid.
pub fn unify(t: &Term, u: &Term) -> Option<Substitution> {
    let mut sigma = Substitution::new();
    let mut todo = vec![(t.clone(), u.clone())];
    while let Some((a, b)) = todo.pop() {
        let a = subst(&a, &sigma);
        let b = subst(&b, &sigma);
        if a == b {
            continue;
        }
        match (&a, &b) {
            (Term::Var(x), other) | (other, Term::Var(x)) => {
                if occurs(x, other) || !other.is_locally_closed() {
                    return None;
                }
                let single = Substitution::singleton(x, other.clone());
                sigma = sigma.compose(&single);
                sigma.insert(x.clone(), other.clone());
            }
            (Term::App(f, x), Term::App(g, y)) => {
                todo.push(((**f).clone(), (**g).clone()));
                todo.push(((**x).clone(), (**y).clone()));
            }
            (Term::Abs(p), Term::Abs(q)) | (Term::Prod(p), Term::Prod(q)) => {
                todo.push((p.domain.clone(), q.domain.clone()));
                todo.push((p.body.clone(), q.body.clone()));
            }
            _ => return None,
        }
    }
    Some(sigma)
}

fn occurs(x: &Name, t: &Term) -> bool {
    let mut found = false;
    t.visit(&mut |s| {
        if let Term::Var(y) = s {
            found |= y == x;
        }
    });
    found
}

/// Renames every free variable of `t` by appending `suffix`.
pub fn rename_apart(t: &Term, suffix: &str) -> Term {
    t.map_leaves(&|s| match s {
        Term::Var(x) => Some(Term::Var(name(&format!("{x}{suffix}")))),
        _ => None,
    })
}

//! Built-in predicates usable in guards, conditions and bodies.
//!
//! Builtins are evaluated over fully resolved terms and return every
//! solution as a substitution extending the given one.

use crate::store::Store;
use crate::term::{apply, match_term, unify, Substitution, Symbol, Term};

use super::EngineError;

pub fn is_builtin(name: &str, arity: usize) -> bool {
    matches!(
        (name, arity),
        ("=", 2)
            | ("\\=", 2)
            | ("==", 2)
            | ("\\==", 2)
            | ("<", 2)
            | (">", 2)
            | ("=<", 2)
            | (">=", 2)
            | ("member", 2)
            | ("integer", 1)
            | ("true", 0)
            | ("fail", 0)
            | ("find_constraint", 2)
            | ("all_consumed", 0)
            | ("\\+", 1)
    )
}

fn int_arg(t: &Term, s: &Substitution, goal: &Term) -> Result<i64, EngineError> {
    match apply(t, s) {
        Term::Int(v) => Ok(v),
        other => Err(EngineError::Type(format!("{goal}: expected an integer, found {other}"))),
    }
}

/// True iff the store holds no live linear assertion (`+/3` or `=+/2`).
pub fn all_consumed(store: &Store) -> bool {
    store.lookup(&Symbol::new("+"), 3).next().is_none() && store.lookup(&Symbol::new("=+"), 2).next().is_none()
}

/// All solutions of a single builtin goal, in order.
pub fn solve_builtin(goal: &Term, s: &Substitution, store: &Store) -> Result<Vec<Substitution>, EngineError> {
    let (name, arity) = goal
        .functor()
        .ok_or_else(|| EngineError::Type(format!("not a goal: {goal}")))?;
    let args = goal.args();
    let one = |ok: bool| if ok { vec![s.clone()] } else { Vec::new() };
    Ok(match (name.as_str(), arity) {
        ("true", 0) => one(true),
        ("fail", 0) => one(false),
        ("=", 2) => unify(&args[0], &args[1], s).into_iter().collect(),
        ("\\=", 2) => one(unify(&args[0], &args[1], s).is_err()),
        ("==", 2) => one(apply(&args[0], s) == apply(&args[1], s)),
        ("\\==", 2) => one(apply(&args[0], s) != apply(&args[1], s)),
        ("<", 2) => one(int_arg(&args[0], s, goal)? < int_arg(&args[1], s, goal)?),
        (">", 2) => one(int_arg(&args[0], s, goal)? > int_arg(&args[1], s, goal)?),
        ("=<", 2) => one(int_arg(&args[0], s, goal)? <= int_arg(&args[1], s, goal)?),
        (">=", 2) => one(int_arg(&args[0], s, goal)? >= int_arg(&args[1], s, goal)?),
        ("integer", 1) => one(matches!(apply(&args[0], s), Term::Int(_))),
        ("member", 2) => {
            let list = apply(&args[1], s);
            let items = list
                .list_items()
                .ok_or_else(|| EngineError::Type(format!("{goal}: second argument is not a proper list")))?;
            items
                .into_iter()
                .filter_map(|item| unify(&args[0], item, s).ok())
                .collect()
        }
        ("find_constraint", 2) => {
            let pattern = apply(&args[0], s);
            let mut out = Vec::new();
            let mut try_one = |c: &crate::store::Constraint| {
                let target = store.resolve(&c.to_term());
                if let Ok(s1) = match_term(&pattern, &target, s) {
                    if let Ok(s2) = unify(&args[1], &Term::Int(c.id as i64), &s1) {
                        out.push(s2);
                    }
                }
            };
            match pattern.functor() {
                Some((f, a)) => store.lookup(f, a).for_each(&mut try_one),
                None => store.live().for_each(&mut try_one),
            }
            out
        }
        ("all_consumed", 0) => one(all_consumed(store)),
        ("\\+", 1) => one(solve_query(&args[0], s, store)?.is_none()),
        _ => return Err(EngineError::Type(format!("unknown builtin {goal}"))),
    })
}

/// First solution of a query goal (builtins combined with `,`).
pub fn solve_query(goal: &Term, s: &Substitution, store: &Store) -> Result<Option<Substitution>, EngineError> {
    let goals = super::rule::conjuncts(goal);
    let goals: Vec<Term> = goals.into_iter().cloned().collect();
    first_solution(&goals, s, store, &mut |_| true)
}

/// Depth-first search over a conjunction; returns the first solution
/// accepted by `accept`.
pub fn first_solution(
    goals: &[Term],
    s: &Substitution,
    store: &Store,
    accept: &mut dyn FnMut(&Substitution) -> bool,
) -> Result<Option<Substitution>, EngineError> {
    let Some((first, rest)) = goals.split_first() else {
        return Ok(accept(s).then(|| s.clone()));
    };
    if let Some((f, a)) = first.functor() {
        if !is_builtin(f.as_str(), a) && !(f.as_str() == "," && a == 2) {
            return Err(EngineError::IllegalCondition(first.to_string()));
        }
        if f.as_str() == "," && a == 2 {
            let mut flat: Vec<Term> = super::rule::conjuncts(first).into_iter().cloned().collect();
            flat.extend_from_slice(rest);
            return first_solution(&flat, s, store, accept);
        }
    }
    for s1 in solve_builtin(first, s, store)? {
        if let Some(found) = first_solution(rest, &s1, store, accept)? {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

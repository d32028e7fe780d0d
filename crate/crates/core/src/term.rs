//! Terms, one-way matching, unification and substitutions.
//!
//! Variables are identified by a serial number; the name is kept only for
//! printing. Substitutions are stored in triangular form and [`apply`]
//! resolves chains fully, so applying a substitution is idempotent.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

/// An interned-by-value symbol (functor or constant name).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(name: &str) -> Self {
        Symbol(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

/// A logic variable. Equality and hashing use the serial only.
#[derive(Clone, Debug)]
pub struct Var {
    pub name: Symbol,
    pub serial: u64,
}

impl Var {
    pub fn new(name: &str, serial: u64) -> Self {
        Var {
            name: Symbol::new(name),
            serial,
        }
    }

    /// True for `_` and unnamed variables, which print by serial.
    pub fn is_anonymous(&self) -> bool {
        matches!(self.name.as_str(), "" | "_")
    }
}

impl PartialEq for Var {
    fn eq(&self, other: &Self) -> bool {
        self.serial == other.serial
    }
}

impl Eq for Var {}

impl Hash for Var {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.serial.hash(state);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(Var),
    Const(Symbol),
    Int(i64),
    /// Arity is always at least one; zero-arity terms are `Const`.
    Compound(Symbol, Vec<Term>),
}

impl Term {
    pub fn atom(name: &str) -> Term {
        Term::Const(Symbol::new(name))
    }

    pub fn int(v: i64) -> Term {
        Term::Int(v)
    }

    pub fn var(name: &str, serial: u64) -> Term {
        Term::Var(Var::new(name, serial))
    }

    /// Builds a compound, collapsing the zero-argument case to a constant.
    pub fn compound(functor: &str, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::atom(functor)
        } else {
            Term::Compound(Symbol::new(functor), args)
        }
    }

    pub fn from_parts(functor: Symbol, args: Vec<Term>) -> Term {
        if args.is_empty() {
            Term::Const(functor)
        } else {
            Term::Compound(functor, args)
        }
    }

    pub fn nil() -> Term {
        Term::atom("[]")
    }

    pub fn cons(head: Term, tail: Term) -> Term {
        Term::Compound(Symbol::new("."), vec![head, tail])
    }

    pub fn list(items: Vec<Term>) -> Term {
        Self::list_with_tail(items, Term::nil())
    }

    pub fn list_with_tail(items: Vec<Term>, tail: Term) -> Term {
        items.into_iter().rev().fold(tail, |acc, item| Term::cons(item, acc))
    }

    /// Elements of a proper list, or `None` if this is not one.
    pub fn list_items(&self) -> Option<Vec<&Term>> {
        let mut items = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                Term::Const(s) if s.as_str() == "[]" => return Some(items),
                Term::Compound(f, args) if f.as_str() == "." && args.len() == 2 => {
                    items.push(&args[0]);
                    cur = &args[1];
                }
                _ => return None,
            }
        }
    }

    /// Functor name and arity; constants have arity 0, numbers and variables none.
    pub fn functor(&self) -> Option<(&Symbol, usize)> {
        match self {
            Term::Const(s) => Some((s, 0)),
            Term::Compound(s, args) => Some((s, args.len())),
            _ => None,
        }
    }

    pub fn args(&self) -> &[Term] {
        match self {
            Term::Compound(_, args) => args,
            _ => &[],
        }
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Const(_) | Term::Int(_) => true,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn is_atom(&self, name: &str) -> bool {
        matches!(self, Term::Const(s) if s.as_str() == name)
    }

    pub fn occurs(&self, var: &Var) -> bool {
        match self {
            Term::Var(v) => v == var,
            Term::Const(_) | Term::Int(_) => false,
            Term::Compound(_, args) => args.iter().any(|a| a.occurs(var)),
        }
    }

    /// Distinct variables in left-to-right first-occurrence order.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Const(_) | Term::Int(_) => {}
            Term::Compound(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn max_serial(&self) -> Option<u64> {
        match self {
            Term::Var(v) => Some(v.serial),
            Term::Const(_) | Term::Int(_) => None,
            Term::Compound(_, args) => args.iter().filter_map(Term::max_serial).max(),
        }
    }

    /// Replaces variables according to `f`, leaving others untouched.
    pub fn map_vars(&self, f: &mut impl FnMut(&Var) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Term::Const(_) | Term::Int(_) => self.clone(),
            Term::Compound(fun, args) => Term::Compound(fun.clone(), args.iter().map(|a| a.map_vars(f)).collect()),
        }
    }
}

/// A finite map from variables to terms, kept free of cycles.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: HashMap<u64, (Var, Term)>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn get(&self, var: &Var) -> Option<&Term> {
        self.bindings.get(&var.serial).map(|(_, t)| t)
    }

    pub fn contains(&self, var: &Var) -> bool {
        self.bindings.contains_key(&var.serial)
    }

    /// Binds an unbound variable. The caller guarantees the occurs check.
    pub fn bind(&mut self, var: Var, term: Term) {
        debug_assert!(!self.contains(&var));
        self.bindings.insert(var.serial, (var, term));
    }

    pub fn unbind(&mut self, var: &Var) {
        self.bindings.remove(&var.serial);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &Term)> {
        self.bindings.values().map(|(v, t)| (v, t))
    }

    /// Bindings sorted by variable serial.
    pub fn sorted(&self) -> Vec<(Var, Term)> {
        let mut v: Vec<_> = self.bindings.values().cloned().collect();
        v.sort_by_key(|(var, _)| var.serial);
        v
    }

    /// Follows variable bindings at the top level only.
    pub fn walk<'a>(&'a self, mut term: &'a Term) -> &'a Term {
        while let Term::Var(v) = term {
            match self.get(v) {
                Some(t) => term = t,
                None => break,
            }
        }
        term
    }
}

/// Applies `s` to `t`, resolving chains of bindings completely.
pub fn apply(t: &Term, s: &Substitution) -> Term {
    if s.is_empty() {
        return t.clone();
    }
    match s.walk(t) {
        Term::Compound(f, args) => Term::Compound(f.clone(), args.iter().map(|a| apply(a, s)).collect()),
        other => other.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no match")]
pub struct NoMatch;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NoUnifier {
    #[error("symbol clash between {0} and {1}")]
    Clash(String, String),
    #[error("occurs check: variable occurs in {0}")]
    Occurs(String),
}

/// One-way matching: extends `s` so that `apply(pattern, result) == target`.
///
/// Only pattern variables are bound; the target is never instantiated.
/// Variables inside the target are treated as opaque constants.
pub fn match_term(pattern: &Term, target: &Term, s: &Substitution) -> Result<Substitution, NoMatch> {
    let mut out = s.clone();
    match_into(pattern, target, &mut out)?;
    Ok(out)
}

/// In-place variant of [`match_term`]; on failure `s` may hold partial bindings.
pub fn match_into(pattern: &Term, target: &Term, s: &mut Substitution) -> Result<(), NoMatch> {
    match pattern {
        Term::Var(v) => match s.get(v) {
            Some(bound) => {
                if apply(bound, s) == *target {
                    Ok(())
                } else {
                    Err(NoMatch)
                }
            }
            None => {
                s.bind(v.clone(), target.clone());
                Ok(())
            }
        },
        Term::Const(a) => match target {
            Term::Const(b) if a == b => Ok(()),
            _ => Err(NoMatch),
        },
        Term::Int(a) => match target {
            Term::Int(b) if a == b => Ok(()),
            _ => Err(NoMatch),
        },
        Term::Compound(f, args) => match target {
            Term::Compound(g, targs) if f == g && args.len() == targs.len() => {
                for (p, t) in args.iter().zip(targs) {
                    match_into(p, t, s)?;
                }
                Ok(())
            }
            _ => Err(NoMatch),
        },
    }
}

/// Most general unifier extending `s`, with occurs check.
pub fn unify(t1: &Term, t2: &Term, s: &Substitution) -> Result<Substitution, NoUnifier> {
    let mut out = s.clone();
    unify_into(t1, t2, &mut out)?;
    Ok(out)
}

pub fn unify_into(t1: &Term, t2: &Term, s: &mut Substitution) -> Result<(), NoUnifier> {
    let a = s.walk(t1).clone();
    let b = s.walk(t2).clone();
    match (&a, &b) {
        (Term::Var(x), Term::Var(y)) if x == y => Ok(()),
        (Term::Var(x), other) | (other, Term::Var(x)) => {
            if apply(other, s).occurs(x) {
                return Err(NoUnifier::Occurs(format!("{other:?}")));
            }
            s.bind(x.clone(), other.clone());
            Ok(())
        }
        (Term::Const(x), Term::Const(y)) if x == y => Ok(()),
        (Term::Int(x), Term::Int(y)) if x == y => Ok(()),
        (Term::Compound(f, xs), Term::Compound(g, ys)) if f == g && xs.len() == ys.len() => {
            for (x, y) in xs.iter().zip(ys) {
                unify_into(x, y, s)?;
            }
            Ok(())
        }
        _ => Err(NoUnifier::Clash(format!("{a:?}"), format!("{b:?}"))),
    }
}

/// Source of fresh variable serials.
#[derive(Debug, Clone)]
pub struct VarSource {
    next: u64,
}

impl VarSource {
    pub fn starting_at(next: u64) -> Self {
        VarSource { next }
    }

    pub fn fresh(&mut self, name: &str) -> Var {
        let v = Var::new(name, self.next);
        self.next += 1;
        v
    }

    pub fn peek(&self) -> u64 {
        self.next
    }

    /// Makes sure every future serial is greater than `serial`.
    pub fn reserve_above(&mut self, serial: u64) {
        self.next = self.next.max(serial + 1);
    }
}

impl Default for VarSource {
    fn default() -> Self {
        VarSource::starting_at(1)
    }
}

/// Renames every variable in `terms` to a fresh one, consistently.
pub fn rename_terms(terms: &[Term], source: &mut VarSource) -> (Vec<Term>, Substitution) {
    let mut renaming = Substitution::new();
    let out = terms
        .iter()
        .map(|t| {
            t.map_vars(&mut |v| {
                if let Some(t) = renaming.get(v) {
                    return Some(t.clone());
                }
                let fresh = Term::Var(source.fresh(v.name.as_str()));
                renaming.bind(v.clone(), fresh.clone());
                Some(fresh)
            })
        })
        .collect();
    (out, renaming)
}

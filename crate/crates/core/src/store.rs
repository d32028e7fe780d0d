//! The constraint store: functor-indexed constraints with liveness flags,
//! the propagation history, the global variable bindings, and the trail
//! that undoes all three.

use std::collections::{HashMap, HashSet};

use crate::syntax::format_constraint;
use crate::term::{apply, Substitution, Symbol, Term, Var};

pub type ConstraintId = u64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub id: ConstraintId,
    pub functor: Symbol,
    pub args: Vec<Term>,
    pub alive: bool,
}

impl Constraint {
    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn to_term(&self) -> Term {
        Term::from_parts(self.functor.clone(), self.args.clone())
    }
}

/// Key of the functor index.
pub type FunctorKey = (Symbol, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
enum TrailEntry {
    Insert(usize),
    Kill(usize),
    History(usize, Vec<ConstraintId>),
    Bind(Var),
}

/// A position in the trail; see [`Store::undo_to`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Mark(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StoreError {
    #[error("constraint {0} is not live")]
    NotLive(ConstraintId),
    #[error("non-ground constraint {0}")]
    NonGround(String),
}

#[derive(Debug, Clone, Default)]
pub struct Store {
    // Sorted by id: ids only grow and undo pops from the end.
    slab: Vec<Constraint>,
    index: HashMap<FunctorKey, Vec<usize>>,
    next_id: ConstraintId,
    history: HashSet<(usize, Vec<ConstraintId>)>,
    bindings: Substitution,
    trail: Vec<TrailEntry>,
}

impl Store {
    pub fn new() -> Self {
        Store {
            next_id: 1,
            ..Default::default()
        }
    }

    /// Inserts a live constraint and returns its fresh id.
    pub fn insert(&mut self, functor: Symbol, args: Vec<Term>) -> ConstraintId {
        let id = self.next_id;
        self.next_id += 1;
        let slot = self.slab.len();
        self.index.entry((functor.clone(), args.len())).or_default().push(slot);
        self.slab.push(Constraint {
            id,
            functor,
            args,
            alive: true,
        });
        self.trail.push(TrailEntry::Insert(slot));
        id
    }

    /// Like [`insert`](Self::insert) but rejects arguments with variables.
    pub fn insert_ground(&mut self, functor: Symbol, args: Vec<Term>) -> Result<ConstraintId, StoreError> {
        if let Some(bad) = args.iter().find(|a| !a.is_ground()) {
            return Err(StoreError::NonGround(format!("{functor}(..{bad}..)")));
        }
        Ok(self.insert(functor, args))
    }

    fn slot_of(&self, id: ConstraintId) -> Option<usize> {
        self.slab.binary_search_by_key(&id, |c| c.id).ok()
    }

    pub fn get(&self, id: ConstraintId) -> Option<&Constraint> {
        self.slot_of(id).map(|s| &self.slab[s])
    }

    pub fn is_alive(&self, id: ConstraintId) -> bool {
        self.get(id).is_some_and(|c| c.alive)
    }

    pub fn kill(&mut self, id: ConstraintId) -> Result<(), StoreError> {
        let slot = self.slot_of(id).ok_or(StoreError::NotLive(id))?;
        if !self.slab[slot].alive {
            return Err(StoreError::NotLive(id));
        }
        self.slab[slot].alive = false;
        self.trail.push(TrailEntry::Kill(slot));
        Ok(())
    }

    /// Live constraints with the given functor and arity, in id order.
    pub fn lookup<'a>(&'a self, functor: &Symbol, arity: usize) -> impl Iterator<Item = &'a Constraint> + 'a {
        self.index
            .get(&(functor.clone(), arity))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
            .iter()
            .map(move |&slot| &self.slab[slot])
            .filter(|c| c.alive)
    }

    /// Live constraints with `key`, as (id, constraint) in id order, from `from_id` on.
    pub(crate) fn lookup_from<'a>(
        &'a self,
        key: &FunctorKey,
        from_id: ConstraintId,
    ) -> impl Iterator<Item = &'a Constraint> + 'a {
        let slots = self.index.get(key).map(|v| v.as_slice()).unwrap_or(&[]);
        let start = slots.partition_point(|&s| self.slab[s].id < from_id);
        slots[start..]
            .iter()
            .map(move |&slot| &self.slab[slot])
            .filter(|c| c.alive)
    }

    pub fn live(&self) -> impl Iterator<Item = &Constraint> {
        self.slab.iter().filter(|c| c.alive)
    }

    pub fn live_count(&self) -> usize {
        self.live().count()
    }

    pub fn history_seen(&self, rule: usize, ids: &[ConstraintId]) -> bool {
        // Avoid allocating for the common miss.
        self.history.contains(&(rule, ids.to_vec()))
    }

    pub fn history_record(&mut self, rule: usize, ids: Vec<ConstraintId>) {
        if self.history.insert((rule, ids.clone())) {
            self.trail.push(TrailEntry::History(rule, ids));
        }
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn bindings(&self) -> &Substitution {
        &self.bindings
    }

    /// Records a global binding of an unbound variable.
    pub fn bind(&mut self, var: Var, term: Term) {
        self.bindings.bind(var.clone(), term);
        self.trail.push(TrailEntry::Bind(var));
    }

    /// Applies the global bindings.
    pub fn resolve(&self, t: &Term) -> Term {
        apply(t, &self.bindings)
    }

    /// Id the next insertion will get.
    pub fn next_id(&self) -> ConstraintId {
        self.next_id
    }

    pub fn mark(&self) -> Mark {
        Mark(self.trail.len())
    }

    /// Undoes every event recorded after `mark`, newest first.
    pub fn undo_to(&mut self, mark: Mark) {
        while self.trail.len() > mark.0 {
            match self.trail.pop().expect("trail underflow") {
                TrailEntry::Insert(slot) => {
                    debug_assert_eq!(slot + 1, self.slab.len());
                    let c = self.slab.pop().expect("slab underflow");
                    self.next_id = c.id;
                    let list = self
                        .index
                        .get_mut(&(c.functor.clone(), c.args.len()))
                        .expect("index entry");
                    debug_assert_eq!(list.last(), Some(&slot));
                    list.pop();
                }
                TrailEntry::Kill(slot) => self.slab[slot].alive = true,
                TrailEntry::History(rule, ids) => {
                    self.history.remove(&(rule, ids));
                }
                TrailEntry::Bind(var) => self.bindings.unbind(&var),
            }
        }
    }

    /// Live constraints as terms, with bindings applied, in id order.
    pub fn snapshot(&self) -> Vec<(ConstraintId, Term)> {
        self.live().map(|c| (c.id, self.resolve(&c.to_term()))).collect()
    }

    /// One constraint per line in id order.
    pub fn dump(&self) -> String {
        dump_terms(self.snapshot().iter().map(|(_, t)| t))
    }
}

pub fn dump_terms<'a>(terms: impl Iterator<Item = &'a Term>) -> String {
    let mut out = String::new();
    for t in terms {
        out.push_str(&format_constraint(t));
        out.push('\n');
    }
    out
}

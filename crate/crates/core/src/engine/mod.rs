//! Forward-chaining execution of rule programs.
//!
//! Execution follows the refined, depth-first discipline: a new constraint
//! is activated immediately, tries its non-passive occurrences in rule and
//! head order, and searches partners in ascending id order. Disjunctions and
//! partner choices leave choice points; failure undoes the trail back to the
//! most recent one.

pub mod builtins;
mod machine;
pub mod rule;

use std::fmt;

pub use machine::{run, solutions, Engine, Status};
pub use rule::{Goal, Program, Rule, RuleKind};

use crate::store::{dump_terms, ConstraintId, StoreError};
use crate::syntax::format_constraint;
use crate::term::Term;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProgramError {
    #[error("rule has no heads")]
    NoHeads,
    #[error("head {0} is not a constraint")]
    BadHead(String),
    #[error("passive position {0} does not name a head")]
    BadPassive(usize),
    #[error("guard tell {0} is not a unification")]
    BadTell(String),
    #[error("malformed rule: {0}")]
    BadRule(String),
    #[error("malformed goal: {0}")]
    BadGoal(String),
    #[error("condition {0} may only use builtins")]
    BadCondition(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("type error: {0}")]
    Type(String),
    #[error("non-ground argument in {0}")]
    NonGround(String),
    #[error("illegal goal in condition: {0}")]
    IllegalCondition(String),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Fire { rule: String, ids: Vec<ConstraintId> },
    Insert { id: ConstraintId, constraint: Term },
    Kill(ConstraintId),
    Choice,
    UndoTo(usize),
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Fire { rule, ids } => {
                let ids: Vec<String> = ids.iter().map(|i| i.to_string()).collect();
                write!(f, "fire {rule} ids=({})", ids.join(","))
            }
            TraceEvent::Insert { id, constraint } => {
                write!(f, "insert {id} {}", format_constraint(constraint))
            }
            TraceEvent::Kill(id) => write!(f, "kill {id}"),
            TraceEvent::Choice => write!(f, "choice"),
            TraceEvent::UndoTo(mark) => write!(f, "undo-to {mark}"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub fired: u64,
    pub inserted: u64,
    pub killed: u64,
    pub choice_points: u64,
    pub backtracks: u64,
}

/// The live constraints of a successful derivation, in id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinalStore {
    pub constraints: Vec<(ConstraintId, Term)>,
}

impl FinalStore {
    pub fn terms(&self) -> impl Iterator<Item = &Term> {
        self.constraints.iter().map(|(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn contains(&self, t: &Term) -> bool {
        self.terms().any(|x| x == t)
    }

    pub fn with_functor<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Term> + 'a {
        self.terms()
            .filter(move |t| t.functor().is_some_and(|(f, _)| f.as_str() == name))
    }

    pub fn dump(&self) -> String {
        dump_terms(self.terms())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Success(FinalStore),
    Failure,
}

impl Outcome {
    pub fn store(&self) -> Option<&FinalStore> {
        match self {
            Outcome::Success(s) => Some(s),
            Outcome::Failure => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: Outcome,
    pub stats: Stats,
}

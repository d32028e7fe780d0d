//! Reading rule programs from text.
//!
//! A program file is a sequence of rules in the engine's term syntax plus
//! directives:
//!
//! - `:- use(assumptions).` inserts the assumption operator rules here
//! - `:- abducible(p/N).` inserts the idempotence rule for `p/N` here
//! - `:- negation(p/N).` inserts `not p(..), p(..) <=> fail` here
//! - `:- start(s).` names the constraint that signals a complete parse

use crate::engine::{Program, ProgramError, Rule};
use crate::hypotheses::{abducible_rules, assumption_prelude, negation_rules, require_ground_assertions};
use crate::syntax::{Reader, SyntaxError};
use crate::term::{Symbol, Term, VarSource};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LoadError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{line}: {source}")]
    Rule { line: usize, source: ProgramError },
    #[error("{line}: {message}")]
    Directive { line: usize, message: String },
}

#[derive(Debug, Clone)]
pub struct RuleFile {
    pub program: Program,
    pub start: Option<Symbol>,
}

pub fn load_rules(text: &str) -> Result<RuleFile, LoadError> {
    let mut vars = VarSource::default();
    let mut reader = Reader::new(text, &mut vars)?;
    let mut rules: Vec<Rule> = Vec::new();
    let mut start = None;
    let mut assumptions = false;
    loop {
        let (line, _) = reader.location();
        let Some(clause) = reader.read_clause()? else {
            break;
        };
        let directive = match clause.functor() {
            Some((f, 1)) if f.as_str() == ":-" => &clause.args()[0],
            _ => {
                let rule = Rule::from_term(&clause).map_err(|source| LoadError::Rule { line, source })?;
                rules.push(rule);
                continue;
            }
        };
        let bad = |message: String| LoadError::Directive { line, message };
        match (directive.functor(), directive.args()) {
            (Some((f, 1)), [Term::Const(what)]) if f.as_str() == "use" && what.as_str() == "assumptions" => {
                assumptions = true;
                rules.extend(assumption_prelude());
            }
            (Some((f, 1)), [Term::Const(s)]) if f.as_str() == "start" => start = Some(s.clone()),
            (Some((f, 1)), [spec]) if f.as_str() == "abducible" || f.as_str() == "negation" => {
                let (name, arity) = pred_spec(spec).ok_or_else(|| bad(format!("expected name/arity, found {spec}")))?;
                if f.as_str() == "abducible" {
                    rules.extend(abducible_rules(&name, arity));
                } else {
                    rules.extend(negation_rules(&name, arity));
                }
            }
            _ => return Err(bad(format!("unknown directive {directive}"))),
        }
    }
    let mut program = Program::new(rules).map_err(|source| LoadError::Rule { line: 0, source })?;
    if assumptions {
        program = require_ground_assertions(program);
    }
    Ok(RuleFile { program, start })
}

fn pred_spec(t: &Term) -> Option<(String, usize)> {
    match (t.functor(), t.args()) {
        (Some((f, 2)), [Term::Const(name), Term::Int(n)]) if f.as_str() == "/" && *n >= 0 => {
            Some((name.to_string(), *n as usize))
        }
        _ => None,
    }
}

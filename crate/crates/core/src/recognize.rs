//! Running a compiled grammar over a token sequence and judging the result.

use std::fmt;

use crate::engine::{Engine, EngineError, FinalStore, Program, Stats, Status, TraceEvent};
use crate::grammar::tokenize;
use crate::term::{Symbol, Term};

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// The start symbol spans the whole input.
    Accept,
    /// Recognised phrases other than tokens, in store order.
    Partial(Vec<Term>),
    /// Every branch failed.
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Accept => write!(f, "ACCEPT"),
            Verdict::Partial(spans) => {
                let spans: Vec<String> = spans.iter().map(crate::syntax::format_constraint).collect();
                write!(f, "ROBUST-PARTIAL {}", spans.join(" "))
            }
            Verdict::Fail => write!(f, "FAIL"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Report {
    pub verdict: Verdict,
    pub store: Option<FinalStore>,
    pub stats: Stats,
    pub trace: Vec<TraceEvent>,
}

/// `start(.., 0, n)` is live in the store.
pub fn spans_input(store: &FinalStore, start: &Symbol, n: usize) -> bool {
    store.terms().any(|t| match t {
        Term::Compound(f, args) if f == start && args.len() >= 2 => {
            args[args.len() - 2] == Term::Int(0) && args[args.len() - 1] == Term::Int(n as i64)
        }
        _ => false,
    })
}

pub fn verdict(store: &FinalStore, start: &Symbol, n: usize) -> Verdict {
    if spans_input(store, start, n) {
        return Verdict::Accept;
    }
    Verdict::Partial(
        store
            .terms()
            .filter(|t| t.functor().is_some_and(|(f, a)| f.as_str() != "token" && a >= 2))
            .cloned()
            .collect(),
    )
}

/// Tokenises `tokens`, runs `program` on them and judges the outcome.
pub fn recognize(
    program: &Program,
    start: &Symbol,
    tokens: &[Term],
    eof: bool,
    trace: bool,
) -> Result<Report, EngineError> {
    let mut engine = Engine::new(program);
    if trace {
        engine = engine.with_trace();
    }
    let status = engine.run(&tokenize(tokens, eof))?;
    let (verdict, store) = match status {
        Status::Success => {
            let store = engine.final_store();
            (verdict(&store, start, tokens.len()), Some(store))
        }
        Status::Failure => (Verdict::Fail, None),
    };
    Ok(Report {
        verdict,
        store,
        stats: engine.stats(),
        trace: engine.trace().to_vec(),
    })
}

//! Grammars over token streams and their compilation to rule programs.
//!
//! A token stream `t1 .. tk` is represented by constraints `token(ti,i-1,i)`.
//! A nonterminal `N` with attributes `A..` spanning `i..j` is the constraint
//! `N(A.., i, j)`; attributes always come before the two positions.

mod compile;
mod parse;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use compile::{compile_cfg, compile_with, desugar, CompileOptions, LrConvention};
pub use parse::parse_grammar_source;

use crate::engine::ProgramError;
use crate::syntax::SyntaxError;
use crate::term::{Symbol, Term};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GrammarError {
    #[error("{0}")]
    Syntax(#[from] SyntaxError),
    #[error("{line}: empty production for {lhs}")]
    EmptyProduction { line: usize, lhs: String },
    #[error("{line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("start symbol {0} has no production")]
    NoStart(String),
    #[error(transparent)]
    Program(#[from] ProgramError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum GrammarSymbol {
    Terminal(Term),
    Nonterminal { name: Symbol, attrs: Vec<Term> },
}

impl GrammarSymbol {
    pub fn t(name: &str) -> Self {
        GrammarSymbol::Terminal(Term::atom(name))
    }

    pub fn nt(name: &str) -> Self {
        GrammarSymbol::Nonterminal {
            name: Symbol::new(name),
            attrs: Vec::new(),
        }
    }

    /// Name and arity of the compiled constraint, for nonterminals.
    pub fn key(&self) -> Option<(Symbol, usize)> {
        match self {
            GrammarSymbol::Terminal(_) => None,
            GrammarSymbol::Nonterminal { name, attrs } => Some((name.clone(), attrs.len() + 2)),
        }
    }
}

impl fmt::Display for GrammarSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GrammarSymbol::Terminal(t) => write!(f, "[{}]", crate::syntax::format_term(t, 999)),
            GrammarSymbol::Nonterminal { name, attrs } => {
                write!(f, "{}", Term::from_parts(name.clone(), attrs.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Symbol(GrammarSymbol),
    LeftContext(Vec<Item>),
    /// Alternatives, each a sequence of items.
    RightContext(Vec<Vec<Item>>),
    Goal(Term),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProductionKind {
    Propagation,
    Simplification,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Production {
    pub lhs: GrammarSymbol,
    pub rhs: Vec<Item>,
    /// Goals run before emitting `lhs`.
    pub actions: Vec<Term>,
    /// Goals run after emitting `lhs`.
    pub after: Vec<Term>,
    pub kind: ProductionKind,
    pub lr_mode: bool,
    /// Source line, 0 when built in code.
    pub line: usize,
}

impl Production {
    /// A plain context-free propagation production.
    pub fn cfg(lhs: &str, rhs: Vec<GrammarSymbol>) -> Self {
        Production {
            lhs: GrammarSymbol::nt(lhs),
            rhs: rhs.into_iter().map(Item::Symbol).collect(),
            actions: Vec::new(),
            after: Vec::new(),
            kind: ProductionKind::Propagation,
            lr_mode: false,
            line: 0,
        }
    }

    pub fn simplification(mut self) -> Self {
        self.kind = ProductionKind::Simplification;
        self
    }

    /// Grammar symbols outside context markers.
    pub fn core(&self) -> impl Iterator<Item = &GrammarSymbol> {
        self.rhs.iter().filter_map(|i| match i {
            Item::Symbol(s) => Some(s),
            _ => None,
        })
    }

    fn lhs_label(&self) -> String {
        self.lhs.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    pub productions: Vec<Production>,
    pub start: Symbol,
    pub global_lr: bool,
    pub dedup: bool,
}

impl Grammar {
    /// A grammar with the first production's lhs as start symbol and the
    /// default duplicate elimination (on unless some production simplifies).
    pub fn new(productions: Vec<Production>) -> Result<Self, GrammarError> {
        let start = match productions.first().map(|p| &p.lhs) {
            Some(GrammarSymbol::Nonterminal { name, .. }) => name.clone(),
            _ => return Err(GrammarError::NoStart("<none>".into())),
        };
        let dedup = default_dedup(&productions);
        let g = Grammar {
            productions,
            start,
            global_lr: false,
            dedup,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_start(mut self, start: &str) -> Result<Self, GrammarError> {
        self.start = Symbol::new(start);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), GrammarError> {
        for p in &self.productions {
            if p.core().next().is_none() {
                return Err(GrammarError::EmptyProduction {
                    line: p.line,
                    lhs: p.lhs_label(),
                });
            }
            let bad_token =
                |s: &GrammarSymbol| matches!(s, GrammarSymbol::Nonterminal { name, .. } if name.as_str() == "token");
            if bad_token(&p.lhs) || p.core().any(bad_token) {
                return Err(GrammarError::Malformed {
                    line: p.line,
                    message: "`token` cannot be used as a nonterminal".into(),
                });
            }
            if matches!(p.lhs, GrammarSymbol::Terminal(_)) {
                return Err(GrammarError::Malformed {
                    line: p.line,
                    message: format!("terminal {} on the produced side", p.lhs),
                });
            }
        }
        let has_start = self
            .productions
            .iter()
            .any(|p| matches!(&p.lhs, GrammarSymbol::Nonterminal { name, .. } if *name == self.start));
        if !has_start {
            return Err(GrammarError::NoStart(self.start.to_string()));
        }
        Ok(())
    }

    /// Nonterminal constraint keys in order of first appearance.
    pub fn nonterminals(&self) -> Vec<(Symbol, usize)> {
        let mut out = Vec::new();
        let mut push = |s: &GrammarSymbol| {
            if let Some(k) = s.key() {
                if !out.contains(&k) {
                    out.push(k);
                }
            }
        };
        for p in &self.productions {
            push(&p.lhs);
            for item in &p.rhs {
                visit_symbols(item, &mut push);
            }
        }
        out
    }

    pub fn start_key(&self) -> Option<(Symbol, usize)> {
        self.productions.iter().find_map(|p| match &p.lhs {
            GrammarSymbol::Nonterminal { name, .. } if *name == self.start => p.lhs.key(),
            _ => None,
        })
    }
}

fn visit_symbols(item: &Item, f: &mut impl FnMut(&GrammarSymbol)) {
    match item {
        Item::Symbol(s) => f(s),
        Item::LeftContext(items) => items.iter().for_each(|i| visit_symbols(i, f)),
        Item::RightContext(alts) => alts.iter().flatten().for_each(|i| visit_symbols(i, f)),
        Item::Goal(_) => {}
    }
}

pub(crate) fn default_dedup(productions: &[Production]) -> bool {
    productions.iter().all(|p| p.kind == ProductionKind::Propagation)
}

/// Token constraints for a pre-tokenised input, optionally closed by `eof`.
pub fn tokenize(tokens: &[Term], eof: bool) -> Vec<Term> {
    let mut out: Vec<Term> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| token(t.clone(), i, i + 1))
        .collect();
    if eof {
        let k = tokens.len();
        out.push(token(Term::atom("eof"), k, k + 1));
    }
    out
}

fn token(t: Term, from: usize, to: usize) -> Term {
    Term::compound("token", vec![t, Term::Int(from as i64), Term::Int(to as i64)])
}

/// Splits text on whitespace; integer words become integer terms.
pub fn lex_tokens(text: &str) -> Vec<Term> {
    text.split_whitespace()
        .map(|w| match w.parse::<i64>() {
            Ok(v) => Term::Int(v),
            Err(_) => Term::atom(w),
        })
        .collect()
}

/// Nonterminals that can derive themselves through unit productions.
pub fn loop_check(grammar: &Grammar) -> BTreeSet<(Symbol, usize)> {
    let mut edges: BTreeMap<(Symbol, usize), BTreeSet<(Symbol, usize)>> = BTreeMap::new();
    for p in &grammar.productions {
        let core: Vec<&GrammarSymbol> = p.core().collect();
        if let ([only], Some(from)) = (core.as_slice(), p.lhs.key()) {
            if let Some(to) = only.key() {
                edges.entry(from).or_default().insert(to);
            }
        }
    }
    let mut looping = BTreeSet::new();
    for start in edges.keys() {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&(Symbol, usize)> = edges[start].iter().collect();
        while let Some(n) = stack.pop() {
            if n == start {
                looping.insert(start.clone());
                break;
            }
            if seen.insert(n) {
                if let Some(next) = edges.get(n) {
                    stack.extend(next.iter());
                }
            }
        }
    }
    looping
}

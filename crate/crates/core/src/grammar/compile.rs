use std::collections::{BTreeSet, HashSet};

use crate::engine::{Goal, Program, Rule};
use crate::term::{Symbol, Term, Var, VarSource};

use super::{Grammar, GrammarError, GrammarSymbol, Item, Production, ProductionKind};

/// Which head stays active when LR mode passivates a rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum LrConvention {
    /// Only the textually last head triggers the rule.
    #[default]
    Rightmost,
    /// Only the textually first head triggers the rule.
    Leftmost,
}

#[derive(Debug, Clone, Default)]
pub struct CompileOptions {
    /// Forces LR mode on or off for every rule; `None` follows the grammar.
    pub lr: Option<bool>,
    pub convention: LrConvention,
    /// Overrides the grammar's duplicate elimination setting.
    pub dedup: Option<bool>,
}

pub fn compile_cfg(grammar: &Grammar) -> Result<Program, GrammarError> {
    compile_with(grammar, &CompileOptions::default())
}

pub fn compile_with(grammar: &Grammar, opts: &CompileOptions) -> Result<Program, GrammarError> {
    grammar.validate()?;
    let mut vars = VarSource::starting_at(grammar.productions.iter().map(max_serial).max().unwrap_or(0) + 1);
    let mut rules = Vec::new();
    if opts.dedup.unwrap_or(grammar.dedup) {
        for (name, arity) in grammar.nonterminals() {
            rules.push(dedup_rule(&name, arity, &mut vars));
        }
    }
    for p in &grammar.productions {
        let lr = opts.lr.unwrap_or(grammar.global_lr || p.lr_mode);
        rules.push(translate(p, lr, opts.convention, &mut vars)?);
    }
    Ok(Program::new(rules)?)
}

/// Translates one production, honouring its own `ruleLR` flag.
pub fn desugar(p: &Production) -> Result<Rule, GrammarError> {
    let mut vars = VarSource::starting_at(max_serial(p) + 1);
    translate(p, p.lr_mode, LrConvention::Rightmost, &mut vars)
}

/// `N(X..)#passive \ N(X..) <=> true`: a newer copy of a live constraint is dropped.
fn dedup_rule(name: &Symbol, arity: usize, vars: &mut VarSource) -> Rule {
    let args: Vec<Term> = (1..=arity).map(|i| Term::Var(vars.fresh(&format!("X{i}")))).collect();
    let head = Term::from_parts(name.clone(), args);
    Rule::new(vec![head.clone()], vec![head], Goal::True).with_passive([0])
}

fn max_serial(p: &Production) -> u64 {
    let mut terms = Vec::new();
    collect_terms(p, &mut terms);
    terms.iter().filter_map(|t| t.max_serial()).max().unwrap_or(0)
}

fn collect_terms(p: &Production, out: &mut Vec<Term>) {
    fn sym(s: &GrammarSymbol, out: &mut Vec<Term>) {
        match s {
            GrammarSymbol::Terminal(t) => out.push(t.clone()),
            GrammarSymbol::Nonterminal { attrs, .. } => out.extend(attrs.iter().cloned()),
        }
    }
    fn item(i: &Item, out: &mut Vec<Term>) {
        match i {
            Item::Symbol(s) => sym(s, out),
            Item::Goal(g) => out.push(g.clone()),
            Item::LeftContext(items) => items.iter().for_each(|i| item(i, out)),
            Item::RightContext(alts) => alts.iter().flatten().for_each(|i| item(i, out)),
        }
    }
    sym(&p.lhs, out);
    p.rhs.iter().for_each(|i| item(i, out));
    out.extend(p.actions.iter().cloned());
    out.extend(p.after.iter().cloned());
}

/// Picks the first candidate name that no user variable starts with.
fn pick_prefix(p: &Production, candidates: &[&'static str]) -> &'static str {
    let mut terms = Vec::new();
    collect_terms(p, &mut terms);
    let mut used: HashSet<String> = HashSet::new();
    for t in &terms {
        for v in t.variables() {
            used.insert(v.name.to_string());
        }
    }
    candidates
        .iter()
        .copied()
        .find(|c| !used.iter().any(|u| u.starts_with(c)))
        .unwrap_or(candidates[candidates.len() - 1])
}

struct Builder<'a> {
    p: &'a Production,
    vars: &'a mut VarSource,
    prefix: &'static str,
    positions: Vec<Var>,
    ask: Vec<Term>,
    tell: Vec<Term>,
}

impl Builder<'_> {
    fn malformed(&self, message: impl Into<String>) -> GrammarError {
        GrammarError::Malformed {
            line: self.p.line,
            message: message.into(),
        }
    }

    fn position(&mut self, i: usize) -> Term {
        while self.positions.len() <= i {
            let n = self.positions.len();
            let v = self.vars.fresh(&format!("{}{n}", self.prefix));
            self.positions.push(v);
        }
        Term::Var(self.positions[i].clone())
    }

    fn guard(&mut self, goal: &Term) {
        for g in crate::engine::rule::conjuncts(goal) {
            match g.functor() {
                Some((f, 2)) if f.as_str() == "=" => self.tell.push(g.clone()),
                Some((f, 0)) if f.as_str() == "true" => {}
                _ => self.ask.push(g.clone()),
            }
        }
    }

    /// Heads for a flat item sequence starting at position `at`.
    fn items(&mut self, items: &[Item], at: &mut usize, heads: &mut Vec<Term>) -> Result<(), GrammarError> {
        for item in items {
            match item {
                Item::Symbol(s) => {
                    let from = self.position(*at);
                    let to = self.position(*at + 1);
                    *at += 1;
                    heads.push(span(s, from, to));
                }
                Item::Goal(g) => self.guard(g),
                Item::LeftContext(_) | Item::RightContext(_) => {
                    return Err(self.malformed("context marker in the wrong place"))
                }
            }
        }
        Ok(())
    }
}

fn span(s: &GrammarSymbol, from: Term, to: Term) -> Term {
    match s {
        GrammarSymbol::Terminal(t) => Term::compound("token", vec![t.clone(), from, to]),
        GrammarSymbol::Nonterminal { name, attrs } => {
            let mut args = attrs.clone();
            args.push(from);
            args.push(to);
            Term::from_parts(name.clone(), args)
        }
    }
}

fn translate(p: &Production, lr: bool, convention: LrConvention, vars: &mut VarSource) -> Result<Rule, GrammarError> {
    let prefix = pick_prefix(p, &["N", "P", "I", "Pos"]);
    let mut b = Builder {
        p,
        vars,
        prefix,
        positions: Vec::new(),
        ask: Vec::new(),
        tell: Vec::new(),
    };

    let mut rhs = p.rhs.as_slice();
    let mut left_items: &[Item] = &[];
    if let Some((Item::LeftContext(items), rest)) = rhs.split_first() {
        left_items = items;
        rhs = rest;
    }
    let mut right_alts: Option<&Vec<Vec<Item>>> = None;
    if let Some((Item::RightContext(alts), rest)) = rhs.split_last() {
        right_alts = Some(alts);
        rhs = rest;
    }

    let mut at = 0;
    let mut left = Vec::new();
    b.items(left_items, &mut at, &mut left)?;
    let start = at;
    let mut core = Vec::new();
    b.items(rhs, &mut at, &mut core)?;
    let end = at;
    if core.is_empty() {
        return Err(GrammarError::EmptyProduction {
            line: p.line,
            lhs: p.lhs.to_string(),
        });
    }

    let mut right = Vec::new();
    match right_alts.map(|a| a.as_slice()) {
        None => {}
        Some([]) => return Err(b.malformed("empty right context")),
        Some([alt]) => b.items(alt, &mut at, &mut right)?,
        Some(alts) => {
            let mut terminals = Vec::new();
            for alt in alts {
                match alt.as_slice() {
                    [Item::Symbol(GrammarSymbol::Terminal(t))] => terminals.push(t.clone()),
                    _ => return Err(b.malformed("right context alternatives must each be a single terminal")),
                }
            }
            let r_name = pick_prefix(p, &["R", "T", "Next"]);
            let r = Term::Var(b.vars.fresh(r_name));
            let from = b.position(at);
            let to = b.position(at + 1);
            right.push(Term::compound("token", vec![r.clone(), from, to]));
            b.ask.push(Term::compound("member", vec![r, Term::list(terminals)]));
        }
    }

    let mut body = Vec::new();
    for g in &p.actions {
        body.push(Goal::from_term(g)?);
    }
    let from = b.position(start);
    let to = b.position(end);
    body.push(Goal::Call(span(&p.lhs, from, to)));
    for g in &p.after {
        body.push(Goal::from_term(g)?);
    }

    let (left_n, core_n, right_n) = (left.len(), core.len(), right.len());
    let (kept, removed, textual): (Vec<Term>, Vec<Term>, Vec<usize>) = match p.kind {
        ProductionKind::Propagation => {
            let all: Vec<Term> = left.into_iter().chain(core).chain(right).collect();
            let order = (0..all.len()).collect();
            (all, Vec::new(), order)
        }
        ProductionKind::Simplification => {
            // Head positions are kept ++ removed: left, right, then core.
            let kept: Vec<Term> = left.into_iter().chain(right).collect();
            let order = (0..left_n)
                .chain(left_n + right_n..left_n + right_n + core_n)
                .chain(left_n..left_n + right_n)
                .collect();
            (kept, core, order)
        }
    };

    let mut rule = Rule::new(kept, removed, Goal::conj(body))
        .with_ask(b.ask)
        .with_tell(b.tell);
    if lr {
        let active = match convention {
            LrConvention::Rightmost => *textual.last().expect("nonempty"),
            LrConvention::Leftmost => textual[0],
        };
        let passive: BTreeSet<usize> = textual.iter().copied().filter(|&i| i != active).collect();
        rule = rule.with_passive(passive);
    }
    rule.validate()?;
    Ok(rule)
}

//! Independent oracles and random input generators shared by the test suites.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use chr_grammar::engine::FinalStore;
use chr_grammar::grammar::{Grammar, GrammarSymbol, Production};
use chr_grammar::term::Term;

// ---------------------------------------------------------------- CFG / CYK

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sym {
    T(u8),
    N(usize),
}

#[derive(Debug, Clone)]
pub struct Cfg {
    pub nonterminals: usize,
    pub productions: Vec<(usize, Vec<Sym>)>,
}

pub fn nt_name(i: usize) -> String {
    format!("n{i}")
}

pub fn t_name(t: u8) -> String {
    ((b'a' + t) as char).to_string()
}

impl Cfg {
    pub fn to_grammar(&self) -> Grammar {
        let prods = self
            .productions
            .iter()
            .map(|(lhs, rhs)| {
                let rhs = rhs
                    .iter()
                    .map(|s| match s {
                        Sym::T(t) => GrammarSymbol::t(&t_name(*t)),
                        Sym::N(n) => GrammarSymbol::nt(&nt_name(*n)),
                    })
                    .collect();
                Production::cfg(&nt_name(*lhs), rhs)
            })
            .collect();
        Grammar::new(prods).unwrap()
    }

    /// Nonterminals on a cycle of unit productions, by reachability.
    pub fn unit_cycles(&self) -> BTreeSet<usize> {
        let mut reach = vec![vec![false; self.nonterminals]; self.nonterminals];
        for (lhs, rhs) in &self.productions {
            if let [Sym::N(m)] = rhs.as_slice() {
                reach[*lhs][*m] = true;
            }
        }
        for k in 0..self.nonterminals {
            for i in 0..self.nonterminals {
                for j in 0..self.nonterminals {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        (0..self.nonterminals).filter(|&i| reach[i][i]).collect()
    }
}

/// Random grammar over terminals a, b with nonterminal n0 as start.
pub fn random_cfg(rng: &mut impl Rng, max_nts: usize, max_prods: usize, max_rhs: usize) -> Cfg {
    let k = rng.gen_range(1..=max_nts);
    let count = rng.gen_range(1..=max_prods);
    let mut productions = Vec::new();
    for i in 0..count {
        let lhs = if i == 0 { 0 } else { rng.gen_range(0..k) };
        let len = rng.gen_range(1..=max_rhs);
        let rhs = (0..len)
            .map(|_| {
                if rng.gen_bool(0.4) {
                    Sym::T(rng.gen_range(0..2))
                } else {
                    Sym::N(rng.gen_range(0..k))
                }
            })
            .collect();
        productions.push((lhs, rhs));
    }
    Cfg {
        nonterminals: k,
        productions,
    }
}

/// Every `(nonterminal, i, j)` with a derivation of `input[i..j]`.
pub fn cyk(cfg: &Cfg, input: &[u8]) -> BTreeSet<(usize, usize, usize)> {
    let n = input.len();
    let mut chart: HashSet<(usize, usize, usize)> = HashSet::new();
    for len in 1..=n {
        for i in 0..=n - len {
            let j = i + len;
            loop {
                let before = chart.len();
                for (lhs, rhs) in &cfg.productions {
                    if !chart.contains(&(*lhs, i, j)) && covers(rhs, i, j, input, &chart) {
                        chart.insert((*lhs, i, j));
                    }
                }
                if chart.len() == before {
                    break;
                }
            }
        }
    }
    chart.into_iter().collect()
}

fn covers(rhs: &[Sym], i: usize, j: usize, input: &[u8], chart: &HashSet<(usize, usize, usize)>) -> bool {
    let Some((first, rest)) = rhs.split_first() else {
        return i == j;
    };
    if j < i + rhs.len() {
        return false;
    }
    let last_k = j - rest.len();
    (i + 1..=last_k).any(|k| {
        let ok = match first {
            Sym::T(t) => k == i + 1 && input[i] == *t,
            Sym::N(m) => chart.contains(&(*m, i, k)),
        };
        ok && covers(rest, k, j, input, chart)
    })
}

/// Nonterminal spans in a final store, with multiplicities.
pub fn store_spans(store: &FinalStore) -> Vec<(String, usize, usize)> {
    store
        .terms()
        .filter_map(|t| match t {
            Term::Compound(f, args) if f.as_str() != "token" && args.len() == 2 => match (&args[0], &args[1]) {
                (Term::Int(i), Term::Int(j)) => Some((f.to_string(), *i as usize, *j as usize)),
                _ => None,
            },
            _ => None,
        })
        .collect()
}

pub fn input_terms(input: &[u8]) -> Vec<Term> {
    input.iter().map(|t| Term::atom(&t_name(*t))).collect()
}

// ------------------------------------------------------------- expressions

#[derive(Debug, Clone)]
pub enum Expr {
    Int(i64),
    Bin(char, Box<Expr>, Box<Expr>),
    Paren(Box<Expr>),
}

pub fn random_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.3) {
        return Expr::Int(rng.gen_range(0..10));
    }
    if rng.gen_bool(0.2) {
        return Expr::Paren(Box::new(random_expr(rng, depth - 1)));
    }
    let op = *['+', '*', '^'].choose(rng).unwrap();
    Expr::Bin(
        op,
        Box::new(random_expr(rng, depth - 1)),
        Box::new(random_expr(rng, depth - 1)),
    )
}

/// Flat token text of an expression; parentheses only where written.
pub fn expr_tokens(e: &Expr, out: &mut Vec<String>) {
    match e {
        Expr::Int(v) => out.push(v.to_string()),
        Expr::Bin(op, l, r) => {
            expr_tokens(l, out);
            out.push(op.to_string());
            expr_tokens(r, out);
        }
        Expr::Paren(inner) => {
            out.push("(".into());
            expr_tokens(inner, out);
            out.push(")".into());
        }
    }
}

/// Precedence-climbing parse of a token list; `^` groups right, `*` and
/// `+` group left, `^` > `*` > `+`. Returns the tree.
pub fn precedence_parse(tokens: &[String]) -> Option<Expr> {
    let mut pos = 0;
    let e = climb(tokens, &mut pos, 0)?;
    (pos == tokens.len()).then_some(e)
}

fn prec(op: &str) -> Option<(u8, bool)> {
    match op {
        "+" => Some((1, false)),
        "*" => Some((2, false)),
        "^" => Some((3, true)),
        _ => None,
    }
}

fn primary(tokens: &[String], pos: &mut usize) -> Option<Expr> {
    let t = tokens.get(*pos)?;
    *pos += 1;
    if t == "(" {
        let e = climb(tokens, pos, 0)?;
        if tokens.get(*pos)? != ")" {
            return None;
        }
        *pos += 1;
        return Some(Expr::Paren(Box::new(e)));
    }
    t.parse().ok().map(Expr::Int)
}

fn climb(tokens: &[String], pos: &mut usize, min: u8) -> Option<Expr> {
    let mut lhs = primary(tokens, pos)?;
    while let Some((p, right)) = tokens.get(*pos).and_then(|t| prec(t)) {
        if p < min {
            break;
        }
        let op = tokens[*pos].chars().next().unwrap();
        *pos += 1;
        let rhs = climb(tokens, pos, if right { p } else { p + 1 })?;
        lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
    }
    Some(lhs)
}

/// Ints, operators and parenthesised groups: one reduction each.
pub fn node_count(e: &Expr) -> u64 {
    match e {
        Expr::Int(_) => 1,
        Expr::Bin(_, l, r) => 1 + node_count(l) + node_count(r),
        Expr::Paren(inner) => 1 + node_count(inner),
    }
}

// ------------------------------------------------------------ pronoun texts

pub const NAMES: [(&str, &str); 4] = [("mary", "fem"), ("martha", "fem"), ("peter", "masc"), ("john", "masc")];
pub const PRONOUNS: [(&str, &str); 4] = [("she", "fem"), ("her", "fem"), ("he", "masc"), ("him", "masc")];
pub const VERBS: [&str; 3] = ["likes", "loves", "hates"];

fn gender_of(word: &str) -> Option<(&'static str, bool)> {
    NAMES
        .iter()
        .map(|(w, g)| (w, g, true))
        .chain(PRONOUNS.iter().map(|(w, g)| (w, g, false)))
        .find(|(w, _, _)| **w == word)
        .map(|(_, g, name)| (*g, name))
}

/// Random text of `sentences` simple sentences `X verb Y .`.
pub fn random_text(rng: &mut impl Rng, sentences: usize) -> Vec<String> {
    let mut words = Vec::new();
    for _ in 0..sentences {
        for slot in 0..3 {
            if slot == 1 {
                words.push(VERBS.choose(rng).unwrap().to_string());
            } else if rng.gen_bool(0.5) {
                words.push(NAMES.choose(rng).unwrap().0.to_string());
            } else {
                words.push(PRONOUNS.choose(rng).unwrap().0.to_string());
            }
        }
        words.push(".".into());
    }
    words
}

/// Fact sets of all consistent readings: each pronoun refers to an
/// individual named earlier in the text, of the pronoun's gender, and the
/// resulting facts violate none of the semantic constraints.
pub fn brute_force_readings(words: &[String]) -> BTreeSet<BTreeSet<(String, String, String)>> {
    let mut pronouns = Vec::new();
    for (i, w) in words.iter().enumerate() {
        if let Some((g, false)) = gender_of(w) {
            let candidates: BTreeSet<&str> = words[..i]
                .iter()
                .filter(|x| matches!(gender_of(x), Some((_, true))))
                .map(|x| x.as_str())
                .collect();
            pronouns.push((i, g, candidates.into_iter().collect::<Vec<_>>()));
        }
    }
    let mut out = BTreeSet::new();
    let mut choice = vec![0usize; pronouns.len()];
    'outer: loop {
        let mut referent: Vec<String> = words.to_vec();
        let mut ok = true;
        for (k, (i, g, cands)) in pronouns.iter().enumerate() {
            match cands.get(choice[k]) {
                Some(c) => {
                    if gender_of(c).unwrap().0 != *g {
                        ok = false;
                    }
                    referent[*i] = c.to_string();
                }
                None => ok = false,
            }
        }
        if ok {
            let facts: BTreeSet<(String, String, String)> = referent
                .chunks(4)
                .map(|s| (s[1].clone(), s[0].clone(), s[2].clone()))
                .collect();
            let has = |v: &str, x: &str, y: &str| facts.contains(&(v.into(), x.into(), y.into()));
            let violates = facts.iter().any(|(v, x, y)| {
                (v == "hates" && x == y) || (v == "hates" && (has("likes", x, y) || has("loves", x, y)))
            });
            if !violates {
                out.insert(facts);
            }
        }
        // next combination
        for k in 0..choice.len() {
            choice[k] += 1;
            if choice[k] < pronouns[k].2.len().max(1) {
                continue 'outer;
            }
            choice[k] = 0;
        }
        break;
    }
    out
}

/// The `fact/3` constraints of a final store.
pub fn fact_set(store: &FinalStore) -> BTreeSet<(String, String, String)> {
    store
        .with_functor("fact")
        .map(|t| {
            let a = t.args();
            (a[0].to_string(), a[1].to_string(), a[2].to_string())
        })
        .collect()
}

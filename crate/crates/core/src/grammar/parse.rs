use crate::engine::rule::conjuncts;
use crate::syntax::Reader;
use crate::term::{Symbol, Term, VarSource};

use super::{default_dedup, Grammar, GrammarError, GrammarSymbol, Item, Production, ProductionKind};

/// Reads a grammar in `.chrg` form.
///
/// ```text
/// :- modeLR.                       % LR mode for every rule
/// :- start(s).   :- dedup(off).
/// sentence(S) --> np(X), [likes], np(Y), {S = likes(X,Y)}.
/// ruleLR exp, [+], exp /- ([+];[eof]) <-> exp.
/// -\ [a], b, c <-> d.
/// ```
pub fn parse_grammar_source(text: &str) -> Result<Grammar, GrammarError> {
    let mut vars = VarSource::default();
    let mut reader = Reader::new(text, &mut vars)?;
    let mut productions = Vec::new();
    let mut start = None;
    let mut global_lr = false;
    let mut dedup = None;
    loop {
        let (line, _) = reader.location();
        let Some(clause) = reader.read_clause()? else {
            break;
        };
        let malformed = |message: String| GrammarError::Malformed { line, message };
        match clause.functor() {
            Some((f, 1)) if f.as_str() == ":-" => {
                let d = &clause.args()[0];
                match (d.functor(), d.args()) {
                    (Some((f, 0)), _) if f.as_str() == "modeLR" => global_lr = true,
                    (Some((f, 1)), [Term::Const(s)]) if f.as_str() == "start" => start = Some(s.clone()),
                    (Some((f, 1)), [Term::Const(s)]) if f.as_str() == "dedup" => {
                        dedup = Some(match s.as_str() {
                            "on" => true,
                            "off" => false,
                            other => return Err(malformed(format!("dedup expects on or off, not {other}"))),
                        })
                    }
                    _ => return Err(malformed(format!("unknown directive {d}"))),
                }
            }
            _ => productions.push(production(&clause, line)?),
        }
    }
    if productions.is_empty() {
        return Err(GrammarError::NoStart("<none>".into()));
    }
    let mut g = Grammar {
        start: Symbol::new("?"),
        global_lr,
        dedup: dedup.unwrap_or_else(|| default_dedup(&productions)),
        productions,
    };
    g.start = match start {
        Some(s) => s,
        None => match &g.productions[0].lhs {
            GrammarSymbol::Nonterminal { name, .. } => name.clone(),
            GrammarSymbol::Terminal(_) => Symbol::new("?"),
        },
    };
    g.validate()?;
    Ok(g)
}

fn production(clause: &Term, line: usize) -> Result<Production, GrammarError> {
    let malformed = |message: String| GrammarError::Malformed { line, message };
    let (lr_mode, t) = match clause.functor() {
        Some((f, 1)) if f.as_str() == "ruleLR" => (true, &clause.args()[0]),
        _ => (false, clause),
    };
    let kind = match t.functor() {
        Some((f, 2)) if f.as_str() == "-->" => ProductionKind::Propagation,
        Some((f, 2)) if f.as_str() == "<->" => ProductionKind::Simplification,
        _ => return Err(malformed(format!("expected a grammar rule, found {t}"))),
    };
    let (lhs_side, produced) = (&t.args()[0], &t.args()[1]);

    let mut rest = lhs_side;
    let mut left = None;
    let mut right = None;
    if let Some((f, 1)) = rest.functor() {
        if f.as_str() == "-\\" {
            left = Some(());
            rest = &rest.args()[0];
        }
    }
    if let Some((f, 2)) = rest.functor() {
        if f.as_str() == "/-" {
            right = Some(&rest.args()[1]);
            rest = &rest.args()[0];
        }
    }

    let mut rhs = Vec::new();
    let mut core_terms = conjuncts(rest);
    if left.is_some() {
        let ctx = core_terms.remove(0);
        let mut items = Vec::new();
        for c in conjuncts(ctx) {
            items.extend(items_of(c, line)?);
        }
        rhs.push(Item::LeftContext(items));
    }
    for c in core_terms {
        items_of_into(c, line, &mut rhs)?;
    }
    if let Some(r) = right {
        let mut alts = Vec::new();
        for alt in alternatives(r) {
            let mut items = Vec::new();
            for c in conjuncts(alt) {
                items.extend(items_of(c, line)?);
            }
            alts.push(items);
        }
        rhs.push(Item::RightContext(alts));
    }

    let mut lhs = None;
    let mut actions = Vec::new();
    let mut after = Vec::new();
    for c in conjuncts(produced) {
        match c.functor() {
            Some((f, 1)) if f.as_str() == "{}" => {
                let goal = c.args()[0].clone();
                if lhs.is_none() {
                    actions.push(goal);
                } else {
                    after.push(goal);
                }
            }
            _ => {
                if lhs.is_some() {
                    return Err(malformed("more than one nonterminal produced".into()));
                }
                match symbol(c, line)? {
                    s @ GrammarSymbol::Nonterminal { .. } => lhs = Some(s),
                    s => return Err(malformed(format!("terminal {s} on the produced side"))),
                }
            }
        }
    }
    let lhs = lhs.ok_or_else(|| malformed("no nonterminal produced".into()))?;
    let p = Production {
        lhs,
        rhs,
        actions,
        after,
        kind,
        lr_mode,
        line,
    };
    if p.core().next().is_none() {
        return Err(GrammarError::EmptyProduction {
            line,
            lhs: p.lhs.to_string(),
        });
    }
    Ok(p)
}

fn alternatives(t: &Term) -> Vec<&Term> {
    let mut out = Vec::new();
    let mut cur = t;
    while let Term::Compound(f, args) = cur {
        if f.as_str() != ";" || args.len() != 2 {
            break;
        }
        out.push(&args[0]);
        cur = &args[1];
    }
    out.push(cur);
    out
}

fn items_of(t: &Term, line: usize) -> Result<Vec<Item>, GrammarError> {
    let mut out = Vec::new();
    items_of_into(t, line, &mut out)?;
    Ok(out)
}

fn items_of_into(t: &Term, line: usize, out: &mut Vec<Item>) -> Result<(), GrammarError> {
    if let Some(items) = t.list_items() {
        out.extend(
            items
                .into_iter()
                .map(|x| Item::Symbol(GrammarSymbol::Terminal(x.clone()))),
        );
        return Ok(());
    }
    match t.functor() {
        Some((f, 1)) if f.as_str() == "{}" => out.push(Item::Goal(t.args()[0].clone())),
        Some((f, 2)) if f.as_str() == "," => {
            for c in conjuncts(t) {
                items_of_into(c, line, out)?;
            }
        }
        _ => out.push(Item::Symbol(symbol(t, line)?)),
    }
    Ok(())
}

fn symbol(t: &Term, line: usize) -> Result<GrammarSymbol, GrammarError> {
    if let Some(items) = t.list_items() {
        if let [one] = items.as_slice() {
            return Ok(GrammarSymbol::Terminal((*one).clone()));
        }
    }
    match t {
        Term::Const(name) => Ok(GrammarSymbol::Nonterminal {
            name: name.clone(),
            attrs: Vec::new(),
        }),
        Term::Compound(name, args) if !matches!(name.as_str(), "." | "{}" | "-\\" | "/-" | ";") => {
            Ok(GrammarSymbol::Nonterminal {
                name: name.clone(),
                attrs: args.clone(),
            })
        }
        other => Err(GrammarError::Malformed {
            line,
            message: format!("not a grammar symbol: {other}"),
        }),
    }
}

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use crate::store::FunctorKey;
use crate::syntax::format_term;
use crate::term::{apply, Substitution, Symbol, Term, Var, VarSource};

use super::builtins::is_builtin;
use super::ProgramError;

#[derive(Debug, Clone, PartialEq)]
pub enum Goal {
    True,
    Fail,
    /// Emit a constraint.
    Call(Term),
    Builtin(Term),
    And(Box<Goal>, Box<Goal>),
    Or(Box<Goal>, Box<Goal>),
    IfThenElse(Box<Goal>, Box<Goal>, Box<Goal>),
}

impl Goal {
    pub fn from_term(t: &Term) -> Result<Goal, ProgramError> {
        let Some((f, arity)) = t.functor() else {
            return Err(ProgramError::BadGoal(t.to_string()));
        };
        let args = t.args();
        Ok(match (f.as_str(), arity) {
            ("true", 0) => Goal::True,
            ("fail", 0) | ("false", 0) => Goal::Fail,
            (",", 2) => Goal::And(
                Box::new(Goal::from_term(&args[0])?),
                Box::new(Goal::from_term(&args[1])?),
            ),
            (";", 2) => match args[0].functor() {
                Some((c, 2)) if c.as_str() == "->" => {
                    let cond = Goal::from_term(&args[0].args()[0])?;
                    if !cond.is_query() {
                        return Err(ProgramError::BadCondition(args[0].args()[0].to_string()));
                    }
                    Goal::IfThenElse(
                        Box::new(cond),
                        Box::new(Goal::from_term(&args[0].args()[1])?),
                        Box::new(Goal::from_term(&args[1])?),
                    )
                }
                _ => Goal::Or(
                    Box::new(Goal::from_term(&args[0])?),
                    Box::new(Goal::from_term(&args[1])?),
                ),
            },
            ("->", 2) => {
                let cond = Goal::from_term(&args[0])?;
                if !cond.is_query() {
                    return Err(ProgramError::BadCondition(args[0].to_string()));
                }
                Goal::IfThenElse(
                    Box::new(cond),
                    Box::new(Goal::from_term(&args[1])?),
                    Box::new(Goal::Fail),
                )
            }
            (name, n) if is_builtin(name, n) => Goal::Builtin(t.clone()),
            _ => Goal::Call(t.clone()),
        })
    }

    /// Builtin-only goals that can serve as an if-then-else condition.
    pub fn is_query(&self) -> bool {
        match self {
            Goal::True | Goal::Fail | Goal::Builtin(_) => true,
            Goal::And(a, b) => a.is_query() && b.is_query(),
            _ => false,
        }
    }

    pub fn to_term(&self) -> Term {
        match self {
            Goal::True => Term::atom("true"),
            Goal::Fail => Term::atom("fail"),
            Goal::Call(t) | Goal::Builtin(t) => t.clone(),
            Goal::And(a, b) => Term::compound(",", vec![a.to_term(), b.to_term()]),
            Goal::Or(a, b) => Term::compound(";", vec![a.to_term(), b.to_term()]),
            Goal::IfThenElse(c, t, e) => Term::compound(
                ";",
                vec![Term::compound("->", vec![c.to_term(), t.to_term()]), e.to_term()],
            ),
        }
    }

    pub fn apply(&self, s: &Substitution) -> Goal {
        if s.is_empty() {
            return self.clone();
        }
        match self {
            Goal::True | Goal::Fail => self.clone(),
            Goal::Call(t) => Goal::Call(apply(t, s)),
            Goal::Builtin(t) => Goal::Builtin(apply(t, s)),
            Goal::And(a, b) => Goal::And(Box::new(a.apply(s)), Box::new(b.apply(s))),
            Goal::Or(a, b) => Goal::Or(Box::new(a.apply(s)), Box::new(b.apply(s))),
            Goal::IfThenElse(c, t, e) => {
                Goal::IfThenElse(Box::new(c.apply(s)), Box::new(t.apply(s)), Box::new(e.apply(s)))
            }
        }
    }

    /// Conjunction of goals; `True` when empty.
    pub fn conj(goals: Vec<Goal>) -> Goal {
        let mut it = goals.into_iter().rev();
        let Some(last) = it.next() else {
            return Goal::True;
        };
        it.fold(last, |acc, g| Goal::And(Box::new(g), Box::new(acc)))
    }

    fn flatten<'a>(&'a self, out: &mut Vec<&'a Goal>) {
        match self {
            Goal::And(a, b) => {
                a.flatten(out);
                b.flatten(out);
            }
            g => out.push(g),
        }
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        self.to_term().collect_vars(out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    Propagation,
    Simplification,
    Simpagation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: Option<Symbol>,
    pub kept: Vec<Term>,
    pub removed: Vec<Term>,
    /// Head positions (kept heads first, then removed) that never trigger.
    pub passive: BTreeSet<usize>,
    pub guard_ask: Vec<Term>,
    /// `A = B` unifications run after the ask part succeeds.
    pub guard_tell: Vec<Term>,
    pub body: Goal,
    /// When set, each firing leaves a choice point that resumes the partner
    /// search past the chosen partners.
    pub backtrack_partners: bool,
}

impl Rule {
    pub fn new(kept: Vec<Term>, removed: Vec<Term>, body: Goal) -> Rule {
        Rule {
            name: None,
            kept,
            removed,
            passive: BTreeSet::new(),
            guard_ask: Vec::new(),
            guard_tell: Vec::new(),
            body,
            backtrack_partners: false,
        }
    }

    pub fn propagation(heads: Vec<Term>, body: Goal) -> Rule {
        Rule::new(heads, Vec::new(), body)
    }

    pub fn simplification(heads: Vec<Term>, body: Goal) -> Rule {
        Rule::new(Vec::new(), heads, body)
    }

    pub fn named(mut self, name: &str) -> Rule {
        self.name = Some(Symbol::new(name));
        self
    }

    pub fn with_ask(mut self, goals: Vec<Term>) -> Rule {
        self.guard_ask = goals;
        self
    }

    pub fn with_tell(mut self, goals: Vec<Term>) -> Rule {
        self.guard_tell = goals;
        self
    }

    pub fn with_passive(mut self, positions: impl IntoIterator<Item = usize>) -> Rule {
        self.passive.extend(positions);
        self
    }

    pub fn kind(&self) -> RuleKind {
        match (self.kept.is_empty(), self.removed.is_empty()) {
            (_, true) => RuleKind::Propagation,
            (true, false) => RuleKind::Simplification,
            (false, false) => RuleKind::Simpagation,
        }
    }

    pub fn head_count(&self) -> usize {
        self.kept.len() + self.removed.len()
    }

    pub fn head(&self, pos: usize) -> &Term {
        if pos < self.kept.len() {
            &self.kept[pos]
        } else {
            &self.removed[pos - self.kept.len()]
        }
    }

    pub fn heads(&self) -> impl Iterator<Item = &Term> {
        self.kept.iter().chain(self.removed.iter())
    }

    pub fn is_removed(&self, pos: usize) -> bool {
        pos >= self.kept.len()
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        if self.head_count() == 0 {
            return Err(ProgramError::NoHeads);
        }
        for h in self.heads() {
            match h {
                Term::Const(_) | Term::Compound(..) => {}
                other => return Err(ProgramError::BadHead(other.to_string())),
            }
        }
        if let Some(&p) = self.passive.iter().find(|&&p| p >= self.head_count()) {
            return Err(ProgramError::BadPassive(p));
        }
        for t in &self.guard_tell {
            if !matches!(t.functor(), Some((f, 2)) if f.as_str() == "=") {
                return Err(ProgramError::BadTell(t.to_string()));
            }
        }
        Ok(())
    }

    /// Variables of the rule that do not occur in any head.
    pub fn local_vars(&self) -> Vec<Var> {
        let mut head_vars = Vec::new();
        self.heads().for_each(|h| h.collect_vars(&mut head_vars));
        let mut all = Vec::new();
        self.guard_ask.iter().for_each(|g| g.collect_vars(&mut all));
        self.guard_tell.iter().for_each(|g| g.collect_vars(&mut all));
        self.body.collect_vars(&mut all);
        all.retain(|v| !head_vars.contains(v));
        all
    }

    pub fn max_serial(&self) -> u64 {
        let mut vars = Vec::new();
        self.heads().for_each(|h| h.collect_vars(&mut vars));
        self.guard_ask.iter().for_each(|g| g.collect_vars(&mut vars));
        self.guard_tell.iter().for_each(|g| g.collect_vars(&mut vars));
        self.body.collect_vars(&mut vars);
        vars.iter().map(|v| v.serial).max().unwrap_or(0)
    }

    /// A variant of the rule whose variables are all fresh.
    pub fn rename_apart(&self, source: &mut VarSource) -> Rule {
        let mut vars = Vec::new();
        self.heads().for_each(|h| h.collect_vars(&mut vars));
        self.guard_ask.iter().for_each(|g| g.collect_vars(&mut vars));
        self.guard_tell.iter().for_each(|g| g.collect_vars(&mut vars));
        self.body.collect_vars(&mut vars);
        let mut s = Substitution::new();
        for v in vars {
            let fresh = source.fresh(v.name.as_str());
            s.bind(v, Term::Var(fresh));
        }
        Rule {
            name: self.name.clone(),
            kept: self.kept.iter().map(|t| apply(t, &s)).collect(),
            removed: self.removed.iter().map(|t| apply(t, &s)).collect(),
            passive: self.passive.clone(),
            guard_ask: self.guard_ask.iter().map(|t| apply(t, &s)).collect(),
            guard_tell: self.guard_tell.iter().map(|t| apply(t, &s)).collect(),
            body: self.body.apply(&s),
            backtrack_partners: self.backtrack_partners,
        }
    }

    /// Reads a rule from its term form:
    /// `[Name @] Heads (==>|<=>) [Ask [& Tell] |] Body [pragma Pragmas]`.
    pub fn from_term(t: &Term) -> Result<Rule, ProgramError> {
        let (name, t) = match t.functor() {
            Some((f, 2)) if f.as_str() == "@" => {
                let name = match &t.args()[0] {
                    Term::Const(s) => s.clone(),
                    other => return Err(ProgramError::BadRule(format!("rule name {other}"))),
                };
                (Some(name), &t.args()[1])
            }
            _ => (None, t),
        };
        let (t, pragmas) = match t.functor() {
            Some((f, 2)) if f.as_str() == "pragma" => (&t.args()[0], Some(&t.args()[1])),
            _ => (t, None),
        };
        let (arrow, lhs, rhs) = match t.functor() {
            Some((f, 2)) if f.as_str() == "==>" || f.as_str() == "<=>" => (f.as_str(), &t.args()[0], &t.args()[1]),
            _ => return Err(ProgramError::BadRule(t.to_string())),
        };

        let mut labels: HashMap<String, usize> = HashMap::new();
        let mut passive = BTreeSet::new();
        let mut strip = |terms: Vec<&Term>, offset: usize| -> Result<Vec<Term>, ProgramError> {
            let mut out = Vec::new();
            for (i, h) in terms.into_iter().enumerate() {
                match h.functor() {
                    Some((f, 2)) if f.as_str() == "#" => {
                        match &h.args()[1] {
                            Term::Const(s) if s.as_str() == "passive" => {
                                passive.insert(offset + i);
                            }
                            Term::Var(v) => {
                                labels.insert(v.name.to_string(), offset + i);
                            }
                            Term::Const(s) => {
                                labels.insert(s.to_string(), offset + i);
                            }
                            other => return Err(ProgramError::BadHead(other.to_string())),
                        }
                        out.push(h.args()[0].clone());
                    }
                    _ => out.push(h.clone()),
                }
            }
            Ok(out)
        };

        let (kept, removed) = if arrow == "==>" {
            (strip(conjuncts(lhs), 0)?, Vec::new())
        } else {
            match lhs.functor() {
                Some((f, 2)) if f.as_str() == "\\" => {
                    let k = strip(conjuncts(&lhs.args()[0]), 0)?;
                    let n = k.len();
                    (k, strip(conjuncts(&lhs.args()[1]), n)?)
                }
                _ => (Vec::new(), strip(conjuncts(lhs), 0)?),
            }
        };

        let (guard, body) = match rhs.functor() {
            Some((f, 2)) if f.as_str() == "|" => (Some(&rhs.args()[0]), &rhs.args()[1]),
            _ => (None, rhs),
        };
        let (ask, tell) = match guard {
            None => (Vec::new(), Vec::new()),
            Some(g) => match g.functor() {
                Some((f, 2)) if f.as_str() == "&" => (real_goals(&g.args()[0]), real_goals(&g.args()[1])),
                _ => (real_goals(g), Vec::new()),
            },
        };

        let mut backtrack_partners = false;
        if let Some(p) = pragmas {
            for item in conjuncts(p) {
                match item.functor() {
                    Some((f, 1)) if f.as_str() == "passive" => {
                        let key = match &item.args()[0] {
                            Term::Var(v) => v.name.to_string(),
                            Term::Const(s) => s.to_string(),
                            other => return Err(ProgramError::BadRule(format!("pragma {other}"))),
                        };
                        let pos = labels
                            .get(&key)
                            .ok_or_else(|| ProgramError::BadRule(format!("unknown head label {key}")))?;
                        passive.insert(*pos);
                    }
                    Some((f, 0)) if f.as_str() == "choice" => backtrack_partners = true,
                    _ => return Err(ProgramError::BadRule(format!("unknown pragma {item}"))),
                }
            }
        }

        let rule = Rule {
            name,
            kept,
            removed,
            passive,
            guard_ask: ask,
            guard_tell: tell,
            body: Goal::from_term(body)?,
            backtrack_partners,
        };
        rule.validate()?;
        Ok(rule)
    }
}

/// Flattens a `,`-conjunction.
pub fn conjuncts(t: &Term) -> Vec<&Term> {
    let mut out = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            Term::Compound(f, args) if f.as_str() == "," && args.len() == 2 => {
                out.push(&args[0]);
                cur = &args[1];
            }
            other => {
                out.push(other);
                return out;
            }
        }
    }
}

fn real_goals(t: &Term) -> Vec<Term> {
    conjuncts(t)
        .into_iter()
        .filter(|g| !g.is_atom("true"))
        .cloned()
        .collect()
}

fn join(goals: &[&Term]) -> String {
    goals.iter().map(|g| format_term(g, 999)).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Rule {
    /// `[name @ ]kept \ removed <=> ask & tell | body[ pragma choice].`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = &self.name {
            write!(f, "{} @ ", crate::syntax::format_atom(n.as_str()))?;
        }
        let head = |pos: usize, t: &Term| {
            let s = format_term(t, 149);
            if self.passive.contains(&pos) {
                format!("{s}#passive")
            } else {
                s
            }
        };
        let kept: Vec<String> = self.kept.iter().enumerate().map(|(i, t)| head(i, t)).collect();
        let removed: Vec<String> = self
            .removed
            .iter()
            .enumerate()
            .map(|(i, t)| head(i + self.kept.len(), t))
            .collect();
        match self.kind() {
            RuleKind::Propagation => write!(f, "{} ==> ", kept.join(", "))?,
            RuleKind::Simplification => write!(f, "{} <=> ", removed.join(", "))?,
            RuleKind::Simpagation => write!(f, "{} \\ {} <=> ", kept.join(", "), removed.join(", "))?,
        }
        let ask: Vec<&Term> = self.guard_ask.iter().collect();
        let tell: Vec<&Term> = self.guard_tell.iter().collect();
        if !tell.is_empty() {
            let a = if ask.is_empty() { "true".to_string() } else { join(&ask) };
            write!(f, "{a} & {} | ", join(&tell))?;
        } else if !ask.is_empty() {
            write!(f, "{} | ", join(&ask))?;
        }
        let mut goals = Vec::new();
        self.body.flatten(&mut goals);
        let terms: Vec<Term> = goals.iter().map(|g| g.to_term()).collect();
        write!(f, "{}", join(&terms.iter().collect::<Vec<_>>()))?;
        if self.backtrack_partners {
            write!(f, " pragma choice")?;
        }
        write!(f, ".")
    }
}

/// An immutable rule program with its occurrence table.
#[derive(Debug, Clone)]
pub struct Program {
    rules: Vec<Rule>,
    occurrences: HashMap<FunctorKey, Vec<(usize, usize)>>,
    head_keys: Vec<Vec<FunctorKey>>,
    locals: Vec<Vec<Var>>,
    ground_required: HashSet<FunctorKey>,
    max_serial: u64,
}

impl Program {
    pub fn new(rules: Vec<Rule>) -> Result<Program, ProgramError> {
        let mut occurrences: HashMap<FunctorKey, Vec<(usize, usize)>> = HashMap::new();
        let mut head_keys = Vec::with_capacity(rules.len());
        let mut locals = Vec::with_capacity(rules.len());
        let mut max_serial = 0;
        for (ri, rule) in rules.iter().enumerate() {
            rule.validate()?;
            let mut keys = Vec::new();
            for (pos, h) in rule.heads().enumerate() {
                let (f, a) = h.functor().expect("validated head");
                let key = (f.clone(), a);
                if !rule.passive.contains(&pos) {
                    occurrences.entry(key.clone()).or_default().push((ri, pos));
                }
                keys.push(key);
            }
            head_keys.push(keys);
            locals.push(rule.local_vars());
            max_serial = max_serial.max(rule.max_serial());
        }
        Ok(Program {
            rules,
            occurrences,
            head_keys,
            locals,
            ground_required: HashSet::new(),
            max_serial,
        })
    }

    /// Constraints with this key must have ground arguments when emitted.
    pub fn require_ground(mut self, functor: &str, arity: usize) -> Program {
        self.ground_required.insert((Symbol::new(functor), arity));
        self
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, index: usize) -> &Rule {
        &self.rules[index]
    }

    pub fn rule_label(&self, index: usize) -> String {
        match &self.rules[index].name {
            Some(n) => n.to_string(),
            None => format!("r{}", index + 1),
        }
    }

    /// Non-passive occurrences for a constraint key, in rule then head order.
    pub fn occurrences(&self, key: &FunctorKey) -> &[(usize, usize)] {
        self.occurrences.get(key).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub(crate) fn head_keys(&self, rule: usize) -> &[FunctorKey] {
        &self.head_keys[rule]
    }

    pub(crate) fn locals(&self, rule: usize) -> &[Var] {
        &self.locals[rule]
    }

    pub fn is_ground_required(&self, key: &FunctorKey) -> bool {
        self.ground_required.contains(key)
    }

    pub fn ground_required(&self) -> impl Iterator<Item = &FunctorKey> {
        self.ground_required.iter()
    }

    pub fn max_serial(&self) -> u64 {
        self.max_serial
    }

    /// A program with `other`'s rules appended after this one's.
    pub fn extended(&self, other: Vec<Rule>) -> Result<Program, ProgramError> {
        let mut rules = self.rules.clone();
        rules.extend(other);
        let mut p = Program::new(rules)?;
        p.ground_required = self.ground_required.clone();
        Ok(p)
    }

    /// One rule per line.
    pub fn dump(&self) -> String {
        self.rules.iter().map(|r| format!("{r}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn rule(s: &str) -> Rule {
        Rule::from_term(&parse_term(s).unwrap()).unwrap()
    }

    #[test]
    fn reads_three_rule_kinds() {
        assert_eq!(
            rule("np(N0,N1), verb(N1,N2), np(N2,N3) ==> sentence(N0,N3)").kind(),
            RuleKind::Propagation
        );
        assert_eq!(rule("a(X) <=> b(X)").kind(), RuleKind::Simplification);
        let r = rule("token(R,N3,N4) \\ exp(N0,N1), token(+,N1,N2), exp(N2,N3) <=> member(R,[+,')',eof]) | exp(N0,N3)");
        assert_eq!(r.kind(), RuleKind::Simpagation);
        assert_eq!(r.kept.len(), 1);
        assert_eq!(r.removed.len(), 3);
        assert_eq!(r.guard_ask.len(), 1);
    }

    #[test]
    fn reads_ask_and_tell() {
        let r = rule("+(P,A,Z1) , -(P,B,Z2) <=> Z1 < Z2 & A=B | true");
        assert_eq!(r.guard_ask.len(), 1);
        assert_eq!(r.guard_tell.len(), 1);
        assert_eq!(r.body, Goal::True);
        let r = rule("=+(P,A), =-(P,B) <=> true & A=B | true");
        assert!(r.guard_ask.is_empty());
    }

    #[test]
    fn reads_passive_pragmas() {
        let r = rule("exp(N0,N1)#Id1, token(+,N1,N2)#Id2, exp(N2,N3) ==> exp(N0,N3) pragma passive(Id1), passive(Id2)");
        assert_eq!(r.passive.iter().copied().collect::<Vec<_>>(), vec![0, 1]);
        let again = rule(r.to_string().trim_end_matches('.'));
        assert_eq!(again.passive, r.passive);
    }

    #[test]
    fn display_matches_conventional_layout() {
        let r = rule("np(N0,N1), verb(N1,N2), np(N2,N3) ==> sentence(N0,N3)");
        assert_eq!(r.to_string(), "np(N0,N1), verb(N1,N2), np(N2,N3) ==> sentence(N0,N3).");
        let r = rule("=*(P,A) \\ =-(P,B) <=> true & A=B | true");
        assert_eq!(r.to_string(), "=*(P,A) \\ =-(P,B) <=> true & A=B | true.");
    }

    #[test]
    fn if_then_else_body() {
        let r = rule("a(X) <=> (find_constraint(b(_),_) -> c(X) ; true)");
        assert!(matches!(r.body, Goal::IfThenElse(..)));
        let bad = Rule::from_term(&parse_term("a(X) <=> (c(X) -> d ; true)").unwrap());
        assert!(matches!(bad, Err(ProgramError::BadCondition(_))));
    }

    #[test]
    fn validation() {
        let bad = Rule::new(vec![], vec![], Goal::True);
        assert_eq!(bad.validate(), Err(ProgramError::NoHeads));
        let bad = Rule::propagation(vec![Term::atom("a")], Goal::True).with_passive([3]);
        assert_eq!(bad.validate(), Err(ProgramError::BadPassive(3)));
    }

    #[test]
    fn occurrence_table_skips_passive_heads() {
        let r = rule("exp(N0,N1)#passive, token(+,N1,N2)#passive, exp(N2,N3) ==> exp(N0,N3)");
        let p = Program::new(vec![r]).unwrap();
        let key = (Symbol::new("exp"), 2);
        assert_eq!(p.occurrences(&key), &[(0, 2)]);
        assert!(p.occurrences(&(Symbol::new("token"), 3)).is_empty());
    }

    #[test]
    fn rename_apart_shares_nothing() {
        let r = rule("h(X) ==> b(X, Y)");
        let mut src = VarSource::starting_at(1000);
        let a = r.rename_apart(&mut src);
        let b = r.rename_apart(&mut src);
        let va = a.kept[0].variables();
        let vb = b.kept[0].variables();
        assert_ne!(va[0].serial, vb[0].serial);
        // head and body occurrences renamed consistently
        assert_eq!(a.kept[0].args()[0], a.body.to_term().args()[0]);
        let ground = rule("a ==> b");
        assert_eq!(ground.rename_apart(&mut src), ground);
    }
}

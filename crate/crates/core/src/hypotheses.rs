//! Hypothetical reasoning on top of the engine: assumption-grammar
//! operators and abducibles with integrity constraints.
//!
//! An assertion `+h(a)` made at position `n` is the constraint
//! `+(h,[a],n)`; `*` is the reusable variant and `-` the expectation that
//! consumes one. The `=`-prefixed operators carry no position and may be
//! matched in any order.

use crate::engine::{Program, ProgramError, Rule};
use crate::syntax::parse_clauses;
use crate::term::{Term, VarSource};

pub use crate::engine::builtins::all_consumed;

const PRELUDE: &str = "
    =+(P,A) , =-(P,B) <=> true & A=B | true pragma choice.
    =*(P,A) \\ =-(P,B) <=> true & A=B | true pragma choice.
    +(P,A,Z1) , -(P,B,Z2) <=> Z1 < Z2 & A=B | true pragma choice.
    *(P,A,Z1) \\ -(P,B,Z2) <=> Z1 < Z2 & A=B | true pragma choice.
";

/// Assertion constraints, whose arguments must be ground when emitted.
pub const ASSERTIONS: [(&str, usize); 4] = [("+", 3), ("*", 3), ("=+", 2), ("=*", 2)];

/// The four rules pairing expectations with assertions.
///
/// Each rule leaves a choice point when it fires, so an expectation that
/// could have been met by a later candidate assertion is retried with it on
/// backtracking.
pub fn assumption_prelude() -> Vec<Rule> {
    parse_rules(PRELUDE).expect("prelude parses")
}

/// Marks the assertion operators as ground-only in `program`.
pub fn require_ground_assertions(mut program: Program) -> Program {
    for (f, a) in ASSERTIONS {
        program = program.require_ground(f, a);
    }
    program
}

fn args(arity: usize) -> String {
    (1..=arity).map(|i| format!("X{i}")).collect::<Vec<_>>().join(",")
}

fn head(pred: &str, arity: usize) -> String {
    let name = crate::syntax::format_atom(pred);
    if arity == 0 {
        name
    } else {
        format!("{name}({})", args(arity))
    }
}

/// `p(X..)#passive \ p(X..) <=> true`: repeated abductions of the same
/// hypothesis leave one copy.
pub fn abducible_rules(pred: &str, arity: usize) -> Vec<Rule> {
    let h = head(pred, arity);
    parse_rules(&format!("{h}#passive \\ {h} <=> true.")).expect("generated rule parses")
}

/// `not p(X..), p(X..) <=> fail`.
pub fn negation_rules(pred: &str, arity: usize) -> Vec<Rule> {
    let h = head(pred, arity);
    parse_rules(&format!("not {h}, {h} <=> fail.")).expect("generated rule parses")
}

pub fn parse_rules(text: &str) -> Result<Vec<Rule>, ProgramError> {
    let clauses = parse_clauses(text, &mut VarSource::default()).map_err(|e| ProgramError::BadRule(e.to_string()))?;
    clauses.iter().map(Rule::from_term).collect()
}

/// Renders a semantic term with `+`-joined parts spelled out flat:
/// `likes-(mary,peter) + loves-(mary,peter)`.
pub fn format_semantics(t: &Term) -> String {
    let mut parts = Vec::new();
    flatten_plus(t, &mut parts);
    parts
        .iter()
        .map(|p| crate::syntax::format_term(p, 999))
        .collect::<Vec<_>>()
        .join(" + ")
}

fn flatten_plus<'a>(t: &'a Term, out: &mut Vec<&'a Term>) {
    match t {
        Term::Compound(f, args) if f.as_str() == "+" && args.len() == 2 => {
            flatten_plus(&args[0], out);
            flatten_plus(&args[1], out);
        }
        _ => out.push(t),
    }
}

/// Bundled example programs: `(file name, source)`.
pub fn demo_grammars() -> Vec<(&'static str, &'static str)> {
    vec![
        ("sentence.chrg", include_str!("../grammars/sentence.chrg")),
        ("as.chrg", include_str!("../grammars/as.chrg")),
        ("g.chrg", include_str!("../grammars/g.chrg")),
        ("expr_ambiguous.chrg", include_str!("../grammars/expr_ambiguous.chrg")),
        ("expr_lr.chrg", include_str!("../grammars/expr_lr.chrg")),
        ("anaphora.chr", include_str!("../grammars/anaphora.chr")),
        ("abduction.chr", include_str!("../grammars/abduction.chr")),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run, solutions, Outcome};
    use crate::syntax::parse_term;

    fn program(rules: Vec<Rule>) -> Program {
        require_ground_assertions(Program::new(rules).unwrap())
    }

    fn terms(src: &[&str]) -> Vec<Term> {
        src.iter().map(|s| parse_term(s).unwrap()).collect()
    }

    #[test]
    fn prelude_shape() {
        let rules = assumption_prelude();
        assert_eq!(rules.len(), 4);
        assert!(rules.iter().all(|r| r.guard_tell.len() == 1));
        assert!(rules[0].kept.is_empty() && rules[2].kept.is_empty());
        assert_eq!(rules[1].kept.len(), 1);
        assert_eq!(rules[3].kept.len(), 1);
        assert!(rules[0].guard_ask.is_empty());
        assert_eq!(rules[2].guard_ask[0].to_string(), "Z1<Z2");
    }

    #[test]
    fn timeless_pair_is_consumed() {
        let mut rules = assumption_prelude();
        rules.extend(parse_rules("got(X) ==> seen(X).").unwrap());
        let p = program(rules);
        let r = run(&p, &terms(&["=+(h,[a])", "=-(h,[X])"])).unwrap();
        let Outcome::Success(store) = r.outcome else { panic!() };
        assert!(store.is_empty());
    }

    #[test]
    fn intuitionistic_assertion_is_kept() {
        let p = program(assumption_prelude());
        let r = run(&p, &terms(&["*(ai,[mary,fem],1)", "-(ai,[X,fem],5)"])).unwrap();
        assert_eq!(r.outcome.store().unwrap().dump(), "*(ai,[mary,fem],1)\n");
    }

    #[test]
    fn position_guard_blocks_late_assertions() {
        let p = program(assumption_prelude());
        let r = run(&p, &terms(&["+(h,[a],7)", "-(h,[X],3)"])).unwrap();
        assert_eq!(r.outcome.store().unwrap().len(), 2);
    }

    #[test]
    fn binding_reaches_the_continuation() {
        let mut rules = assumption_prelude();
        rules.extend(parse_rules("go <=> =-(h,[X]), got(X).").unwrap());
        let p = program(rules);
        let r = run(&p, &terms(&["=+(h,[a])", "go"])).unwrap();
        assert_eq!(r.outcome.store().unwrap().dump(), "got(a)\n");
    }

    #[test]
    fn abducibles_collapse() {
        let mut rules = abducible_rules("fact", 3);
        rules.extend(parse_rules("fact(hates,X,X) <=> fail.").unwrap());
        let p = program(rules);
        let r = run(&p, &terms(&["fact(likes,mary,peter)", "fact(likes,mary,peter)"])).unwrap();
        assert_eq!(r.outcome.store().unwrap().len(), 1);
        let r = run(&p, &terms(&["fact(likes,mary,peter)", "fact(likes,mary,john)"])).unwrap();
        assert_eq!(r.outcome.store().unwrap().len(), 2);
        let r = run(&p, &terms(&["fact(hates,m,m)"])).unwrap();
        assert_eq!(r.outcome, Outcome::Failure);
    }

    #[test]
    fn explicit_negation() {
        let p = program(negation_rules("fact", 3));
        let fails = |src: &[&str]| run(&p, &terms(src)).unwrap().outcome == Outcome::Failure;
        assert!(fails(&["not fact(hates,a,b)", "fact(hates,a,b)"]));
        assert!(!fails(&["not fact(hates,a,b)", "fact(hates,a,c)"]));
        assert!(!fails(&["not fact(hates,a,b)"]));
    }

    #[test]
    fn candidates_are_retried_on_backtracking() {
        let mut rules = assumption_prelude();
        rules.extend(parse_rules("-(_,_,_) <=> fail. go <=> -(h,[X],9), got(X). got(a) <=> fail.").unwrap());
        let p = program(rules);
        let all = solutions(&p, &terms(&["*(h,[a],1)", "*(h,[b],2)", "go"]), 10).unwrap();
        assert_eq!(all.len(), 1);
        assert!(all[0].contains(&parse_term("got(b)").unwrap()));
    }

    #[test]
    fn semantics_are_flattened() {
        let t = parse_term("(likes-(mary,peter)) + ((loves-(mary,peter)) + (hates-(martha,peter)))").unwrap();
        assert_eq!(
            format_semantics(&t),
            "likes-(mary,peter) + loves-(mary,peter) + hates-(martha,peter)"
        );
    }

    #[test]
    fn assertions_must_be_ground() {
        let p = program(parse_rules("go <=> +(h,[X],1).").unwrap());
        assert!(run(&p, &terms(&["go"])).is_err());
    }
}

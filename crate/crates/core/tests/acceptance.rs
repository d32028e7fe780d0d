//! One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use chr_grammar::bench::{run_bench, sample_inputs, BenchConfig};
use chr_grammar::engine::{run, solutions, Engine, Program, TraceEvent};
use chr_grammar::grammar::{
    compile_cfg, compile_with, lex_tokens, loop_check, parse_grammar_source, tokenize, CompileOptions, Grammar,
    GrammarSymbol, Production,
};
use chr_grammar::hypotheses::{all_consumed, format_semantics};
use chr_grammar::loader::load_rules;
use chr_grammar::recognize::{recognize, Verdict};
use chr_grammar::store::Store;
use chr_grammar::syntax::parse_term;
use chr_grammar::term::{match_term, unify, Substitution, Symbol, Term, Var};

use common::*;

type Check = Result<String, String>;

fn grammar(src: &str) -> Grammar {
    parse_grammar_source(src).expect("bundled grammar")
}

fn words(s: &str) -> Vec<Term> {
    lex_tokens(s)
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1() -> Check {
    let g = grammar(include_str!("../grammars/sentence.chrg"));
    let p = compile_cfg(&g).map_err(|e| e.to_string())?;
    let toks = words("peter likes mary");
    let mut best = Duration::MAX;
    let mut report = None;
    for _ in 0..5 {
        let t = Instant::now();
        let r = recognize(&p, &g.start, &toks, false, false).map_err(|e| e.to_string())?;
        best = best.min(t.elapsed());
        report = Some(r);
    }
    let r = report.unwrap();
    ensure(r.verdict == Verdict::Accept, || format!("verdict {}", r.verdict))?;
    let got: BTreeSet<String> = r.store.unwrap().terms().map(|t| t.to_string()).collect();
    let want: BTreeSet<String> = [
        "token(peter,0,1)",
        "token(likes,1,2)",
        "token(mary,2,3)",
        "np(0,1)",
        "verb(1,2)",
        "np(2,3)",
        "sentence(0,3)",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    ensure(got == want, || format!("store {got:?}"))?;
    ensure(best < Duration::from_millis(1), || format!("took {best:?}"))?;
    Ok(format!("exact store, {best:?}"))
}

fn c2() -> Check {
    let g = grammar(include_str!("../grammars/as.chrg"));
    let p = compile_cfg(&g).map_err(|e| e.to_string())?;
    for n in 1..=20usize {
        let r = run(&p, &tokenize(&vec![Term::atom("a"); n], false)).map_err(|e| e.to_string())?;
        let size = r.outcome.store().map_or(0, |s| s.len());
        ensure(size == n * (n + 3) / 2, || format!("n={n}: {size} constraints"))?;
    }
    Ok("n(n+3)/2 for n in 1..=20".into())
}

/// Criteria 3 and 4 share one harness.
fn c3_c4() -> (Check, Check) {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut grammars, mut trials) = (0, 0);
    let mut dup: Option<String> = None;
    while grammars < 200 {
        let cfg = random_cfg(&mut rng, 5, 8, 3);
        if !cfg.unit_cycles().is_empty() {
            continue;
        }
        grammars += 1;
        let g = cfg.to_grammar();
        let p = match compile_cfg(&g) {
            Ok(p) => p,
            Err(e) => return (Err(e.to_string()), Err("harness aborted".into())),
        };
        for _ in 0..3 {
            let n = rng.gen_range(1..=10);
            let input: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            trials += 1;
            let r = match run(&p, &tokenize(&input_terms(&input), false)) {
                Ok(r) => r,
                Err(e) => return (Err(e.to_string()), Err("harness aborted".into())),
            };
            let spans = store_spans(r.outcome.store().expect("grammar runs cannot fail"));
            let got: BTreeSet<(String, usize, usize)> = spans.iter().cloned().collect();
            let want: BTreeSet<(String, usize, usize)> = cyk(&cfg, &input)
                .into_iter()
                .map(|(m, i, j)| (nt_name(m), i, j))
                .collect();
            if got != want {
                return (
                    Err(format!("{cfg:?} on {input:?}: engine {got:?}, oracle {want:?}")),
                    Err("harness aborted".into()),
                );
            }
            if dup.is_none() && spans.len() != got.len() {
                dup = Some(format!("{cfg:?} on {input:?}: {spans:?}"));
            }
        }
    }
    let took = started.elapsed();
    let c3 = if took < Duration::from_secs(60) {
        Ok(format!("{grammars} grammars, {trials} strings, {took:?}"))
    } else {
        Err(format!("took {took:?}"))
    };
    let c4 = match dup {
        None => Ok(format!("no duplicate spans in {trials} stores")),
        Some(d) => Err(format!("duplicate label: {d}")),
    };
    (c3, c4)
}

fn c5() -> Check {
    let started = Instant::now();
    let g = grammar(include_str!("../grammars/g.chrg"));
    let p = compile_cfg(&g).map_err(|e| e.to_string())?;
    let timing = BenchConfig {
        samples: 8,
        reps: 5,
        ..Default::default()
    };
    let report = run_bench(&p, &timing).map_err(|e| e.to_string())?;
    let slope = report.slope.ok_or("no slope")?;
    let cfg = BenchConfig {
        lengths: vec![30],
        ..Default::default()
    };
    let mut sizes = Vec::new();
    for toks in sample_inputs(&cfg, 30) {
        let r = run(&p, &tokenize(&toks, false)).map_err(|e| e.to_string())?;
        sizes.push(r.outcome.store().map_or(0, |s| s.len()) as f64);
    }
    let mean = sizes.iter().sum::<f64>() / sizes.len() as f64;
    let took = started.elapsed();
    let summary = format!("slope {slope:.2}, mean store at n=30 {mean:.0}, {took:?}");
    let ok = (2.3..=3.7).contains(&slope) && (1000.0..=3500.0).contains(&mean) && took < Duration::from_secs(120);
    if ok {
        Ok(summary)
    } else {
        Err(summary)
    }
}

fn inserts(program: &Program, initial: &[Term]) -> Result<Vec<String>, String> {
    let mut e = Engine::new(program).with_trace();
    e.run(initial).map_err(|e| e.to_string())?;
    Ok(e.trace()
        .iter()
        .filter(|ev| matches!(ev, TraceEvent::Insert { .. }))
        .map(|ev| ev.to_string())
        .collect())
}

fn c6() -> Check {
    let g = grammar(include_str!("../grammars/expr_ambiguous.chrg"));
    let plain = compile_with(
        &g,
        &CompileOptions {
            lr: Some(false),
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let passive = compile_with(
        &g,
        &CompileOptions {
            lr: Some(true),
            ..Default::default()
        },
    )
    .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let vocab = ["1", "2", "3", "+", "*", "(", ")"];
    let mut total = 0;
    for k in 0..50 {
        let toks: Vec<String> = if k % 2 == 0 {
            let n = rng.gen_range(1..=15);
            (0..n)
                .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
                .collect()
        } else {
            loop {
                let e = random_expr(&mut rng, 4);
                let mut out = Vec::new();
                expr_tokens(&e, &mut out);
                if out.len() <= 15 && !out.contains(&"^".to_string()) {
                    break out;
                }
            }
        };
        let initial = tokenize(&lex_tokens(&toks.join(" ")), false);
        let a = inserts(&plain, &initial)?;
        let b = inserts(&passive, &initial)?;
        ensure(a == b, || format!("{toks:?}: sequences differ"))?;
        total += a.len();
    }
    Ok(format!("50 strings, {total} insertions identical"))
}

fn c7() -> Check {
    let g = grammar(include_str!("../grammars/expr_lr.chrg"));
    let p = compile_cfg(&g).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let e = random_expr(&mut rng, 5);
        let mut toks = Vec::new();
        expr_tokens(&e, &mut toks);
        let tree = precedence_parse(&toks).ok_or("oracle rejected a generated string")?;
        let n = toks.len();
        let r = run(&p, &tokenize(&lex_tokens(&toks.join(" ")), true)).map_err(|e| e.to_string())?;
        let store = r.outcome.store().ok_or("run failed")?;
        let got: BTreeSet<String> = store.terms().map(|t| t.to_string()).collect();
        let want: BTreeSet<String> = [format!("exp(0,{n})"), format!("token(eof,{n},{})", n + 1)].into();
        ensure(got == want, || format!("{}: store {got:?}", toks.join(" ")))?;
        ensure(r.stats.fired == node_count(&tree), || {
            format!(
                "{}: {} firings, {} nodes",
                toks.join(" "),
                r.stats.fired,
                node_count(&tree)
            )
        })?;
    }
    Ok("100 strings, firings = oracle node count".into())
}

fn c8() -> Check {
    let f = load_rules(include_str!("../grammars/anaphora.chr")).map_err(|e| e.to_string())?;
    let toks = words("mary likes peter . she loves and martha hates him .");
    let r = run(&f.program, &tokenize(&toks, false)).map_err(|e| e.to_string())?;
    let store = r.outcome.store().ok_or("run failed")?;
    let start = f.start.ok_or("no start symbol")?;
    let n = toks.len() as i64;
    let sem: Vec<String> = store
        .terms()
        .filter(|t| t.functor() == Some((&start, 3)) && t.args()[1] == Term::Int(0) && t.args()[2] == Term::Int(n))
        .map(|t| format_semantics(&t.args()[0]))
        .collect();
    let want = "likes-(mary,peter) + loves-(mary,peter) + hates-(martha,peter)";
    ensure(sem == [want], || format!("semantics {sem:?}"))?;
    Ok(want.into())
}

fn c9() -> Check {
    let f = load_rules(include_str!("../grammars/abduction.chr")).map_err(|e| e.to_string())?;
    let text = "mary likes martha . she hates her .";
    let all = solutions(&f.program, &tokenize(&words(text), false), 10).map_err(|e| e.to_string())?;
    let facts: Vec<_> = all.iter().map(fact_set).collect();
    let oracle = brute_force_readings(&text.split(' ').map(String::from).collect::<Vec<_>>());
    let want: BTreeSet<(String, String, String)> = [("likes", "mary", "martha"), ("hates", "martha", "mary")]
        .iter()
        .map(|(v, x, y)| (v.to_string(), x.to_string(), y.to_string()))
        .collect();
    ensure(facts == [want.clone()], || format!("solutions {facts:?}"))?;
    ensure(oracle == BTreeSet::from([want]), || format!("oracle {oracle:?}"))?;
    let bad = solutions(
        &f.program,
        &tokenize(&words("peter likes john . she likes him ."), false),
        10,
    )
    .map_err(|e| e.to_string())?;
    ensure(bad.is_empty(), || format!("gender clash gave {} solutions", bad.len()))?;
    Ok("one solution; gender clash fails".into())
}

fn random_ground(rng: &mut impl Rng, depth: u32) -> Term {
    match rng.gen_range(0..if depth == 0 { 2 } else { 3 }) {
        0 => Term::atom(["a", "b", "c"][rng.gen_range(0..3)]),
        1 => Term::int(rng.gen_range(0..3)),
        _ => {
            let k = rng.gen_range(1..=2);
            Term::compound(
                ["f", "g"][rng.gen_range(0..2)],
                (0..k).map(|_| random_ground(rng, depth - 1)).collect(),
            )
        }
    }
}

/// A pattern obtained by replacing random subterms of `t` with variables.
fn generalise(rng: &mut impl Rng, t: &Term, next: &mut u64) -> Term {
    if rng.gen_bool(0.25) {
        *next += 1;
        return Term::var(["X", "Y"][rng.gen_range(0..2)], *next % 3);
    }
    match t {
        Term::Compound(f, args) => Term::from_parts(f.clone(), args.iter().map(|a| generalise(rng, a, next)).collect()),
        other => other.clone(),
    }
}

fn store_state(s: &Store) -> String {
    let ids: Vec<_> = s.live().map(|c| c.id).collect();
    format!(
        "{:?}|{:?}|{}|{:?}|{}",
        s.snapshot(),
        s.bindings().sorted(),
        s.history_len(),
        ids,
        s.next_id()
    )
}

fn c10() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    // trail round trip
    for _ in 0..300 {
        let mut s = Store::new();
        let mut ids = Vec::new();
        for step in 0..rng.gen_range(0..20) {
            random_op(&mut rng, &mut s, &mut ids, step);
        }
        let before = store_state(&s);
        let m = s.mark();
        for step in 0..rng.gen_range(0..20) {
            random_op(&mut rng, &mut s, &mut ids, 100 + step);
        }
        s.undo_to(m);
        ensure(store_state(&s) == before, || format!("{} vs {before}", store_state(&s)))?;
    }
    // match and unify agree on ground targets
    for _ in 0..2000 {
        let target = random_ground(&mut rng, 3);
        let mut next = 0;
        let pattern = if rng.gen_bool(0.7) {
            generalise(&mut rng, &target, &mut next)
        } else {
            let other = random_ground(&mut rng, 3);
            generalise(&mut rng, &other, &mut next)
        };
        let m = match_term(&pattern, &target, &Substitution::new()).ok();
        let u = unify(&pattern, &target, &Substitution::new()).ok();
        ensure(m.is_some() == u.is_some(), || format!("{pattern} vs {target}"))?;
        if let (Some(m), Some(u)) = (m, u) {
            let (a, b) = (
                chr_grammar::term::apply(&pattern, &m),
                chr_grammar::term::apply(&pattern, &u),
            );
            ensure(a == target && b == target, || {
                format!("{pattern} vs {target}: {a} / {b}")
            })?;
        }
    }
    // loop_check on hand-built grammars
    type Case<'a> = (&'a [(&'a str, &'a [&'a str])], &'a [&'a str]);
    let cases: [Case; 4] = [
        (&[("a", &["b"]), ("b", &["a"]), ("a", &["x"])], &["a", "b"]),
        (&[("a", &["a"])], &["a"]),
        (&[("a", &["b"]), ("b", &["c"]), ("c", &["x"])], &[]),
        (&[("a", &["b", "a"]), ("b", &["c"]), ("c", &["b"])], &["b", "c"]),
    ];
    for (prods, looping) in cases {
        let g = Grammar::new(
            prods
                .iter()
                .map(|(lhs, rhs)| {
                    Production::cfg(
                        lhs,
                        rhs.iter()
                            .map(|s| {
                                if *s == "x" {
                                    GrammarSymbol::t("x")
                                } else {
                                    GrammarSymbol::nt(s)
                                }
                            })
                            .collect(),
                    )
                })
                .collect(),
        )
        .map_err(|e| e.to_string())?;
        let got: BTreeSet<String> = loop_check(&g).into_iter().map(|(s, _)| s.to_string()).collect();
        let want: BTreeSet<String> = looping.iter().map(|s| s.to_string()).collect();
        ensure(got == want, || format!("{prods:?}: {got:?}"))?;
    }
    // all_consumed on the four assertion sorts
    let sorts = [
        ("+(h,[a],1)", false),
        ("=+(h,[a])", false),
        ("*(h,[a],1)", true),
        ("=*(h,[a])", true),
    ];
    for (src, consumed) in sorts {
        let mut s = Store::new();
        let t = parse_term(src).map_err(|e| e.to_string())?;
        let (f, _) = t.functor().unwrap();
        let id = s.insert(f.clone(), t.args().to_vec());
        ensure(all_consumed(&s) == consumed, || format!("{src} live"))?;
        s.kill(id).map_err(|e| e.to_string())?;
        ensure(all_consumed(&s), || format!("{src} killed"))?;
    }
    Ok("trail, match/unify, loop_check, all_consumed".into())
}

fn random_op(rng: &mut impl Rng, s: &mut Store, ids: &mut Vec<u64>, step: u64) {
    match rng.gen_range(0..4) {
        0 | 1 => {
            let args = vec![random_ground(rng, 1), Term::int(step as i64)];
            ids.push(s.insert(Symbol::new(["p", "q"][rng.gen_range(0..2)]), args));
        }
        2 => {
            if let Some(&id) = ids.get(rng.gen_range(0..ids.len().max(1))) {
                let _ = s.kill(id);
            }
        }
        _ => {
            let v = Var::new("V", 1000 + step);
            s.bind(v, random_ground(rng, 1));
            let live: Vec<u64> = s.live().map(|c| c.id).collect();
            if !live.is_empty() {
                s.history_record(rng.gen_range(0..3), vec![live[rng.gen_range(0..live.len())]]);
            }
        }
    }
}

fn main() {
    let (c3, c4) = c3_c4();
    let results: BTreeMap<u32, Check> = [
        (1, c1()),
        (2, c2()),
        (3, c3),
        (4, c4),
        (5, c5()),
        (6, c6()),
        (7, c7()),
        (8, c8()),
        (9, c9()),
        (10, c10()),
    ]
    .into_iter()
    .collect();
    let mut failed = 0;
    for (k, r) in &results {
        match r {
            Ok(msg) => println!("criterion {k:>2}: PASS  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {k:>2}: FAIL  {msg}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

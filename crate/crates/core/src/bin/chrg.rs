use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chr_grammar::bench::{run_bench, BenchConfig};
use chr_grammar::engine::{solutions, Program};
use chr_grammar::grammar::{
    compile_with, lex_tokens, loop_check, parse_grammar_source, tokenize, CompileOptions, GrammarError, LrConvention,
};
use chr_grammar::hypotheses::format_semantics;
use chr_grammar::loader::load_rules;
use chr_grammar::recognize::{recognize, verdict, Verdict};
use chr_grammar::term::{Symbol, Term};

#[derive(Parser)]
#[command(
    name = "chrg",
    version,
    about = "Compile and run bottom-up grammars as rule programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the rule program a grammar compiles to.
    Compile {
        file: PathBuf,
        #[command(flatten)]
        opts: GrammarOpts,
    },
    /// Parse a token sequence and print the final store.
    Parse {
        file: PathBuf,
        /// Tokens; integers become integer terms.
        tokens: Vec<String>,
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        opts: GrammarOpts,
        /// Print one line per engine event before the store.
        #[arg(long)]
        trace: bool,
        /// Enumerate up to N final stores instead.
        #[arg(long, value_name = "N")]
        solutions: Option<usize>,
        /// Benchmark on random strings instead, e.g. `--bench lens=8..24 samples=5 alphabet=a,b`.
        #[arg(long, num_args = 0.., value_name = "SETTING")]
        bench: Option<Vec<String>>,
    },
    /// Time the parser on random strings of growing length.
    Bench {
        file: PathBuf,
        /// Settings: lens=8..24 samples=K alphabet=a,b reps=R seed=S
        settings: Vec<String>,
        #[command(flatten)]
        opts: GrammarOpts,
        #[arg(long)]
        eof: bool,
        /// Run samples on all cores.
        #[arg(long)]
        parallel: bool,
    },
    /// Enumerate distinct final stores in backtracking order.
    Solutions {
        file: PathBuf,
        tokens: Vec<String>,
        #[command(flatten)]
        input: InputOpts,
        #[command(flatten)]
        opts: GrammarOpts,
        #[arg(long, default_value_t = 10)]
        limit: usize,
    },
}

#[derive(Args, Clone)]
struct InputOpts {
    /// Read tokens from a file, whitespace separated.
    #[arg(long, value_name = "FILE")]
    tokens_file: Option<PathBuf>,
    /// Append an `eof` token.
    #[arg(long)]
    eof: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    Rightmost,
    Leftmost,
}

#[derive(Args, Clone)]
struct GrammarOpts {
    /// Passivate all heads but one in every rule (`--lr=off` disables `ruleLR` too).
    #[arg(long, value_enum, num_args = 0..=1, require_equals = true, default_missing_value = "on")]
    lr: Option<Switch>,
    #[arg(long, value_enum, require_equals = true, default_value = "rightmost")]
    lr_convention: Convention,
    /// Drop duplicate nonterminal constraints.
    #[arg(long, value_enum, require_equals = true)]
    dedup: Option<Switch>,
}

impl GrammarOpts {
    fn compile_options(&self) -> CompileOptions {
        CompileOptions {
            lr: self.lr.map(|s| matches!(s, Switch::On)),
            convention: match self.lr_convention {
                Convention::Rightmost => LrConvention::Rightmost,
                Convention::Leftmost => LrConvention::Leftmost,
            },
            dedup: self.dedup.map(|s| matches!(s, Switch::On)),
        }
    }
}

struct Loaded {
    program: Program,
    start: Option<Symbol>,
}

enum Failure {
    Usage(String),
    Empty(String),
    Engine(String),
}

impl Failure {
    fn report(self) -> ExitCode {
        let (msg, code) = match self {
            Failure::Usage(m) => (m, 1),
            Failure::Empty(m) => (m, 2),
            Failure::Engine(m) => (m, 4),
        };
        eprintln!("chrg: {msg}");
        ExitCode::from(code)
    }
}

fn load(file: &Path, opts: &GrammarOpts) -> Result<Loaded, Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| Failure::Usage(format!("{}: {e}", file.display())))?;
    let at = |e: &dyn std::fmt::Display| format!("{}:{e}", file.display());
    if file.extension().is_some_and(|x| x == "chr") {
        let f = load_rules(&text).map_err(|e| Failure::Usage(at(&e)))?;
        return Ok(Loaded {
            program: f.program,
            start: f.start,
        });
    }
    let grammar = parse_grammar_source(&text).map_err(|e| match e {
        GrammarError::EmptyProduction { .. } => Failure::Empty(at(&e)),
        e => Failure::Usage(at(&e)),
    })?;
    for (name, arity) in loop_check(&grammar) {
        eprintln!(
            "warning: {}: {name}/{} can derive itself; parsing may not terminate",
            file.display(),
            arity - 2
        );
    }
    let program = compile_with(&grammar, &opts.compile_options()).map_err(|e| match e {
        GrammarError::EmptyProduction { .. } => Failure::Empty(at(&e)),
        e => Failure::Usage(at(&e)),
    })?;
    Ok(Loaded {
        program,
        start: Some(grammar.start),
    })
}

fn read_tokens(tokens: &[String], input: &InputOpts) -> Result<Vec<Term>, Failure> {
    let mut text = tokens.join(" ");
    if let Some(path) = &input.tokens_file {
        let more = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        text.push(' ');
        text.push_str(&more);
    }
    let toks = lex_tokens(&text);
    if toks.is_empty() {
        return Err(Failure::Usage("no input tokens".into()));
    }
    Ok(toks)
}

fn start_of(loaded: &Loaded) -> Result<Symbol, Failure> {
    loaded
        .start
        .clone()
        .ok_or_else(|| Failure::Usage("program has no `:- start(name).` directive".into()))
}

/// Semantic first arguments of complete parses, when they look like terms
/// joined by `+`.
fn print_semantics(store: &chr_grammar::engine::FinalStore, start: &Symbol, n: usize) {
    for t in store.terms() {
        if let Term::Compound(f, args) = t {
            if f == start && args.len() == 3 && args[1] == Term::Int(0) && args[2] == Term::Int(n as i64) {
                println!("semantics: {}", format_semantics(&args[0]));
            }
        }
    }
}

fn cmd_compile(file: &Path, opts: &GrammarOpts) -> Result<ExitCode, Failure> {
    let loaded = load(file, opts)?;
    print!("{}", loaded.program.dump());
    Ok(ExitCode::SUCCESS)
}

fn cmd_parse(file: &Path, toks: Vec<Term>, eof: bool, opts: &GrammarOpts, trace: bool) -> Result<ExitCode, Failure> {
    let loaded = load(file, opts)?;
    let start = start_of(&loaded)?;
    let report = recognize(&loaded.program, &start, &toks, eof, trace).map_err(|e| Failure::Engine(e.to_string()))?;
    for ev in &report.trace {
        println!("{ev}");
    }
    if let Some(store) = &report.store {
        print!("{}", store.dump());
        if report.verdict == Verdict::Accept {
            print_semantics(store, &start, toks.len());
        }
    }
    println!("{}", report.verdict);
    Ok(if report.verdict == Verdict::Fail {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_solutions(
    file: &Path,
    toks: Vec<Term>,
    eof: bool,
    opts: &GrammarOpts,
    limit: usize,
) -> Result<ExitCode, Failure> {
    if limit == 0 {
        return Err(Failure::Usage("limit must be at least 1".into()));
    }
    let loaded = load(file, opts)?;
    let start = start_of(&loaded)?;
    let all = solutions(&loaded.program, &tokenize(&toks, eof), limit).map_err(|e| Failure::Engine(e.to_string()))?;
    if all.is_empty() {
        println!("FAIL");
        return Ok(ExitCode::from(3));
    }
    for (i, store) in all.iter().enumerate() {
        println!("-- solution {}", i + 1);
        print!("{}", store.dump());
        println!("{}", verdict(store, &start, toks.len()));
    }
    println!("{} solution(s)", all.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(
    file: &Path,
    settings: &[String],
    opts: &GrammarOpts,
    eof: bool,
    parallel: bool,
) -> Result<ExitCode, Failure> {
    let loaded = load(file, opts)?;
    let mut cfg = BenchConfig {
        eof,
        parallel,
        ..Default::default()
    };
    for s in settings {
        cfg.apply(s).map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let report = run_bench(&loaded.program, &cfg).map_err(|e| Failure::Usage(e.to_string()))?;
    println!("{:>4} {:>12} {:>14}", "n", "mean_store", "time_us");
    for row in &report.rows {
        println!(
            "{:>4} {:>12.1} {:>14.1}",
            row.n,
            row.mean_store,
            row.time.as_secs_f64() * 1e6
        );
    }
    match report.slope {
        Some(s) => println!("slope {s:.3}"),
        None => println!("slope n/a"),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compile { file, opts } => cmd_compile(file, opts),
        Command::Parse {
            file,
            tokens,
            input,
            opts,
            trace,
            solutions,
            bench,
        } => match (bench, solutions) {
            (Some(settings), _) => cmd_bench(file, settings, opts, input.eof, false),
            (None, Some(limit)) => {
                read_tokens(tokens, input).and_then(|t| cmd_solutions(file, t, input.eof, opts, *limit))
            }
            (None, None) => read_tokens(tokens, input).and_then(|t| cmd_parse(file, t, input.eof, opts, *trace)),
        },
        Command::Bench {
            file,
            settings,
            opts,
            eof,
            parallel,
        } => cmd_bench(file, settings, opts, *eof, *parallel),
        Command::Solutions {
            file,
            tokens,
            input,
            opts,
            limit,
        } => read_tokens(tokens, input).and_then(|t| cmd_solutions(file, t, input.eof, opts, *limit)),
    };
    result.unwrap_or_else(Failure::report)
}

//! Timing a parser on random token strings of growing length.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{run, EngineError, Outcome, Program};
use crate::grammar::tokenize;
use crate::term::Term;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BenchError {
    #[error("lengths must be nonempty and strictly increasing")]
    Lengths,
    #[error("bad benchmark parameter: {0}")]
    Param(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub lengths: Vec<usize>,
    pub samples: usize,
    pub alphabet: Vec<Term>,
    /// Timed runs per sample; the median is kept.
    pub reps: usize,
    pub seed: u64,
    pub eof: bool,
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            lengths: (8..=24).collect(),
            samples: 5,
            alphabet: vec![Term::atom("a"), Term::atom("b")],
            reps: 3,
            seed: 2000,
            eof: false,
            parallel: false,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.lengths.is_empty() || self.lengths.windows(2).any(|w| w[0] >= w[1]) || self.lengths[0] == 0 {
            return Err(BenchError::Lengths);
        }
        if self.samples == 0 || self.reps == 0 {
            return Err(BenchError::Param("samples and reps must be positive".into()));
        }
        if self.alphabet.is_empty() {
            return Err(BenchError::Param("empty alphabet".into()));
        }
        Ok(())
    }

    /// Applies `lens=8..24 samples=K alphabet=a,b reps=R seed=S` settings.
    pub fn apply(&mut self, setting: &str) -> Result<(), BenchError> {
        let (key, value) = setting
            .split_once('=')
            .ok_or_else(|| BenchError::Param(setting.into()))?;
        let bad = || BenchError::Param(setting.into());
        match key {
            "lens" => self.lengths = parse_lengths(value).ok_or_else(bad)?,
            "samples" => self.samples = value.parse().map_err(|_| bad())?,
            "reps" => self.reps = value.parse().map_err(|_| bad())?,
            "seed" => self.seed = value.parse().map_err(|_| bad())?,
            "alphabet" => self.alphabet = crate::grammar::lex_tokens(&value.replace(',', " ")),
            _ => return Err(bad()),
        }
        Ok(())
    }
}

/// `8..24` (inclusive), `8..24:4` (step 4) or `8,12,16`.
pub fn parse_lengths(s: &str) -> Option<Vec<usize>> {
    if let Some((from, rest)) = s.split_once("..") {
        let (to, step) = match rest.split_once(':') {
            Some((to, step)) => (to, step.parse().ok()?),
            None => (rest, 1),
        };
        let (from, to): (usize, usize) = (from.parse().ok()?, to.parse().ok()?);
        if step == 0 || from > to {
            return None;
        }
        return Some((from..=to).step_by(step).collect());
    }
    s.split(',').map(|x| x.trim().parse().ok()).collect()
}

#[derive(Debug, Clone)]
pub struct Row {
    pub n: usize,
    pub mean_store: f64,
    /// Mean over samples of each sample's median time.
    pub time: Duration,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub rows: Vec<Row>,
    /// Least-squares slope of log time against log n over all lengths.
    pub slope: Option<f64>,
}

/// Random inputs for length `n`; the same config always yields the same strings.
pub fn sample_inputs(cfg: &BenchConfig, n: usize) -> Vec<Vec<Term>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(1_000_003).wrapping_add(n as u64));
    (0..cfg.samples)
        .map(|_| {
            (0..n)
                .map(|_| cfg.alphabet.choose(&mut rng).expect("nonempty").clone())
                .collect()
        })
        .collect()
}

fn measure(program: &Program, tokens: &[Term], cfg: &BenchConfig) -> Result<(usize, Duration), EngineError> {
    let initial = tokenize(tokens, cfg.eof);
    let mut times = Vec::with_capacity(cfg.reps);
    let mut size = 0;
    for _ in 0..cfg.reps {
        let t = Instant::now();
        let r = run(program, &initial)?;
        times.push(t.elapsed());
        size = match r.outcome {
            Outcome::Success(s) => s.len(),
            Outcome::Failure => 0,
        };
    }
    times.sort();
    Ok((size, times[times.len() / 2]))
}

pub fn run_bench(program: &Program, cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &n in &cfg.lengths {
        let inputs = sample_inputs(cfg, n);
        let results = if cfg.parallel {
            crate::batch::map(&inputs, |toks| measure(program, toks, cfg))
        } else {
            crate::batch::map_sequential(&inputs, |toks| measure(program, toks, cfg))
        };
        let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;
        let k = results.len() as f64;
        rows.push(Row {
            n,
            mean_store: results.iter().map(|(s, _)| *s as f64).sum::<f64>() / k,
            time: results.iter().map(|(_, t)| *t).sum::<Duration>() / results.len() as u32,
        });
    }
    let points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.n as f64).ln(), r.time.as_secs_f64().max(1e-12).ln()))
        .collect();
    Ok(BenchReport {
        slope: fit_slope(&points),
        rows,
    })
}

/// Ordinary least-squares slope; `None` for fewer than two distinct x values.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

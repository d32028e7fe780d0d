//! Independent runs over many inputs.
//!
//! Each input gets its own engine and store; only the program is shared.
//! With the `parallel` feature the runs are spread over a rayon pool,
//! otherwise they run one after another. Results keep input order either way.

use crate::engine::{EngineError, Program};
use crate::recognize::{recognize, Report};
use crate::term::{Symbol, Term};

#[cfg(feature = "parallel")]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    map_sequential(items, f)
}

pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// True when [`map`] runs on a thread pool.
pub const PARALLEL: bool = cfg!(feature = "parallel");

pub fn parse_all(
    program: &Program,
    start: &Symbol,
    inputs: &[Vec<Term>],
    eof: bool,
) -> Vec<Result<Report, EngineError>> {
    map(inputs, |toks| recognize(program, start, toks, eof, false))
}

pub fn parse_all_sequential(
    program: &Program,
    start: &Symbol,
    inputs: &[Vec<Term>],
    eof: bool,
) -> Vec<Result<Report, EngineError>> {
    map_sequential(inputs, |toks| recognize(program, start, toks, eof, false))
}

//! A Constraint Handling Rules engine with a grammar toolkit on top.
//!
//! Grammars compile to rule programs whose forward-chaining execution is a
//! robust bottom-up parser: every recognised phrase ends up in the final
//! constraint store as `N(attrs.., I, J)`.

pub mod batch;
pub mod bench;
pub mod engine;
pub mod grammar;
pub mod hypotheses;
pub mod loader;
pub mod recognize;
pub mod store;
pub mod syntax;
pub mod term;

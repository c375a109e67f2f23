//! Exact and approximate linear contracts for combinatorial principal–agent
//! models.
//!
//! * [`setfn`]: monotone normalized set functions, value queries, and
//!   exhaustive class checkers.
//! * [`demand`]: demand queries (brute force, gross-substitutes greedy,
//!   ultra greedy) and the agent best response.
//! * [`single_agent`]: one agent choosing a set of actions; upper envelope,
//!   critical values, optimal contract, and an approximation scheme.
//! * [`team_binary`]: many agents, each either working or not.
//! * [`team_multi`]: many agents, each choosing a set of actions; potential
//!   function, equilibria, subset stability.
//! * [`instances`]: file format, bundled examples, seeded generators.
//!
//! All quantities are exact rationals; ground sets are small enough to verify
//! every answer by enumeration.

pub mod demand;
pub mod error;
pub mod instances;
pub mod rational;
pub mod setfn;
pub mod single_agent;
pub mod subset;
pub mod team_binary;
pub mod team_multi;

pub use error::{Error, Result};
pub use rational::{Extended, Rational};
pub use subset::Subset;

/// Hard cap on ground-set size for every representation (explicit tables hold
/// `2^n` values).
pub const MAX_ELEMENTS: usize = 20;

/// Default cap for routines that enumerate all `2^n` subsets.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 16;

/// Environment variable overriding [`DEFAULT_EXHAUSTIVE_LIMIT`].
pub const EXHAUSTIVE_LIMIT_ENV: &str = "CONTRACT_KIT_MAX_N";

/// Current exhaustive limit, clamped to [`MAX_ELEMENTS`].
pub fn exhaustive_limit() -> usize {
    std::env::var(EXHAUSTIVE_LIMIT_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or(DEFAULT_EXHAUSTIVE_LIMIT)
        .min(MAX_ELEMENTS)
}

pub(crate) fn ensure_exhaustive(n: usize) -> Result<()> {
    let limit = exhaustive_limit();
    if n > limit {
        return Err(Error::TooLarge { n, limit });
    }
    Ok(())
}

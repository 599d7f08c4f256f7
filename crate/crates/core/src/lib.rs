//! Online selection of `k` out of `n` items against adversarial monotone
//! rewards.
//!
//! Each round the learner commits to inclusion probabilities on the
//! hypersimplex, samples a `k`-set with Madow's systematic scheme, and then
//! replaces the revealed reward function by a linear surrogate drawn from its
//! alpha-core. Feeding those surrogates to follow-the-regularized-leader gives
//! the policies in [`policy`].

pub mod adversary;
pub mod corevec;
pub mod error;
pub mod hypersimplex;
pub mod policy;
pub mod rng;
pub mod sampling;
pub mod setfn;

pub use error::{Error, Result};

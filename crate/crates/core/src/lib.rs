//! Anytime m-top arm identification.
//!
//! This crate holds the allocation-light algorithmic core and has no
//! dependency on `std`:
//!
//! * [`bandit`]: arms, rewards, histories, recommendations and the
//!   [`Environment`](bandit::Environment) contract.
//! * [`posterior`]: the [0,1]-truncated non-standardised Student-t posterior
//!   obtained from a Gaussian likelihood under the Jeffreys prior.
//! * [`algorithms`]: Boundary Focused Thompson Sampling, AT-LUCB and uniform
//!   round-robin behind the [`Explorer`](algorithms::Explorer) trait.
//! * [`env`]: synthetic Gaussian / mixture bandits and an age-structured
//!   chain-binomial epidemic simulator whose arms are vaccine allocations.
//! * [`eval`]: ground truth, sum-of-means and proportion-correct metrics,
//!   and the single-run sample-budgeted driver.
//! * [`diagnostics`]: Monte-Carlo estimates of boundary misranking
//!   probabilities and the probability-of-error union bounds.
//!
//! IO, configuration files, parallel fan-out and the command line live in the
//! companion `mtop` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algorithms;
pub mod bandit;
pub mod diagnostics;
pub mod env;
pub mod eval;
#[cfg(any(test, feature = "oracles"))]
pub mod oracle;
pub mod posterior;
pub mod seed;
pub mod special;

pub use algorithms::{Algorithm, AtLucbParams, Explorer};
pub use bandit::{ArmId, EnvError, Environment, History, Recommendation, Reward, Sample};
pub use posterior::{TDistParams, TruncatedTPosterior};

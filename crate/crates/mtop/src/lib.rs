//! Experiment harness for anytime m-top arm identification.
//!
//! Wraps the `mtop-core` algorithms with layered TOML configuration, parallel
//! ground-truth and experiment runners, persistent record formats and the
//! `mtop` command line.

pub mod cli;
pub mod config;
pub mod io;
pub mod runner;

pub use config::{Env, Settings};

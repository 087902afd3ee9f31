//! Sequential global optimization with Gaussian-process surrogates.
//!
//! The crate provides exact GP posteriors with incremental updates
//! ([`posterior`]), mutual-information accounting ([`info`]), the
//! information-controlled GP-MI acquisition policy with GP-UCB,
//! fixed-bonus and expected-improvement baselines ([`policies`]),
//! benchmark objectives ([`objectives`]), a reproducible experiment
//! harness with CSV export ([`harness`]), and a diagnostics suite that
//! empirically checks the identities, inequalities, and high-probability
//! regret bounds the policies are built on ([`diagnostics`]).

pub mod chol;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod harness;
pub mod info;
pub mod kernel;
pub mod objectives;
pub mod points;
pub mod policies;
pub mod posterior;

pub use error::{Error, Result};

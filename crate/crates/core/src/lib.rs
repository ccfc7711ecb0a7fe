//! Adaptation-based programming.
//!
//! An *adaptive* is a value that changes in response to feedback. Every
//! adaptive exposes its current [`Adaptive::value`] and a pure
//! [`Adaptive::adapt`] transition. On top of that contract this crate builds:
//!
//! - generic compositions (pairs, lists, contextual and nested adaptives) in [`adaptive`],
//! - concrete learners (regression lines, UCB bandits, Rock-Paper-Scissors players) in [`basic`],
//! - training drivers that produce traces in [`combinators`] and stopping monitors in [`monitors`],
//! - the stability-gated Q-table with its learning threshold in [`principled`],
//! - two self-optimizing applications: recursive hybrid sorting in [`sortbench`]
//!   and a learned Levenberg-Marquardt damping controller in [`lmopt`].

pub mod action;
pub mod adaptive;
pub mod basic;
pub mod combinators;
pub mod emit;
pub mod error;
pub mod lmopt;
pub mod monitors;
pub mod principled;
pub mod rng;
pub mod sortbench;

pub use adaptive::{adapt_by, adapt_nested, nested_value, Adaptive, ContextMap, Contextual, Dedaptive};
pub use error::{AbpError, Result};

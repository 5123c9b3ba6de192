//! Device-independent certification of tripartite secret sharing.
//!
//! Behaviors, Bell functionals, causal polytopes, and guessing-probability
//! bounds from linear and semidefinite programming.

#![allow(clippy::needless_range_loop)]

pub mod acceptance;
pub mod behavior;
pub mod certify;
pub mod inequality;
pub mod npa;
pub mod num;
pub mod optimize;
pub mod polytope;
pub mod quantum;

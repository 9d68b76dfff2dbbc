//! Confirmation policies for Nakamoto-consensus chains under double-spend
//! attacks with pre-mining.
//!
//! - [`analytic`]: closed-form attack probabilities and the policies derived
//!   from them.
//! - [`mdp`]: the attack MDP and a ratio-objective solver for the optimal
//!   attack against a constant-`k` merchant.
//! - [`profit`]: the combined selfish-mining plus double-spend revenue MDP.
//! - [`sim`]: seeded Monte Carlo simulations that cross-check the others.

pub mod action;
pub mod analytic;
pub mod error;
pub mod mdp;
pub mod params;
pub mod policy;
pub mod profit;
pub mod sim;

pub use action::AttackAction;
pub use error::{Error, Result};
pub use params::{validate_params, AttackerParams};
pub use policy::{policy_required_confs, AcceptancePolicy, RobustnessKind};

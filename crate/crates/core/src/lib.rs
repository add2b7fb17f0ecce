//! Diversity-aware population learning for two-player games.
//!
//! Populations are scored by the expected cardinality of a determinantal
//! point process built from their payoff rows; oracles that trade payoff
//! against that score drive fictitious play and policy-space response
//! oracle loops on normal-form games and on differentiable game engines.

mod atomic;
pub mod diversity;
pub mod error;
pub mod game;
pub mod games;
pub mod harness;
pub mod meta;
pub mod oracles;
pub mod trainer;

pub use error::{GameError, Result};
pub use game::{
    best_response, expected_payoff, expected_payoffs, exploitability, JointProfile, MixedStrategy, PayoffMatrix,
    Player,
};

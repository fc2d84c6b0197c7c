//! Grammar-guided synthesis of programmatic strategies for the dice game
//! Can't Stop.
//!
//! The crate is layered bottom-up:
//!
//! - [`grammar`]: context-free grammars, ASTs, random generation, mutation
//!   and leftmost derivations.
//! - [`cantstop`]: the two-player game engine.
//! - [`dsl`]: the strategy language, its interpreter, and the built-in
//!   strategies.
//! - [`evaluation`]: seeded matches, win-rate utility, and demonstration
//!   datasets.
//! - [`cloning`]: behavioral-cloning scores over a dataset.
//! - [`sa`] and [`uct`]: the two synthesizers and their sketch-learning
//!   pipelines.

pub mod cantstop;
pub mod cloning;
pub mod dsl;
pub mod error;
pub mod evaluation;
pub mod grammar;
pub mod rng;
pub mod sa;
pub mod search;
pub mod sketch;
pub mod strategy;
pub mod trajectory;
pub mod uct;

pub use cantstop::{Action, GameState, Phase, Player};
pub use error::Error;
pub use grammar::{Derivation, Grammar, Program};
pub use strategy::Strategy;

//! The strategy interface shared by built-in and synthesized players.

use rand::RngCore;
use thiserror::Error;

use crate::cantstop::{Action, GameState};
use crate::dsl::EvalError;

/// A strategy failed to produce an action. The match harness scores this as
/// a loss for the faulting side.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StrategyFault {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("no legal action offered")]
    NoActions,
}

/// Maps a game state to one of its legal actions.
///
/// Strategies are shared immutably between worker threads; anything random
/// must come from the `rng` the caller passes in.
pub trait Strategy: Send + Sync {
    fn name(&self) -> String;

    /// Returns an index into `actions`, the legal actions at `state`.
    fn choose(&self, state: &GameState, actions: &[Action], rng: &mut dyn RngCore) -> Result<usize, StrategyFault>;
}

impl<S: Strategy + ?Sized> Strategy for &S {
    fn name(&self) -> String {
        (**self).name()
    }

    fn choose(&self, state: &GameState, actions: &[Action], rng: &mut dyn RngCore) -> Result<usize, StrategyFault> {
        (**self).choose(state, actions, rng)
    }
}

impl<S: Strategy + ?Sized> Strategy for Box<S> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn choose(&self, state: &GameState, actions: &[Action], rng: &mut dyn RngCore) -> Result<usize, StrategyFault> {
        (**self).choose(state, actions, rng)
    }
}

impl<S: Strategy + ?Sized> Strategy for std::sync::Arc<S> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn choose(&self, state: &GameState, actions: &[Action], rng: &mut dyn RngCore) -> Result<usize, StrategyFault> {
        (**self).choose(state, actions, rng)
    }
}

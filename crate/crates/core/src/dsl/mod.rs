//! The Can't Stop strategy language.
//!
//! A strategy program is derived from `S -> A A`: the first `A` scores the
//! yes/no decision, the second picks the index of a column move. Both are
//! plugged into a fixed decision skeleton ([`ProgramStrategy`]).
//!
//! Programs are compiled from their AST into an [`Expr`] once and evaluated
//! many times against game states.

mod builtin;
mod expr;
mod infix;
mod interp;

use std::sync::OnceLock;

pub use builtin::{
    ga_pair, synthesized_pair, GaStrategy, ProgramStrategy, RandomStrategy, StrategyPair, STOP_THRESHOLD,
};
pub use expr::{Expr, Feature, Op, WeightTable};
pub use infix::parse_infix;
pub use interp::{eval, DifficultyRule, EvalContext, EvalError, Value};

use crate::grammar::Grammar;

/// Grammar of the strategy language in the plain-text grammar format.
pub const GRAMMAR_TEXT: &str = "\
S -> A A
A -> if B < B then A else A | argmax L | sum L | E Op E
B -> N | E Op E
E -> E Op E | N | sum L | L2 | F2
L -> map Lam L | L1 | l1
Lam -> sum L | map Lam L | E Op E
F2 -> f1 | f2 | f3 | f4 | f5 | f6
L1 -> l2 | l3
L2 -> l4 | l5
N -> 0 | 1
Op -> + | - | *
";

/// Shared instance of the strategy-language grammar.
pub fn cantstop_grammar() -> &'static Grammar {
    static GRAMMAR: OnceLock<Grammar> = OnceLock::new();
    GRAMMAR.get_or_init(|| Grammar::parse(GRAMMAR_TEXT).expect("built-in grammar is valid"))
}

/// Column weights used by the yes/no rule of the GA strategy, by column 2..=12.
pub const PROGRESS_WEIGHTS: [i64; 11] = [7, 7, 3, 2, 2, 1, 2, 2, 3, 7, 7];
/// Column weights used by the column rule of the GA strategy, by column 2..=12.
pub const MOVE_WEIGHTS: [i64; 11] = [7, 0, 2, 0, 4, 3, 4, 0, 2, 0, 7];

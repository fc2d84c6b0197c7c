use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, RngCore};

use super::expr::Expr;
use super::infix::parse_infix;
use super::interp::{eval, DifficultyRule, EvalContext, EvalError, Value};
use super::{cantstop_grammar, MOVE_WEIGHTS, PROGRESS_WEIGHTS};
use crate::cantstop::{Action, GameState, Phase};
use crate::grammar::{Node, Program, ProgramError};
use crate::strategy::{Strategy, StrategyFault};

/// Yes/no scores at or above this stop the turn.
pub const STOP_THRESHOLD: i64 = 29;

/// A complete strategy program split into its two rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategyPair {
    program: Program,
    yes_no: Expr,
    column: Expr,
}

impl StrategyPair {
    /// Compiles a complete program derived from `S -> A A`.
    pub fn from_program(program: Program) -> Result<Self, ProgramError> {
        let g = cantstop_grammar();
        let root = program.root();
        if g.name(root.symbol) != "S" || root.children.len() != 2 {
            return Err(ProgramError::Parse("expected a program rooted at `S -> A A`".into()));
        }
        let yes_no = Expr::compile(g, &root.children[0])?;
        let column = Expr::compile(g, &root.children[1])?;
        Ok(StrategyPair { program, yes_no, column })
    }

    /// Builds a pair from the infix text of both rules.
    pub fn from_infix(yes_no: &str, column: &str) -> Result<Self, ProgramError> {
        let g = cantstop_grammar();
        let start = g.start();
        let production = g.find_production("S", &["A", "A"]).expect("S -> A A");
        let root = Node::expanded(start, production, vec![parse_infix(yes_no, "A")?, parse_infix(column, "A")?]);
        StrategyPair::from_program(Program::from_root(root))
    }

    /// Reads either the s-expression form or the two-line infix form
    /// (`yes-no: ...` and `column: ...`). Lines starting with `#` are
    /// comments.
    pub fn parse(text: &str) -> Result<Self, ProgramError> {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect();
        if lines.first().is_some_and(|l| l.starts_with('(')) {
            return StrategyPair::from_program(cantstop_grammar().parse_sexpr(&lines.join(" "))?);
        }
        let mut yes_no = None;
        let mut column = None;
        for line in lines {
            if let Some(rest) = line.strip_prefix("yes-no:") {
                yes_no = Some(rest);
            } else if let Some(rest) = line.strip_prefix("column:") {
                column = Some(rest);
            } else {
                return Err(ProgramError::Parse(format!("unrecognized line `{line}`")));
            }
        }
        match (yes_no, column) {
            (Some(y), Some(c)) => StrategyPair::from_infix(y, c),
            _ => Err(ProgramError::Parse("need both `yes-no:` and `column:` lines".into())),
        }
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn yes_no(&self) -> &Expr {
        &self.yes_no
    }

    pub fn column(&self) -> &Expr {
        &self.column
    }

    pub fn to_sexpr(&self) -> String {
        cantstop_grammar().to_sexpr(&self.program)
    }
}

/// Two-line infix form, accepted by [`StrategyPair::parse`].
impl fmt::Display for StrategyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "yes-no: {}", self.yes_no)?;
        write!(f, "column: {}", self.column)
    }
}

/// The evolved strategy expressed in the language.
pub fn ga_pair() -> StrategyPair {
    StrategyPair::from_infix(
        "sum(map(lambda x: (f1 + 1) * l4, l2)) + f5",
        "argmax(map(lambda x: sum(map(lambda x: f2 * l5 - 6 * f6, l1)), l3))",
    )
    .expect("built-in program parses")
}

/// A previously synthesized strategy.
pub fn synthesized_pair() -> StrategyPair {
    StrategyPair::from_infix(
        "((f5 * f5) - (sum(map((lambda x : sum(l2)), l2)) - (f5 + sum(map((lambda x : (l4 * (f1 * f3))), l2)))))",
        "argmax(map((lambda x : sum(map((lambda x : (f3 + l5)), l1))), l3))",
    )
    .expect("built-in program parses")
}

fn index_of(actions: &[Action], wanted: Action) -> Result<usize, StrategyFault> {
    actions.iter().position(|a| *a == wanted).ok_or(StrategyFault::NoActions)
}

/// Shared decision skeleton: stop when stopping wins, continue when a marker
/// can still be placed, otherwise stop once the score reaches the threshold.
fn yes_no_decision(state: &GameState, score: i64, actions: &[Action]) -> Result<usize, StrategyFault> {
    let stop = if state.win_after_n() {
        true
    } else if state.available_columns() {
        false
    } else {
        score >= STOP_THRESHOLD
    };
    index_of(actions, if stop { Action::No } else { Action::Yes })
}

/// Plays a [`StrategyPair`] through the decision skeleton.
#[derive(Debug)]
pub struct ProgramStrategy {
    pair: StrategyPair,
    difficulty: DifficultyRule,
    label: String,
    soft_faults: AtomicU64,
}

impl ProgramStrategy {
    pub fn new(pair: StrategyPair) -> Self {
        ProgramStrategy::with_difficulty(pair, DifficultyRule::default())
    }

    pub fn with_difficulty(pair: StrategyPair, difficulty: DifficultyRule) -> Self {
        ProgramStrategy { pair, difficulty, label: "program".into(), soft_faults: AtomicU64::new(0) }
    }

    pub fn named(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn pair(&self) -> &StrategyPair {
        &self.pair
    }

    /// Column choices that fell outside the action list and were wrapped.
    pub fn soft_faults(&self) -> u64 {
        self.soft_faults.load(Ordering::Relaxed)
    }

    fn eval_int(&self, expr: &Expr, state: &GameState, actions: &[Action]) -> Result<i64, EvalError> {
        let mut ctx = EvalContext::new(state, actions, self.difficulty);
        let v = eval(expr, &mut ctx)?;
        v.as_int().ok_or_else(|| EvalError::TypeMismatch {
            node: expr.to_string(),
            expected: "integer",
            found: match v {
                Value::List(_) => "list",
                _ => "action",
            },
        })
    }
}

impl Strategy for ProgramStrategy {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn choose(&self, state: &GameState, actions: &[Action], _rng: &mut dyn RngCore) -> Result<usize, StrategyFault> {
        if actions.is_empty() {
            return Err(StrategyFault::NoActions);
        }
        match state.phase() {
            Phase::YesNo => {
                let score = self.eval_int(&self.pair.yes_no, state, actions)?;
                yes_no_decision(state, score, actions)
            }
            Phase::Column => {
                let raw = self.eval_int(&self.pair.column, state, actions)?;
                let n = actions.len() as i64;
                if !(0..n).contains(&raw) {
                    self.soft_faults.fetch_add(1, Ordering::Relaxed);
                }
                Ok(raw.rem_euclid(n) as usize)
            }
        }
    }
}

/// Native implementation of the evolved strategy.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaStrategy {
    pub difficulty: DifficultyRule,
}

impl GaStrategy {
    pub fn new(difficulty: DifficultyRule) -> Self {
        GaStrategy { difficulty }
    }

    pub fn yes_no_score(&self, state: &GameState) -> i64 {
        let progress: i64 = state
            .neutral_columns()
            .map(|c| (i64::from(state.advanced_this_round(c)) + 1) * PROGRESS_WEIGHTS[(c - 2) as usize])
            .sum();
        progress + self.difficulty.score(state)
    }

    pub fn column_score(&self, state: &GameState, action: &Action) -> i64 {
        action
            .columns()
            .iter()
            .map(|&c| {
                i64::from(state.advanced_by_action(action, c)) * MOVE_WEIGHTS[(c - 2) as usize]
                    - 6 * i64::from(state.is_new_neutral(action, c))
            })
            .sum()
    }
}

impl Strategy for GaStrategy {
    fn name(&self) -> String {
        "ga".into()
    }

    fn choose(&self, state: &GameState, actions: &[Action], _rng: &mut dyn RngCore) -> Result<usize, StrategyFault> {
        if actions.is_empty() {
            return Err(StrategyFault::NoActions);
        }
        match state.phase() {
            Phase::YesNo => yes_no_decision(state, self.yes_no_score(state), actions),
            Phase::Column => {
                let mut best = (0, self.column_score(state, &actions[0]));
                for (i, a) in actions.iter().enumerate().skip(1) {
                    let s = self.column_score(state, a);
                    if s > best.1 {
                        best = (i, s);
                    }
                }
                Ok(best.0)
            }
        }
    }
}

/// Picks uniformly among the legal actions.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomStrategy;

impl Strategy for RandomStrategy {
    fn name(&self) -> String {
        "random".into()
    }

    fn choose(&self, _state: &GameState, actions: &[Action], rng: &mut dyn RngCore) -> Result<usize, StrategyFault> {
        if actions.is_empty() {
            return Err(StrategyFault::NoActions);
        }
        Ok(rng.random_range(0..actions.len()))
    }
}

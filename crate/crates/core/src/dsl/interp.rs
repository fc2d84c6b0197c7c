use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{Expr, Feature, Op, WeightTable};
use super::{MOVE_WEIGHTS, PROGRESS_WEIGHTS};
use crate::cantstop::{Action, GameState};

/// Results saturate to this magnitude.
const INT_BOUND: i64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("type mismatch in `{node}`: expected {expected}, found {found}")]
    TypeMismatch { node: String, expected: &'static str, found: &'static str },
    #[error("`{node}` needs a bound {what}")]
    Unbound { node: String, what: &'static str },
    #[error("argmax of an empty list in `{node}`")]
    EmptyArgmax { node: String },
}

/// Runtime values of the strategy language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Column(u8),
    /// Index into the context's legal actions.
    Action(usize),
    List(Vec<Value>),
}

impl Value {
    fn kind(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Column(_) => "column",
            Value::Action(_) => "action",
            Value::List(_) => "list",
        }
    }

    /// Integer view; columns read as their number.
    pub fn as_int(&self) -> Option<i64> {
        match *self {
            Value::Int(i) => Some(i),
            Value::Column(c) => Some(i64::from(c)),
            _ => None,
        }
    }
}

/// Difficulty score (`f5`) of the neutral-marker layout. Every term is
/// additive and applies only when at least one marker is placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DifficultyRule {
    /// Added per marker on an odd column.
    pub per_odd: i64,
    /// Added when every marker is on an odd column.
    pub all_odd: i64,
    /// Added when every marker is on an even column.
    pub all_even: i64,
    /// Added when every marker is below column 7.
    pub all_low: i64,
    /// Added when every marker is above column 7.
    pub all_high: i64,
}

impl DifficultyRule {
    /// +2 per odd column, +4 if all markers are below 7, +4 if all above 7.
    pub const STANDARD: DifficultyRule =
        DifficultyRule { per_odd: 2, all_odd: 0, all_even: 0, all_low: 4, all_high: 4 };

    /// The evolved constants: +7 all odd, -1 all even, +5 all low, +6 all high.
    pub const EVOLVED: DifficultyRule =
        DifficultyRule { per_odd: 0, all_odd: 7, all_even: -1, all_low: 5, all_high: 6 };

    pub fn score(&self, state: &GameState) -> i64 {
        let cols: Vec<u8> = state.neutral_columns().collect();
        if cols.is_empty() {
            return 0;
        }
        let odd = cols.iter().filter(|&&c| c % 2 == 1).count();
        let mut score = self.per_odd * odd as i64;
        if odd == cols.len() {
            score += self.all_odd;
        }
        if odd == 0 {
            score += self.all_even;
        }
        if cols.iter().all(|&c| c < 7) {
            score += self.all_low;
        }
        if cols.iter().all(|&c| c > 7) {
            score += self.all_high;
        }
        score
    }
}

/// The evolved constants; the GA opponent is defined with them.
impl Default for DifficultyRule {
    fn default() -> Self {
        DifficultyRule::EVOLVED
    }
}

/// State, legal actions, and the λ-binding stack for one evaluation.
pub struct EvalContext<'a> {
    pub state: &'a GameState,
    pub actions: &'a [Action],
    pub difficulty: DifficultyRule,
    bindings: Vec<Value>,
}

impl<'a> EvalContext<'a> {
    pub fn new(state: &'a GameState, actions: &'a [Action], difficulty: DifficultyRule) -> Self {
        EvalContext { state, actions, difficulty, bindings: Vec::new() }
    }

    pub fn binding_depth(&self) -> usize {
        self.bindings.len()
    }

    fn column(&self) -> Option<u8> {
        self.bindings.iter().rev().find_map(|v| match v {
            Value::Column(c) => Some(*c),
            _ => None,
        })
    }

    fn action(&self) -> Option<&'a Action> {
        let actions = self.actions;
        self.bindings.iter().rev().find_map(|v| match v {
            Value::Action(i) => actions.get(*i),
            _ => None,
        })
    }
}

fn saturate(v: i64) -> i64 {
    v.clamp(-INT_BOUND, INT_BOUND)
}

fn mismatch(node: &Expr, expected: &'static str, found: &Value) -> EvalError {
    EvalError::TypeMismatch { node: node.to_string(), expected, found: found.kind() }
}

fn int_of(node: &Expr, v: &Value) -> Result<i64, EvalError> {
    v.as_int().ok_or_else(|| mismatch(node, "integer", v))
}

/// Evaluates `expr`; a pure function of the expression and the context.
pub fn eval(expr: &Expr, ctx: &mut EvalContext<'_>) -> Result<Value, EvalError> {
    fn bound_column(ctx: &EvalContext<'_>, expr: &Expr) -> Result<u8, EvalError> {
        ctx.column().ok_or_else(|| EvalError::Unbound { node: expr.to_string(), what: "column" })
    }
    fn bound_action<'a>(ctx: &EvalContext<'a>, expr: &Expr) -> Result<&'a Action, EvalError> {
        ctx.action().ok_or_else(|| EvalError::Unbound { node: expr.to_string(), what: "action" })
    }
    Ok(match expr {
        Expr::Const(c) => Value::Int(*c),
        Expr::Feature(f) => {
            let s = ctx.state;
            Value::Int(match f {
                Feature::Difficulty => ctx.difficulty.score(s),
                Feature::AdvancedThisRound => i64::from(s.advanced_this_round(bound_column(ctx, expr)?)),
                Feature::PlayerSecured => i64::from(s.secured(s.to_move(), bound_column(ctx, expr)?)),
                Feature::OpponentSecured => i64::from(s.secured(s.to_move().other(), bound_column(ctx, expr)?)),
                Feature::AdvancedByAction => {
                    let c = bound_column(ctx, expr)?;
                    i64::from(s.advanced_by_action(bound_action(ctx, expr)?, c))
                }
                Feature::IsNewNeutral => {
                    let c = bound_column(ctx, expr)?;
                    i64::from(s.is_new_neutral(bound_action(ctx, expr)?, c))
                }
            })
        }
        Expr::LocalList => Value::List(bound_action(ctx, expr)?.columns().iter().map(|&c| Value::Column(c)).collect()),
        Expr::Neutrals => Value::List(ctx.state.neutral_columns().map(Value::Column).collect()),
        Expr::Actions => Value::List((0..ctx.actions.len()).map(Value::Action).collect()),
        Expr::Weights(table) => {
            let weights = match table {
                WeightTable::Progress => &PROGRESS_WEIGHTS,
                WeightTable::Move => &MOVE_WEIGHTS,
            };
            match ctx.column() {
                Some(c) => Value::Int(weights[(c - 2) as usize]),
                None => Value::List(weights.iter().map(|&w| Value::Int(w)).collect()),
            }
        }
        Expr::Sum(inner) => match eval(inner, ctx)? {
            Value::List(items) => {
                let mut total = 0i64;
                for v in &items {
                    total = saturate(total + int_of(expr, v)?);
                }
                Value::Int(total)
            }
            other => return Err(mismatch(expr, "list", &other)),
        },
        Expr::Argmax(inner) => match eval(inner, ctx)? {
            Value::List(items) => {
                if items.is_empty() {
                    return Err(EvalError::EmptyArgmax { node: expr.to_string() });
                }
                let mut best = (0usize, int_of(expr, &items[0])?);
                for (i, v) in items.iter().enumerate().skip(1) {
                    let x = int_of(expr, v)?;
                    if x > best.1 {
                        best = (i, x);
                    }
                }
                Value::Int(best.0 as i64)
            }
            other => return Err(mismatch(expr, "list", &other)),
        },
        Expr::Map { body, list } => match eval(list, ctx)? {
            Value::List(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    ctx.bindings.push(item);
                    let r = eval(body, ctx);
                    ctx.bindings.pop();
                    out.push(r?);
                }
                Value::List(out)
            }
            other => return Err(mismatch(expr, "list", &other)),
        },
        Expr::Bin(op, a, b) => {
            let x = int_of(expr, &eval(a, ctx)?)?;
            let y = int_of(expr, &eval(b, ctx)?)?;
            Value::Int(saturate(match op {
                Op::Add => x + y,
                Op::Sub => x - y,
                Op::Mul => x.saturating_mul(y),
            }))
        }
        Expr::If { lhs, rhs, then, otherwise } => {
            let l = int_of(expr, &eval(lhs, ctx)?)?;
            let r = int_of(expr, &eval(rhs, ctx)?)?;
            if l < r {
                eval(then, ctx)?
            } else {
                eval(otherwise, ctx)?
            }
        }
    })
}

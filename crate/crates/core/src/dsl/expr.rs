use std::fmt;

use crate::grammar::{Grammar, Node, ProgramError};

/// Domain functions `f1`..`f6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Feature {
    /// `f1`: cells advanced this turn in the bound column.
    AdvancedThisRound,
    /// `f2`: cells the bound action advances in the bound column.
    AdvancedByAction,
    /// `f3`: cells the mover has secured in the bound column.
    PlayerSecured,
    /// `f4`: cells the opponent has secured in the bound column.
    OpponentSecured,
    /// `f5`: difficulty score of the state.
    Difficulty,
    /// `f6`: 1 if the bound action puts a new neutral marker on the bound column.
    IsNewNeutral,
}

impl Feature {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "f1" => Feature::AdvancedThisRound,
            "f2" => Feature::AdvancedByAction,
            "f3" => Feature::PlayerSecured,
            "f4" => Feature::OpponentSecured,
            "f5" => Feature::Difficulty,
            "f6" => Feature::IsNewNeutral,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Feature::AdvancedThisRound => "f1",
            Feature::AdvancedByAction => "f2",
            Feature::PlayerSecured => "f3",
            Feature::OpponentSecured => "f4",
            Feature::Difficulty => "f5",
            Feature::IsNewNeutral => "f6",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightTable {
    /// `l4`
    Progress,
    /// `l5`
    Move,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Sub,
    Mul,
}

impl Op {
    pub fn symbol(self) -> &'static str {
        match self {
            Op::Add => "+",
            Op::Sub => "-",
            Op::Mul => "*",
        }
    }
}

/// Compiled form of a strategy-language expression.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(i64),
    Feature(Feature),
    /// `l1`: columns of the bound action.
    LocalList,
    /// `l2`: columns holding neutral markers.
    Neutrals,
    /// `l3`: the legal actions.
    Actions,
    /// `l4` / `l5`: the weight of the bound column, or the whole table.
    Weights(WeightTable),
    Sum(Box<Expr>),
    Argmax(Box<Expr>),
    Map {
        body: Box<Expr>,
        list: Box<Expr>,
    },
    Bin(Op, Box<Expr>, Box<Expr>),
    If {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
}

fn err(msg: impl Into<String>) -> ProgramError {
    ProgramError::Parse(msg.into())
}

impl Expr {
    /// Compiles an expanded subtree of a strategy-language program.
    pub fn compile(grammar: &Grammar, node: &Node) -> Result<Expr, ProgramError> {
        if node.is_hole() {
            return Err(err(format!("unexpanded `{}`", grammar.name(node.symbol))));
        }
        if node.is_terminal() {
            let name = grammar.name(node.symbol);
            return Ok(match name {
                "0" => Expr::Const(0),
                "1" => Expr::Const(1),
                "l1" => Expr::LocalList,
                "l2" => Expr::Neutrals,
                "l3" => Expr::Actions,
                "l4" => Expr::Weights(WeightTable::Progress),
                "l5" => Expr::Weights(WeightTable::Move),
                _ => match Feature::from_name(name) {
                    Some(f) => Expr::Feature(f),
                    None => return Err(err(format!("terminal `{name}` is not an expression"))),
                },
            });
        }
        let kids = &node.children;
        let name_of = |n: &Node| grammar.name(n.symbol);
        let sub = |i: usize| Expr::compile(grammar, &kids[i]).map(Box::new);
        match kids.len() {
            1 => Expr::compile(grammar, &kids[0]),
            2 if name_of(&kids[0]) == "sum" => Ok(Expr::Sum(sub(1)?)),
            2 if name_of(&kids[0]) == "argmax" => Ok(Expr::Argmax(sub(1)?)),
            3 if name_of(&kids[0]) == "map" => Ok(Expr::Map { body: sub(1)?, list: sub(2)? }),
            3 if name_of(&kids[1]) == "Op" => {
                let op_node = &kids[1];
                let op = match op_node.children.first().map(name_of) {
                    Some("+") => Op::Add,
                    Some("-") => Op::Sub,
                    Some("*") => Op::Mul,
                    _ => return Err(err("malformed operator")),
                };
                Ok(Expr::Bin(op, sub(0)?, sub(2)?))
            }
            8 if name_of(&kids[0]) == "if" => {
                Ok(Expr::If { lhs: sub(1)?, rhs: sub(3)?, then: sub(5)?, otherwise: sub(7)? })
            }
            _ => Err(err(format!("no semantics for production of `{}`", grammar.name(node.symbol)))),
        }
    }

    pub fn size(&self) -> usize {
        1 + match self {
            Expr::Sum(e) | Expr::Argmax(e) => e.size(),
            Expr::Map { body, list } => body.size() + list.size(),
            Expr::Bin(_, a, b) => a.size() + b.size(),
            Expr::If { lhs, rhs, then, otherwise } => lhs.size() + rhs.size() + then.size() + otherwise.size(),
            _ => 0,
        }
    }
}

/// Infix rendering accepted back by [`crate::dsl::parse_infix`].
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Feature(x) => f.write_str(x.name()),
            Expr::LocalList => f.write_str("l1"),
            Expr::Neutrals => f.write_str("l2"),
            Expr::Actions => f.write_str("l3"),
            Expr::Weights(WeightTable::Progress) => f.write_str("l4"),
            Expr::Weights(WeightTable::Move) => f.write_str("l5"),
            Expr::Sum(e) => write!(f, "sum({e})"),
            Expr::Argmax(e) => write!(f, "argmax({e})"),
            Expr::Map { body, list } => write!(f, "map(lambda x: {body}, {list})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::If { lhs, rhs, then, otherwise } => {
                write!(f, "if ({lhs} < {rhs}) then {then} else {otherwise}")
            }
        }
    }
}

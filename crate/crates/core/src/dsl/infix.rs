//! Reader for the infix surface syntax, e.g.
//! `argmax(map(lambda x: sum(map(lambda x: f3 + l5, l1)), l3))`.
//!
//! Integer literals above 1 are written out as sums of ones, since the
//! grammar only has `0` and `1`.

use super::cantstop_grammar;
use super::expr::Op;
use crate::grammar::{Grammar, Node, ProgramError};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(i64),
    Ident(String),
    Punct(char),
}

#[derive(Debug, Clone)]
enum Surface {
    Int(i64),
    Name(String),
    Sum(Box<Surface>),
    Argmax(Box<Surface>),
    Map(Box<Surface>, Box<Surface>),
    Bin(Op, Box<Surface>, Box<Surface>),
    If(Box<Surface>, Box<Surface>, Box<Surface>, Box<Surface>),
}

fn err(msg: impl Into<String>) -> ProgramError {
    ProgramError::Parse(msg.into())
}

fn tokenize(text: &str) -> Result<Vec<Tok>, ProgramError> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c.is_ascii_digit() {
            let mut end = i;
            while let Some(&(j, d)) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                end = j + d.len_utf8();
                chars.next();
            }
            let n = text[i..end].parse().map_err(|_| err(format!("bad integer `{}`", &text[i..end])))?;
            out.push(Tok::Int(n));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut end = i;
            while let Some(&(j, d)) = chars.peek() {
                if !(d.is_ascii_alphanumeric() || d == '_') {
                    break;
                }
                end = j + d.len_utf8();
                chars.next();
            }
            out.push(Tok::Ident(text[i..end].to_string()));
        } else if "(),:+-*<".contains(c) {
            out.push(Tok::Punct(c));
            chars.next();
        } else {
            return Err(err(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn is_punct(&self, c: char) -> bool {
        self.peek() == Some(&Tok::Punct(c))
    }

    fn is_ident(&self, name: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == name)
    }

    fn expect_punct(&mut self, c: char) -> Result<(), ProgramError> {
        match self.next() {
            Some(Tok::Punct(d)) if d == c => Ok(()),
            other => Err(err(format!("expected `{c}`, found {other:?}"))),
        }
    }

    fn expect_ident(&mut self, name: &str) -> Result<(), ProgramError> {
        match self.next() {
            Some(Tok::Ident(s)) if s == name => Ok(()),
            other => Err(err(format!("expected `{name}`, found {other:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Surface, ProgramError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.is_punct('+') {
                Op::Add
            } else if self.is_punct('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Surface::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Surface, ProgramError> {
        let mut lhs = self.atom()?;
        while self.is_punct('*') {
            self.pos += 1;
            let rhs = self.atom()?;
            lhs = Surface::Bin(Op::Mul, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn call_arg(&mut self) -> Result<Surface, ProgramError> {
        self.expect_punct('(')?;
        let e = self.expr()?;
        self.expect_punct(')')?;
        Ok(e)
    }

    fn lambda(&mut self) -> Result<Surface, ProgramError> {
        if self.is_punct('(') {
            self.pos += 1;
            let body = self.lambda()?;
            self.expect_punct(')')?;
            return Ok(body);
        }
        self.expect_ident("lambda")?;
        match self.next() {
            Some(Tok::Ident(_)) => {}
            other => return Err(err(format!("expected a parameter name, found {other:?}"))),
        }
        self.expect_punct(':')?;
        self.expr()
    }

    fn condition(&mut self) -> Result<(Surface, Surface), ProgramError> {
        let lhs = self.expr()?;
        self.expect_punct('<')?;
        let rhs = self.expr()?;
        Ok((lhs, rhs))
    }

    fn atom(&mut self) -> Result<Surface, ProgramError> {
        match self.next() {
            Some(Tok::Int(n)) => Ok(Surface::Int(n)),
            Some(Tok::Punct('(')) => {
                let e = self.expr()?;
                self.expect_punct(')')?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "sum" => Ok(Surface::Sum(Box::new(self.call_arg()?))),
                "argmax" => Ok(Surface::Argmax(Box::new(self.call_arg()?))),
                "map" => {
                    self.expect_punct('(')?;
                    let body = self.lambda()?;
                    self.expect_punct(',')?;
                    let list = self.expr()?;
                    self.expect_punct(')')?;
                    Ok(Surface::Map(Box::new(body), Box::new(list)))
                }
                "if" => {
                    // Either `if (a < b) then ..` or `if a < b then ..`.
                    let start = self.pos;
                    let cond = if self.is_punct('(') {
                        self.pos += 1;
                        match self.condition().and_then(|c| self.expect_punct(')').map(|_| c)) {
                            Ok(c) if self.is_ident("then") => c,
                            _ => {
                                self.pos = start;
                                self.condition()?
                            }
                        }
                    } else {
                        self.condition()?
                    };
                    self.expect_ident("then")?;
                    let then = self.expr()?;
                    self.expect_ident("else")?;
                    let otherwise = self.expr()?;
                    Ok(Surface::If(Box::new(cond.0), Box::new(cond.1), Box::new(then), Box::new(otherwise)))
                }
                _ => Ok(Surface::Name(name)),
            },
            other => Err(err(format!("unexpected token {other:?}"))),
        }
    }
}

/// Spells `n >= 2` as `1 + 1 + ...`.
fn ones(n: i64) -> Surface {
    (1..n).fold(Surface::Int(1), |acc, _| Surface::Bin(Op::Add, Box::new(acc), Box::new(Surface::Int(1))))
}

struct Builder<'g> {
    grammar: &'g Grammar,
}

impl Builder<'_> {
    fn terminal(&self, name: &str) -> Option<Node> {
        let id = self.grammar.symbol(name)?;
        (!self.grammar.is_nonterminal(id)).then(|| Node::terminal(id))
    }

    fn build(&self, s: &Surface, head: &str) -> Option<Node> {
        if let Surface::Int(n) = s {
            if *n >= 2 {
                return self.build(&ones(*n), head);
            }
        }
        let g = self.grammar;
        let head_id = g.symbol(head).filter(|&h| g.is_nonterminal(h))?;
        for (index, rhs) in g.productions(head_id).iter().enumerate() {
            let names: Vec<&str> = rhs.iter().map(|&x| g.name(x)).collect();
            let children = self.match_production(s, &names);
            if let Some(children) = children {
                return Some(Node::expanded(head_id, index as u16, children));
            }
        }
        None
    }

    fn sub(&self, s: &Surface, name: &str) -> Option<Node> {
        match self.terminal(name) {
            Some(_) => None,
            None => self.build(s, name),
        }
    }

    fn match_production(&self, s: &Surface, rhs: &[&str]) -> Option<Vec<Node>> {
        let g = self.grammar;
        let is_nt = |name: &str| g.symbol(name).is_some_and(|x| g.is_nonterminal(x));
        match (s, rhs) {
            (_, [single]) if is_nt(single) => Some(vec![self.build(s, single)?]),
            (Surface::Int(n), [lit]) if lit.parse::<i64>().ok() == Some(*n) => Some(vec![self.terminal(lit)?]),
            (Surface::Name(n), [lit]) if n == lit => Some(vec![self.terminal(lit)?]),
            (Surface::Sum(x), ["sum", list]) => Some(vec![self.terminal("sum")?, self.sub(x, list)?]),
            (Surface::Argmax(x), ["argmax", list]) => Some(vec![self.terminal("argmax")?, self.sub(x, list)?]),
            (Surface::Map(body, list), ["map", lam, l]) => {
                Some(vec![self.terminal("map")?, self.sub(body, lam)?, self.sub(list, l)?])
            }
            (Surface::Bin(op, a, b), [x, "Op", y]) => {
                let op_node = self.build(&Surface::Name(op.symbol().to_string()), "Op")?;
                Some(vec![self.sub(a, x)?, op_node, self.sub(b, y)?])
            }
            (Surface::If(l, r, t, e), ["if", b1, "<", b2, "then", a1, "else", a2]) => Some(vec![
                self.terminal("if")?,
                self.sub(l, b1)?,
                self.terminal("<")?,
                self.sub(r, b2)?,
                self.terminal("then")?,
                self.sub(t, a1)?,
                self.terminal("else")?,
                self.sub(e, a2)?,
            ]),
            _ => None,
        }
    }
}

/// Parses infix text into an expanded subtree of the strategy-language
/// grammar rooted at `nonterminal` (typically `A`).
pub fn parse_infix(text: &str, nonterminal: &str) -> Result<Node, ProgramError> {
    parse_infix_with(cantstop_grammar(), text, nonterminal)
}

pub(crate) fn parse_infix_with(grammar: &Grammar, text: &str, nonterminal: &str) -> Result<Node, ProgramError> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0 };
    let surface = p.expr()?;
    if let Some(t) = p.peek() {
        return Err(err(format!("trailing input at {t:?}")));
    }
    Builder { grammar }
        .build(&surface, nonterminal)
        .ok_or_else(|| err(format!("`{}` is not derivable from `{nonterminal}`", text.trim())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::Expr;
    use crate::grammar::Program;

    fn round_trip(src: &str) -> String {
        let g = cantstop_grammar();
        let node = parse_infix(src, "A").unwrap();
        Expr::compile(g, &node).unwrap().to_string()
    }

    #[test]
    fn parses_builtin_shapes() {
        assert_eq!(
            round_trip("argmax(map((lambda x : sum(map((lambda x : (f3 + l5)), l1))), l3))"),
            "argmax(map(lambda x: sum(map(lambda x: (f3 + l5), l1)), l3))"
        );
        assert_eq!(round_trip("sum(l2)"), "sum(l2)");
        assert_eq!(round_trip("f1 - f2 * f3"), "(f1 - (f2 * f3))");
        assert_eq!(
            round_trip("if (1 < f5 + 0) then sum(l2) else 0 + 1"),
            "if (1 < (f5 + 0)) then sum(l2) else (0 + 1)"
        );
        assert_eq!(
            round_trip("if (f5 + 0) < 1 then sum(l2) else 0 + 1"),
            "if ((f5 + 0) < 1) then sum(l2) else (0 + 1)"
        );
    }

    #[test]
    fn integers_become_sums_of_ones() {
        assert_eq!(round_trip("3 * f6"), "(((1 + 1) + 1) * f6)");
    }

    #[test]
    fn display_reparses_to_same_tree() {
        let g = cantstop_grammar();
        let src =
            "((f5 * f5) - (sum(map((lambda x : sum(l2)), l2)) - (f5 + sum(map((lambda x : (l4 * (f1 * f3))), l2)))))";
        let node = parse_infix(src, "A").unwrap();
        let text = Expr::compile(g, &node).unwrap().to_string();
        assert_eq!(parse_infix(&text, "A").unwrap(), node);
    }

    #[test]
    fn rejects_underivable_text() {
        // A bare weight table or number is not an `A`.
        assert!(parse_infix("l4", "A").is_err());
        assert!(parse_infix("1", "A").is_err());
        assert!(parse_infix("sum(l2", "A").is_err());
        assert!(parse_infix("sum(l2) sum(l2)", "A").is_err());
        assert!(parse_infix("f9 + 1", "A").is_err());
        assert!(parse_infix("sum(l2)", "S").is_err());
    }

    #[test]
    fn built_node_is_a_complete_program() {
        let node = parse_infix("sum(map(lambda x: (f1 + 1) * l4, l2)) + f5", "A").unwrap();
        let p = Program::from_root(node);
        assert!(p.is_complete());
    }
}

//! Canonical s-expression form of programs.
//!
//! An expanded node prints as `(Head child ...)`, a terminal or hole as its
//! bare symbol name. Symbol names are unique within a grammar, so a bare
//! nonterminal name always denotes a hole.

use super::{Grammar, Node, Program, ProgramError};

pub(super) fn print(grammar: &Grammar, node: &Node) -> String {
    let mut out = String::new();
    write(grammar, node, &mut out);
    out
}

fn write(grammar: &Grammar, node: &Node, out: &mut String) {
    if node.production.is_none() {
        out.push_str(grammar.name(node.symbol));
        return;
    }
    out.push('(');
    out.push_str(grammar.name(node.symbol));
    for child in &node.children {
        out.push(' ');
        write(grammar, child, out);
    }
    out.push(')');
}

enum Tree<'a> {
    Atom(&'a str),
    List(Vec<Tree<'a>>),
}

fn tokenize(text: &str) -> Vec<&str> {
    let mut tokens = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        if ch == '(' || ch == ')' || ch.is_whitespace() {
            if let Some(s) = start.take() {
                tokens.push(&text[s..i]);
            }
            if !ch.is_whitespace() {
                tokens.push(&text[i..i + 1]);
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        tokens.push(&text[s..]);
    }
    tokens
}

fn read<'a>(tokens: &[&'a str], pos: &mut usize) -> Result<Tree<'a>, ProgramError> {
    let tok = *tokens.get(*pos).ok_or_else(|| ProgramError::Parse("unexpected end of input".into()))?;
    *pos += 1;
    match tok {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(ProgramError::Parse("unbalanced `(`".into())),
                    Some(&")") => {
                        *pos += 1;
                        return Ok(Tree::List(items));
                    }
                    Some(_) => items.push(read(tokens, pos)?),
                }
            }
        }
        ")" => Err(ProgramError::Parse("unexpected `)`".into())),
        atom => Ok(Tree::Atom(atom)),
    }
}

fn lookup(grammar: &Grammar, name: &str) -> Result<u16, ProgramError> {
    grammar.symbol(name).ok_or_else(|| ProgramError::Parse(format!("unknown symbol `{name}`")))
}

fn build(grammar: &Grammar, tree: &Tree) -> Result<Node, ProgramError> {
    match tree {
        Tree::Atom(name) => Ok(grammar.leaf(lookup(grammar, name)?)),
        Tree::List(items) => {
            let (head, rest) = match items.split_first() {
                Some((Tree::Atom(h), rest)) => (lookup(grammar, h)?, rest),
                _ => return Err(ProgramError::Parse("list must start with a symbol".into())),
            };
            if !grammar.is_nonterminal(head) {
                return Err(ProgramError::Parse(format!(
                    "`{}` is a terminal and cannot be expanded",
                    grammar.name(head)
                )));
            }
            let children = rest.iter().map(|t| build(grammar, t)).collect::<Result<Vec<_>, _>>()?;
            let rhs: Vec<u16> = children.iter().map(|c| c.symbol).collect();
            let production = grammar.productions(head).iter().position(|p| *p == rhs).ok_or_else(|| {
                let names: Vec<&str> = rhs.iter().map(|&s| grammar.name(s)).collect();
                ProgramError::Parse(format!("no production `{} -> {}`", grammar.name(head), names.join(" ")))
            })?;
            Ok(Node::expanded(head, production as u16, children))
        }
    }
}

pub(super) fn parse(grammar: &Grammar, text: &str) -> Result<Program, ProgramError> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let tree = read(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(ProgramError::Parse("trailing input".into()));
    }
    Ok(Program::from_root(build(grammar, &tree)?))
}

#[cfg(test)]
mod tests {
    use crate::grammar::toy_grammar;
    use crate::grammar::ProgramError;

    #[test]
    fn prints_and_parses() {
        let g = toy_grammar();
        let text = "(I if (B b2) then (C c1))";
        let p = g.parse_sexpr(text).unwrap();
        assert_eq!(g.to_sexpr(&p), text);
        let partial = g.parse_sexpr("(I if B then (C c2))").unwrap();
        assert_eq!(partial.holes(), vec![vec![1]]);
        assert_eq!(g.to_sexpr(&partial), "(I if B then (C c2))");
    }

    #[test]
    fn parse_errors() {
        let g = toy_grammar();
        for bad in ["(I if (B b2) then", "(I (C c3))", "(I (B b1))", "(c1)", "(I (C c1)))", ""] {
            assert!(matches!(g.parse_sexpr(bad), Err(ProgramError::Parse(_))), "{bad}");
        }
    }
}

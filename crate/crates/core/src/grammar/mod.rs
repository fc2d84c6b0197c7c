//! Context-free grammars, programs as derivation trees, and the random
//! generation and mutation operators the searches are built on.
//!
//! A [`Grammar`] is immutable once built. Every nonterminal is checked at
//! construction to derive some terminal string, and the minimal derivation
//! height of every production is precomputed so random generation can be
//! forced to terminate past a depth limit.

mod program;
mod sexpr;

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use thiserror::Error;

pub use program::{Derivation, Node, Path, Program, ProgramError};

/// Index of a symbol inside its grammar.
pub type SymbolId = u16;

/// Default applied-production depth past which generation only picks
/// productions on a shortest path to termination.
pub const DEFAULT_DEPTH_LIMIT: u32 = 15;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("grammar has no rules")]
    Empty,
    #[error("nonterminal `{0}` has an empty production")]
    EmptyProduction(String),
    #[error("nonterminal `{0}` lists the same production twice")]
    DuplicateProduction(String),
    #[error("nonterminal `{0}` cannot derive a terminal-only string")]
    Dead(String),
    #[error("invalid symbol name `{0}`")]
    InvalidSymbol(String),
    #[error("too many symbols")]
    TooManySymbols,
}

/// A context-free grammar `(nonterminals, terminals, rules, start)`.
#[derive(Debug, Clone)]
pub struct Grammar {
    names: Vec<String>,
    index: HashMap<String, SymbolId>,
    /// Productions per symbol; empty for terminals.
    rules: Vec<Vec<Vec<SymbolId>>>,
    start: SymbolId,
    /// Minimal derivation height per symbol (0 for terminals).
    min_height: Vec<u32>,
    /// Indices of the productions achieving `min_height`, per symbol.
    shortest: Vec<Vec<u16>>,
}

impl Grammar {
    pub fn builder() -> GrammarBuilder {
        GrammarBuilder::default()
    }

    /// Parses the plain-text grammar format: one rule per line,
    /// `NT -> sym sym ... | sym ...`, `#` starts a comment. The head of the
    /// first rule is the start symbol. Repeated heads append alternatives.
    pub fn parse(text: &str) -> Result<Self, GrammarError> {
        let mut builder = GrammarBuilder::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (head, body) = line
                .split_once("->")
                .ok_or_else(|| GrammarError::Syntax { line: lineno + 1, message: "expected `->`".into() })?;
            let head = head.trim();
            if head.is_empty() || head.split_whitespace().count() != 1 {
                return Err(GrammarError::Syntax {
                    line: lineno + 1,
                    message: "rule head must be a single symbol".into(),
                });
            }
            for alt in body.split('|') {
                let symbols: Vec<&str> = alt.split_whitespace().collect();
                if symbols.is_empty() {
                    return Err(GrammarError::EmptyProduction(head.to_string()));
                }
                builder = builder.rule(head, &symbols);
            }
        }
        builder.build()
    }

    pub fn start(&self) -> SymbolId {
        self.start
    }

    pub fn name(&self, symbol: SymbolId) -> &str {
        &self.names[symbol as usize]
    }

    pub fn symbol(&self, name: &str) -> Option<SymbolId> {
        self.index.get(name).copied()
    }

    pub fn symbol_count(&self) -> usize {
        self.names.len()
    }

    pub fn is_nonterminal(&self, symbol: SymbolId) -> bool {
        !self.rules[symbol as usize].is_empty()
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = SymbolId> + '_ {
        (0..self.names.len() as SymbolId).filter(|&s| self.is_nonterminal(s))
    }

    pub fn terminals(&self) -> impl Iterator<Item = SymbolId> + '_ {
        (0..self.names.len() as SymbolId).filter(|&s| !self.is_nonterminal(s))
    }

    /// Productions of `symbol` in declaration order (empty for terminals).
    pub fn productions(&self, symbol: SymbolId) -> &[Vec<SymbolId>] {
        &self.rules[symbol as usize]
    }

    pub fn production(&self, symbol: SymbolId, index: usize) -> Option<&[SymbolId]> {
        self.rules[symbol as usize].get(index).map(Vec::as_slice)
    }

    /// Finds the production of `head` whose right-hand side spells `names`.
    pub fn find_production(&self, head: &str, names: &[&str]) -> Option<u16> {
        let head = self.symbol(head)?;
        self.rules[head as usize]
            .iter()
            .position(|rhs| rhs.len() == names.len() && rhs.iter().zip(names).all(|(&s, n)| self.name(s) == *n))
            .map(|i| i as u16)
    }

    /// Smallest number of nested production applications needed to turn
    /// `symbol` into terminals.
    pub fn min_height(&self, symbol: SymbolId) -> u32 {
        self.min_height[symbol as usize]
    }

    /// Generates a complete program from the start symbol.
    pub fn random_program<R: Rng + ?Sized>(&self, rng: &mut R, depth_limit: u32) -> Program {
        Program::from_root(self.generate(self.start, 1, depth_limit, rng))
    }

    /// Generates a complete subtree rooted at `symbol`, whose root sits at
    /// applied-production depth `depth`.
    pub fn generate<R: Rng + ?Sized>(&self, symbol: SymbolId, depth: u32, depth_limit: u32, rng: &mut R) -> Node {
        let prods = &self.rules[symbol as usize];
        if prods.is_empty() {
            return Node::terminal(symbol);
        }
        let choice = if depth > depth_limit {
            let short = &self.shortest[symbol as usize];
            short[rng.random_range(0..short.len())] as usize
        } else {
            rng.random_range(0..prods.len())
        };
        let children = prods[choice].iter().map(|&s| self.generate(s, depth + 1, depth_limit, rng)).collect();
        Node::expanded(symbol, choice as u16, children)
    }

    /// Replaces the subtree at one uniformly chosen node by a freshly
    /// generated subtree rooted at the same nonterminal.
    ///
    /// Without `leaf_restricted` every node carrying a nonterminal is a
    /// candidate, the root included. With it, only unexpanded nonterminal
    /// leaves are, so the expanded part of the program is kept as is.
    pub fn neighbor<R: Rng + ?Sized>(
        &self,
        program: &Program,
        rng: &mut R,
        leaf_restricted: bool,
        depth_limit: u32,
    ) -> Result<Program, ProgramError> {
        let candidates = if leaf_restricted { program.holes() } else { program.nonterminal_nodes() };
        if candidates.is_empty() {
            return Err(ProgramError::NoCandidate);
        }
        let path = &candidates[rng.random_range(0..candidates.len())];
        Ok(self.regenerate(program, path, rng, depth_limit))
    }

    /// Returns a copy of `program` whose subtree at `path` is replaced by a
    /// fresh random subtree for the same symbol.
    pub fn regenerate<R: Rng + ?Sized>(
        &self,
        program: &Program,
        path: &Path,
        rng: &mut R,
        depth_limit: u32,
    ) -> Program {
        let symbol = program.node(path).symbol;
        let fresh = self.generate(symbol, path.len() as u32 + 1, depth_limit, rng);
        program.with_subtree(path, fresh)
    }

    /// Fills every unexpanded nonterminal leaf with a random subtree.
    pub fn complete<R: Rng + ?Sized>(&self, program: &Program, rng: &mut R, depth_limit: u32) -> Program {
        let mut out = program.clone();
        for path in program.holes() {
            let fresh = self.generate(program.node(&path).symbol, path.len() as u32 + 1, depth_limit, rng);
            out = out.with_subtree(&path, fresh);
        }
        out
    }

    /// Copy of `partial` with its leftmost (pre-order) unexpanded
    /// nonterminal expanded by `production`.
    pub fn expand_leftmost(&self, partial: &Program, production: usize) -> Result<Program, ProgramError> {
        let path = partial.leftmost_hole().ok_or(ProgramError::Complete)?;
        let symbol = partial.node(&path).symbol;
        let rhs = self.production(symbol, production).ok_or_else(|| ProgramError::InvalidProduction {
            symbol: self.name(symbol).to_string(),
            index: production,
        })?;
        let children = rhs.iter().map(|&s| self.leaf(s)).collect();
        Ok(partial.with_subtree(&path, Node::expanded(symbol, production as u16, children)))
    }

    /// One child per production of the leftmost unexpanded nonterminal, in
    /// grammar order. Empty when `partial` is complete.
    pub fn enumerate_children(&self, partial: &Program) -> Vec<Program> {
        match partial.leftmost_hole() {
            None => Vec::new(),
            Some(path) => {
                let symbol = partial.node(&path).symbol;
                self.rules[symbol as usize]
                    .iter()
                    .enumerate()
                    .map(|(i, rhs)| {
                        let children = rhs.iter().map(|&s| self.leaf(s)).collect();
                        partial.with_subtree(&path, Node::expanded(symbol, i as u16, children))
                    })
                    .collect()
            }
        }
    }

    /// Number of productions available at the leftmost hole, 0 if complete.
    pub fn branching(&self, partial: &Program) -> usize {
        partial.leftmost_hole().map(|p| self.rules[partial.node(&p).symbol as usize].len()).unwrap_or(0)
    }

    /// Leaf node for `symbol`: a terminal, or a hole for a nonterminal.
    pub fn leaf(&self, symbol: SymbolId) -> Node {
        if self.is_nonterminal(symbol) {
            Node::hole(symbol)
        } else {
            Node::terminal(symbol)
        }
    }

    /// Unexpanded start symbol.
    pub fn start_program(&self) -> Program {
        Program::from_root(Node::hole(self.start))
    }

    pub fn derivation_sequence(&self, program: &Program) -> Derivation {
        program.derivation()
    }

    /// Rebuilds a program by replaying `derivation` from the start symbol.
    pub fn replay(&self, derivation: &Derivation) -> Result<Program, ProgramError> {
        let mut program = self.start_program();
        for (step, &(symbol, production)) in derivation.steps().iter().enumerate() {
            let path = program.leftmost_hole().ok_or(ProgramError::Complete)?;
            let found = program.node(&path).symbol;
            if found != symbol {
                return Err(ProgramError::DerivationMismatch {
                    step,
                    expected: self.name(symbol).to_string(),
                    found: self.name(found).to_string(),
                });
            }
            program = self.expand_leftmost(&program, production as usize)?;
        }
        Ok(program)
    }

    /// Canonical s-expression form of a program.
    pub fn to_sexpr(&self, program: &Program) -> String {
        sexpr::print(self, program.root())
    }

    pub fn parse_sexpr(&self, text: &str) -> Result<Program, ProgramError> {
        sexpr::parse(self, text)
    }

    /// Renders the terminal yield of a program; holes print as their
    /// nonterminal name.
    pub fn display<'a>(&'a self, program: &'a Program) -> impl fmt::Display + 'a {
        DisplayProgram { grammar: self, program }
    }

    /// Text form accepted by [`Grammar::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut order: Vec<SymbolId> = vec![self.start];
        order.extend(self.nonterminals().filter(|&s| s != self.start));
        for nt in order {
            let alts: Vec<String> = self.rules[nt as usize]
                .iter()
                .map(|rhs| rhs.iter().map(|&s| self.name(s)).collect::<Vec<_>>().join(" "))
                .collect();
            out.push_str(&format!("{} -> {}\n", self.name(nt), alts.join(" | ")));
        }
        out
    }
}

struct DisplayProgram<'a> {
    grammar: &'a Grammar,
    program: &'a Program,
}

impl fmt::Display for DisplayProgram<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        let mut stack = vec![self.program.root()];
        while let Some(node) = stack.pop() {
            if node.is_leaf() {
                if !first {
                    f.write_str(" ")?;
                }
                first = false;
                f.write_str(self.grammar.name(node.symbol))?;
            } else {
                stack.extend(node.children.iter().rev());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Default)]
pub struct GrammarBuilder {
    names: Vec<String>,
    index: HashMap<String, SymbolId>,
    rules: Vec<(String, Vec<String>)>,
    error: Option<GrammarError>,
}

impl GrammarBuilder {
    /// Adds one production `head -> symbols`. The first head added is the
    /// start symbol.
    pub fn rule(mut self, head: &str, symbols: &[&str]) -> Self {
        if self.error.is_some() {
            return self;
        }
        if symbols.is_empty() {
            self.error = Some(GrammarError::EmptyProduction(head.to_string()));
            return self;
        }
        for name in std::iter::once(&head).chain(symbols) {
            if name.is_empty() || name.contains(['(', ')']) || name.chars().any(char::is_whitespace) {
                self.error = Some(GrammarError::InvalidSymbol(name.to_string()));
                return self;
            }
            if !self.index.contains_key(*name) {
                if self.names.len() >= SymbolId::MAX as usize {
                    self.error = Some(GrammarError::TooManySymbols);
                    return self;
                }
                self.index.insert(name.to_string(), self.names.len() as SymbolId);
                self.names.push(name.to_string());
            }
        }
        self.rules.push((head.to_string(), symbols.iter().map(|s| s.to_string()).collect()));
        self
    }

    /// Adds several alternatives for one head.
    pub fn rules(mut self, head: &str, alternatives: &[&[&str]]) -> Self {
        for alt in alternatives {
            self = self.rule(head, alt);
        }
        self
    }

    pub fn build(self) -> Result<Grammar, GrammarError> {
        if let Some(err) = self.error {
            return Err(err);
        }
        let first = self.rules.first().ok_or(GrammarError::Empty)?;
        let start = self.index[&first.0];
        let mut rules: Vec<Vec<Vec<SymbolId>>> = vec![Vec::new(); self.names.len()];
        for (head, rhs) in &self.rules {
            let h = self.index[head] as usize;
            let ids: Vec<SymbolId> = rhs.iter().map(|s| self.index[s]).collect();
            if rules[h].contains(&ids) {
                return Err(GrammarError::DuplicateProduction(head.clone()));
            }
            rules[h].push(ids);
        }

        // Fixpoint on minimal derivation heights; anything left unbounded
        // is a dead nonterminal.
        let n = self.names.len();
        let mut height = vec![u32::MAX; n];
        for (s, prods) in rules.iter().enumerate() {
            if prods.is_empty() {
                height[s] = 0;
            }
        }
        let rhs_height = |rhs: &[SymbolId], height: &[u32]| -> u32 {
            rhs.iter()
                .map(|&c| height[c as usize])
                .try_fold(0u32, |acc, h| (h != u32::MAX).then(|| acc.max(h)))
                .map_or(u32::MAX, |h| h + 1)
        };
        loop {
            let mut changed = false;
            for s in 0..n {
                for rhs in &rules[s] {
                    let h = rhs_height(rhs, &height);
                    if h < height[s] {
                        height[s] = h;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        if let Some(dead) = (0..n).find(|&s| height[s] == u32::MAX) {
            return Err(GrammarError::Dead(self.names[dead].clone()));
        }
        let shortest = (0..n)
            .map(|s| {
                rules[s]
                    .iter()
                    .enumerate()
                    .filter(|(_, rhs)| rhs_height(rhs, &height) == height[s])
                    .map(|(i, _)| i as u16)
                    .collect()
            })
            .collect();

        Ok(Grammar { names: self.names, index: self.index, rules, start, min_height: height, shortest })
    }
}

/// Two-level branching grammar used throughout the tests and examples:
///
/// ```text
/// I -> C | if B then C
/// C -> c1 | c2
/// B -> b1 | b2
/// ```
pub fn toy_grammar() -> Grammar {
    Grammar::builder()
        .rules("I", &[&["C"], &["if", "B", "then", "C"]])
        .rules("C", &[&["c1"], &["c2"]])
        .rules("B", &[&["b1"], &["b2"]])
        .build()
        .expect("toy grammar is well formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn parses_text_format() {
        let g = Grammar::parse("# toy\nI -> C | if B then C\nC -> c1 | c2  # commands\n\nB -> b1\nB -> b2\n").unwrap();
        assert_eq!(g.name(g.start()), "I");
        assert_eq!(g.nonterminals().count(), 3);
        assert_eq!(g.terminals().count(), 6);
        assert_eq!(g.productions(g.symbol("B").unwrap()).len(), 2);
        let again = Grammar::parse(&g.to_text()).unwrap();
        assert_eq!(again.to_text(), g.to_text());
    }

    #[test]
    fn rejects_malformed_grammars() {
        assert!(matches!(Grammar::parse("I C"), Err(GrammarError::Syntax { line: 1, .. })));
        assert_eq!(Grammar::parse("# nothing\n").unwrap_err(), GrammarError::Empty);
        assert!(matches!(Grammar::parse("I -> a |"), Err(GrammarError::EmptyProduction(_))));
        assert_eq!(Grammar::parse("I -> a | X\nX -> X b").unwrap_err(), GrammarError::Dead("X".into()));
        assert!(matches!(Grammar::parse("I -> a | a"), Err(GrammarError::DuplicateProduction(_))));
        assert!(matches!(Grammar::parse("I -> f(x)"), Err(GrammarError::InvalidSymbol(_))));
    }

    #[test]
    fn min_heights() {
        let g = toy_grammar();
        assert_eq!(g.min_height(g.symbol("C").unwrap()), 1);
        assert_eq!(g.min_height(g.symbol("I").unwrap()), 2);
        assert_eq!(g.min_height(g.symbol("c1").unwrap()), 0);
    }

    #[test]
    fn single_rule_grammar_always_yields_same_program() {
        let g = Grammar::parse("I -> c1").unwrap();
        let mut r = rng(3);
        for _ in 0..20 {
            let p = g.random_program(&mut r, DEFAULT_DEPTH_LIMIT);
            assert_eq!(g.display(&p).to_string(), "c1");
        }
    }

    #[test]
    fn top_level_choice_is_uniform() {
        let g = toy_grammar();
        let mut r = rng(11);
        let n = 10_000;
        let branching =
            (0..n).filter(|_| g.random_program(&mut r, DEFAULT_DEPTH_LIMIT).root().production == Some(1)).count();
        let freq = branching as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.02, "freq {freq}");
    }

    #[test]
    fn depth_limit_forces_termination() {
        // Unbounded recursion with probability 2/3 per node without the limit.
        let g = Grammar::parse("E -> E + E | E * E | x").unwrap();
        let mut r = rng(5);
        for _ in 0..200 {
            let p = g.random_program(&mut r, 6);
            assert!(p.is_complete());
            // Nodes past the limit take a shortest production, then terminals.
            assert!(p.depth() <= 6 + 1 + g.min_height(g.start()) as usize);
        }
    }

    #[test]
    fn neighbor_replaces_chosen_subtree() {
        let g = toy_grammar();
        let p = g.parse_sexpr("(I if (B b1) then (C c1))").unwrap();
        // Regenerating the C subtree into c2 gives the expected neighbor.
        let mut seen = HashSet::new();
        let mut r = rng(7);
        for _ in 0..200 {
            let q = g.neighbor(&p, &mut r, false, DEFAULT_DEPTH_LIMIT).unwrap();
            seen.insert(g.display(&q).to_string());
        }
        assert!(seen.contains("if b1 then c2"));
        assert!(seen.contains("c1") || seen.contains("c2"));
    }

    #[test]
    fn neighbor_of_single_command_is_fresh_program() {
        let g = toy_grammar();
        let p = g.parse_sexpr("(I (C c1))").unwrap();
        let mut r = rng(1);
        let mut seen = HashSet::new();
        for _ in 0..400 {
            seen.insert(g.to_sexpr(&g.neighbor(&p, &mut r, false, 15).unwrap()));
        }
        // Candidates are I and C; regenerating I reaches all six programs.
        assert_eq!(seen.len(), 6);
    }

    #[test]
    fn leaf_restricted_neighbor_only_touches_holes() {
        let g = toy_grammar();
        let partial = g.expand_leftmost(&g.start_program(), 1).unwrap();
        assert_eq!(g.display(&partial).to_string(), "if B then C");
        assert_eq!(partial.holes(), vec![vec![1], vec![3]]);
        let mut r = rng(2);
        for _ in 0..100 {
            let q = g.neighbor(&partial, &mut r, true, 15).unwrap();
            assert_eq!(q.root().production, Some(1));
            assert_eq!(q.holes().len(), 1);
            assert!(partial.is_prefix_of(&q));
        }
        let complete = g.parse_sexpr("(I (C c1))").unwrap();
        assert_eq!(g.neighbor(&complete, &mut r, true, 15).unwrap_err(), ProgramError::NoCandidate);
    }

    #[test]
    fn expand_leftmost_examples() {
        let g = toy_grammar();
        let start = g.start_program();
        let c = g.expand_leftmost(&start, 0).unwrap();
        assert_eq!(g.display(&c).to_string(), "C");
        let partial = g.expand_leftmost(&start, 1).unwrap();
        let b1 = g.expand_leftmost(&partial, 0).unwrap();
        assert_eq!(g.display(&b1).to_string(), "if b1 then C");
        // input unchanged
        assert_eq!(g.display(&partial).to_string(), "if B then C");
        assert!(matches!(g.expand_leftmost(&partial, 2), Err(ProgramError::InvalidProduction { index: 2, .. })));
        let done = g.parse_sexpr("(I (C c2))").unwrap();
        assert_eq!(g.expand_leftmost(&done, 0).unwrap_err(), ProgramError::Complete);
    }

    #[test]
    fn enumerate_children_examples() {
        let g = toy_grammar();
        let roots = g.enumerate_children(&g.start_program());
        let shown: Vec<String> = roots.iter().map(|p| g.display(p).to_string()).collect();
        assert_eq!(shown, ["C", "if B then C"]);
        let kids = g.enumerate_children(&roots[1]);
        let shown: Vec<String> = kids.iter().map(|p| g.display(p).to_string()).collect();
        assert_eq!(shown, ["if b1 then C", "if b2 then C"]);
        let done = g.parse_sexpr("(I (C c1))").unwrap();
        assert!(g.enumerate_children(&done).is_empty());
    }

    #[test]
    fn derivation_examples() {
        let g = toy_grammar();
        let p = g.parse_sexpr("(I if (B b1) then (C c1))").unwrap();
        let d = g.derivation_sequence(&p);
        let named: Vec<(String, u16)> = d.steps().iter().map(|&(s, i)| (g.name(s).to_string(), i)).collect();
        assert_eq!(named, [("I".to_string(), 1), ("B".to_string(), 0), ("C".to_string(), 0)]);
        assert!(g.derivation_sequence(&g.start_program()).is_empty());
        assert_eq!(g.replay(&d).unwrap(), p);
    }

    #[test]
    fn replay_rejects_mismatched_derivation() {
        let g = toy_grammar();
        let c = g.symbol("C").unwrap();
        let d = Derivation::new(vec![(c, 0)]);
        assert!(matches!(g.replay(&d), Err(ProgramError::DerivationMismatch { step: 0, .. })));
    }

    #[test]
    fn toy_space_has_six_programs() {
        // Breadth-first enumeration of every complete derivation.
        let g = toy_grammar();
        let mut frontier = vec![g.start_program()];
        let mut complete = Vec::new();
        while let Some(p) = frontier.pop() {
            if p.is_complete() {
                complete.push(g.display(&p).to_string());
            } else {
                frontier.extend(g.enumerate_children(&p));
            }
        }
        complete.sort();
        assert_eq!(complete, ["c1", "c2", "if b1 then c1", "if b1 then c2", "if b2 then c1", "if b2 then c2"]);
    }
}

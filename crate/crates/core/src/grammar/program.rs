use thiserror::Error;

use super::SymbolId;

/// Child-index route from the root to a node.
pub type Path = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("program has no unexpanded nonterminal")]
    Complete,
    #[error("program has no node eligible for mutation")]
    NoCandidate,
    #[error("production {index} is not valid for `{symbol}`")]
    InvalidProduction { symbol: String, index: usize },
    #[error("derivation step {step} expands `{expected}` but the leftmost hole is `{found}`")]
    DerivationMismatch { step: usize, expected: String, found: String },
    #[error("s-expression: {0}")]
    Parse(String),
}

/// One AST node. Internal nodes carry the index of the production applied
/// to their nonterminal; leaves are terminals or unexpanded nonterminals
/// (holes).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node {
    pub symbol: SymbolId,
    pub production: Option<u16>,
    pub children: Vec<Node>,
    terminal: bool,
}

impl Node {
    pub fn terminal(symbol: SymbolId) -> Self {
        Node { symbol, production: None, children: Vec::new(), terminal: true }
    }

    pub fn hole(symbol: SymbolId) -> Self {
        Node { symbol, production: None, children: Vec::new(), terminal: false }
    }

    pub fn expanded(symbol: SymbolId, production: u16, children: Vec<Node>) -> Self {
        Node { symbol, production: Some(production), children, terminal: false }
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn is_hole(&self) -> bool {
        !self.terminal && self.production.is_none()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn walk<'a>(&'a self, path: &mut Path, f: &mut impl FnMut(&Path, &'a Node)) {
        f(path, self);
        for (i, child) in self.children.iter().enumerate() {
            path.push(i);
            child.walk(path, f);
            path.pop();
        }
    }
}

/// A program as an abstract syntax tree. Values are immutable in practice:
/// every structural operation returns a new program.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Program {
    root: Node,
}

impl Program {
    pub fn from_root(root: Node) -> Self {
        Program { root }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Visits every node in depth-first pre-order.
    pub fn for_each_node<'a>(&'a self, mut f: impl FnMut(&Path, &'a Node)) {
        let mut path = Vec::new();
        self.root.walk(&mut path, &mut f);
    }

    pub fn node(&self, path: &[usize]) -> &Node {
        path.iter().fold(&self.root, |n, &i| &n.children[i])
    }

    pub fn with_subtree(&self, path: &[usize], subtree: Node) -> Program {
        let mut out = self.clone();
        let slot = path.iter().fold(&mut out.root, |n, &i| &mut n.children[i]);
        *slot = subtree;
        out
    }

    /// Paths of all unexpanded nonterminal leaves, leftmost first.
    pub fn holes(&self) -> Vec<Path> {
        let mut out = Vec::new();
        self.for_each_node(|p, n| {
            if n.is_hole() {
                out.push(p.clone());
            }
        });
        out
    }

    pub fn leftmost_hole(&self) -> Option<Path> {
        fn find(node: &Node, path: &mut Path) -> bool {
            if node.is_hole() {
                return true;
            }
            for (i, c) in node.children.iter().enumerate() {
                path.push(i);
                if find(c, path) {
                    return true;
                }
                path.pop();
            }
            false
        }
        let mut path = Vec::new();
        find(&self.root, &mut path).then_some(path)
    }

    /// Paths of every node carrying a nonterminal, expanded or not.
    pub fn nonterminal_nodes(&self) -> Vec<Path> {
        let mut out = Vec::new();
        self.for_each_node(|p, n| {
            if !n.is_terminal() {
                out.push(p.clone());
            }
        });
        out
    }

    pub fn is_complete(&self) -> bool {
        self.leftmost_hole().is_none()
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.for_each_node(|_, _| n += 1);
        n
    }

    /// Number of applied productions.
    pub fn internal_count(&self) -> usize {
        let mut n = 0;
        self.for_each_node(|_, node| n += usize::from(node.production.is_some()));
        n
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn go(n: &Node) -> usize {
            1 + n.children.iter().map(go).max().unwrap_or(0)
        }
        go(&self.root)
    }

    /// Applied productions in leftmost (pre-order) derivation order.
    pub fn derivation(&self) -> Derivation {
        let mut steps = Vec::new();
        self.for_each_node(|_, n| {
            if let Some(p) = n.production {
                steps.push((n.symbol, p));
            }
        });
        Derivation { steps }
    }

    /// True when `other` agrees with every expansion made in `self`; holes of
    /// `self` may be filled arbitrarily in `other`.
    pub fn is_prefix_of(&self, other: &Program) -> bool {
        fn go(a: &Node, b: &Node) -> bool {
            if a.symbol != b.symbol {
                return false;
            }
            if a.is_hole() {
                return !b.is_terminal();
            }
            a.production == b.production
                && a.children.len() == b.children.len()
                && a.children.iter().zip(&b.children).all(|(x, y)| go(x, y))
        }
        go(&self.root, &other.root)
    }
}

/// Leftmost sequence of `(nonterminal, production index)` applications.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Derivation {
    steps: Vec<(SymbolId, u16)>,
}

impl Derivation {
    pub fn new(steps: Vec<(SymbolId, u16)>) -> Self {
        Derivation { steps }
    }

    pub fn steps(&self) -> &[(SymbolId, u16)] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

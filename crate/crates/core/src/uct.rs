//! UCT over leftmost derivations: every tree node is a partial program and
//! its children are the expansions of its leftmost hole.

use std::collections::HashMap;
use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::evaluation::{DataSet, MatchPool};
use crate::grammar::{Derivation, Grammar, Program};
use crate::rng::{self, StreamRng};
use crate::sa::{sa_run, SaConfig, Start};
use crate::search::{Budget, BudgetClock, Evaluation};
use crate::sketch::{run_pipeline, PhaseSearch, PipelineConfig, PipelineOutcome};
use crate::strategy::Strategy;
use crate::trajectory::{Observation, Recorder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UctConfig {
    /// Exploration constant.
    pub k: f64,
    /// Annealing run used as the simulation policy.
    pub rollout: SaConfig,
}

impl Default for UctConfig {
    fn default() -> Self {
        UctConfig { k: 10.0, rollout: SaConfig { max_iterations: Some(200), ..SaConfig::default() } }
    }
}

impl UctConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !self.k.is_finite() || self.k < 0.0 {
            return Err(Error::contract(format!("exploration constant must be >= 0, got {}", self.k)));
        }
        self.rollout.validate()
    }
}

/// Child to descend into: the first unvisited child if there is one,
/// otherwise the maximizer of `mean + k * sqrt(ln N / n)` (first on ties),
/// where `N` is the total visit count.
pub fn select_child(visits: &[u64], means: &[f64], k: f64) -> Result<usize, Error> {
    if visits.is_empty() || visits.len() != means.len() {
        return Err(Error::contract("selection needs a node with children"));
    }
    if let Some(j) = visits.iter().position(|&n| n == 0) {
        return Ok(j);
    }
    let ln_total = (visits.iter().sum::<u64>() as f64).ln();
    let mut best = (0, f64::NEG_INFINITY);
    for (j, (&n, &mean)) in visits.iter().zip(means).enumerate() {
        let ucb = mean + k * (ln_total / n as f64).sqrt();
        if ucb > best.1 {
            best = (j, ucb);
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone)]
pub struct UctNode {
    pub program: Program,
    /// Tree index of each expanded child, by production order.
    pub children: Vec<Option<usize>>,
    pub child_visits: Vec<u64>,
    pub child_means: Vec<f64>,
    depth: usize,
}

impl UctNode {
    /// Total visits through this node; equals the sum of child visits.
    pub fn visits(&self) -> u64 {
        self.child_visits.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TreeStats {
    pub iterations: u64,
    pub nodes: usize,
    pub max_depth: usize,
    pub cache_hits: u64,
    pub evaluations: u64,
}

/// Search state: the tree, the value cache, and the incumbent.
pub struct UctSearch<'g> {
    grammar: &'g Grammar,
    config: UctConfig,
    nodes: Vec<UctNode>,
    cache: HashMap<Program, Evaluation>,
    stats: TreeStats,
    best: Option<(Program, Evaluation)>,
}

/// Value a simulation contributes to the tree.
fn reward(e: &Evaluation) -> f64 {
    if e.score.is_finite() {
        e.score
    } else {
        0.0
    }
}

impl<'g> UctSearch<'g> {
    pub fn new(grammar: &'g Grammar, config: UctConfig) -> Self {
        let mut s = UctSearch {
            grammar,
            config,
            nodes: Vec::new(),
            cache: HashMap::new(),
            stats: TreeStats::default(),
            best: None,
        };
        s.add_node(grammar.start_program(), 0);
        s
    }

    fn add_node(&mut self, program: Program, depth: usize) -> usize {
        let n = self.grammar.branching(&program);
        self.nodes.push(UctNode {
            program,
            children: vec![None; n],
            child_visits: vec![0; n],
            child_means: vec![0.0; n],
            depth,
        });
        self.stats.nodes = self.nodes.len();
        self.stats.max_depth = self.stats.max_depth.max(depth);
        self.nodes.len() - 1
    }

    pub fn root(&self) -> &UctNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[UctNode] {
        &self.nodes
    }

    pub fn stats(&self) -> TreeStats {
        self.stats
    }

    pub fn best(&self) -> Option<&(Program, Evaluation)> {
        self.best.as_ref()
    }

    fn expand(&mut self, parent: usize, j: usize) -> usize {
        let child = self
            .grammar
            .expand_leftmost(&self.nodes[parent].program, j)
            .expect("child index comes from the production list");
        let depth = self.nodes[parent].depth + 1;
        let id = self.add_node(child, depth);
        self.nodes[parent].children[j] = Some(id);
        id
    }

    fn backpropagate(&mut self, path: &[(usize, usize)], value: f64) {
        for &(node, j) in path {
            let n = &mut self.nodes[node];
            n.child_visits[j] += 1;
            n.child_means[j] += (value - n.child_means[j]) / n.child_visits[j] as f64;
        }
    }

    fn offer(&mut self, program: &Program, e: Evaluation) {
        if self.best.as_ref().is_none_or(|b| e.score > b.1.score) {
            self.best = Some((program.clone(), e));
        }
    }

    fn evaluate(&mut self, program: &Program, eval: &mut dyn FnMut(&Program) -> Evaluation) -> Evaluation {
        if let Some(e) = self.cache.get(program) {
            self.stats.cache_hits += 1;
            return *e;
        }
        let e = eval(program);
        self.stats.evaluations += 1;
        self.cache.insert(program.clone(), e);
        self.offer(program, e);
        e
    }

    /// Pre-builds the nodes along `derivation` and backs `value` up along
    /// them once.
    pub fn init_branch(&mut self, derivation: &Derivation, value: Evaluation) -> Result<(), Error> {
        let program = self.grammar.replay(derivation)?;
        let mut node = 0;
        let mut path = Vec::new();
        for &(_, production) in derivation.steps() {
            let j = production as usize;
            let child = match self.nodes[node].children.get(j) {
                Some(Some(c)) => *c,
                Some(None) => self.expand(node, j),
                None => return Err(Error::contract("branch does not follow the tree")),
            };
            path.push((node, j));
            node = child;
        }
        if program.is_complete() {
            self.cache.insert(program.clone(), value);
            self.offer(&program, value);
        }
        self.backpropagate(&path, reward(&value));
        Ok(())
    }

    /// Completes `partial` at random and anneals only inside its holes.
    pub fn simulate<R: Rng + ?Sized>(
        &mut self,
        partial: &Program,
        eval: &mut dyn FnMut(&Program) -> Evaluation,
        rng: &mut R,
        clock: &BudgetClock,
    ) -> (Program, Evaluation) {
        if partial.is_complete() {
            let e = self.evaluate(partial, eval);
            return (partial.clone(), e);
        }
        let config = self.config.rollout;
        let grammar = self.grammar;
        let mut nested = clock.nested();
        let mut cached = |p: &Program| self.evaluate(p, eval);
        let start = Start { program: Some(partial), evaluation: None, leaf_restricted: true };
        let run = sa_run(grammar, &config, start, &mut cached, rng, &mut nested, None);
        (run.best, run.best_eval)
    }

    /// One selection, expansion, simulation and backpropagation pass.
    pub fn iterate<R: Rng + ?Sized>(
        &mut self,
        eval: &mut dyn FnMut(&Program) -> Evaluation,
        rng: &mut R,
        clock: &BudgetClock,
    ) -> (Program, Evaluation) {
        let mut node = 0;
        let mut path = Vec::new();
        while !self.nodes[node].children.is_empty() {
            let n = &self.nodes[node];
            let j = select_child(&n.child_visits, &n.child_means, self.config.k).expect("internal node has children");
            path.push((node, j));
            match n.children[j] {
                Some(child) => node = child,
                None => {
                    node = self.expand(node, j);
                    break;
                }
            }
        }
        let partial = self.nodes[node].program.clone();
        let (program, e) = self.simulate(&partial, eval, rng, clock);
        self.backpropagate(&path, reward(&e));
        self.stats.iterations += 1;
        (program, e)
    }

    /// Checks visit-count conservation: each expanded node is entered from
    /// its parent as often as it passes visits on to its own children, plus
    /// at most once for the simulation run when it was expanded.
    pub fn check_conservation(&self) -> Result<(), String> {
        let mut incoming = vec![0u64; self.nodes.len()];
        for n in &self.nodes {
            for (c, &v) in n.children.iter().zip(&n.child_visits) {
                match c {
                    Some(c) => incoming[*c] = v,
                    None if v > 0 => return Err("visited child was never expanded".into()),
                    None => {}
                }
            }
            if n.child_means.iter().any(|m| !(0.0..=1.0).contains(m)) {
                return Err("mean outside [0, 1]".into());
            }
        }
        for (i, n) in self.nodes.iter().enumerate().skip(1) {
            if n.children.is_empty() {
                continue;
            }
            let below = n.visits();
            if !(below..=below + 1).contains(&incoming[i]) {
                return Err(format!("node {i}: entered {} times, {below} visits below", incoming[i]));
            }
        }
        Ok(())
    }
}

/// Outcome of [`uct_search`].
#[derive(Debug, Clone)]
pub struct UctRun {
    pub best: Program,
    pub best_eval: Evaluation,
    pub stats: TreeStats,
}

/// Runs UCT until the clock runs out and returns the best program evaluated.
/// With `initial_branch`, the tree starts with that derivation's nodes and
/// one backpropagation of the given value.
pub fn uct_search<R: Rng + ?Sized>(
    grammar: &Grammar,
    config: &UctConfig,
    initial_branch: Option<(&Derivation, Evaluation)>,
    eval: &mut dyn FnMut(&Program) -> Evaluation,
    rng: &mut R,
    clock: &mut BudgetClock,
    mut recorder: Option<&mut Recorder>,
) -> Result<UctRun, Error> {
    let mut search = UctSearch::new(grammar, *config);
    if let Some((d, v)) = initial_branch {
        search.init_branch(d, v)?;
    }
    loop {
        if clock.exhausted() && search.best.is_some() {
            break;
        }
        let (program, e) = search.iterate(eval, rng, clock);
        clock.tick();
        if let Some(r) = recorder.as_deref_mut() {
            let obs = Observation {
                temperature: None,
                c_score: e.c_score,
                psi_score: e.psi,
                program_len: program.size(),
                accepted: false,
            };
            let best = &search.best;
            r.log(obs, || best.as_ref().map(|b| grammar.to_sexpr(&b.0)).unwrap_or_default());
        }
    }
    let (best, best_eval) = search.best.clone().expect("at least one evaluation");
    Ok(UctRun { best, best_eval, stats: search.stats })
}

/// UCT as one pipeline phase; a seed program becomes the initial branch.
pub struct UctPhase<'g> {
    pub grammar: &'g Grammar,
    pub config: UctConfig,
    pub rng: StreamRng,
    pub cancel: Option<Arc<AtomicBool>>,
    /// Tree statistics of each phase run so far.
    pub phase_stats: Vec<TreeStats>,
}

impl PhaseSearch for UctPhase<'_> {
    fn run_phase(
        &mut self,
        eval: &mut dyn FnMut(&Program) -> Evaluation,
        budget: Budget,
        seed: Option<(Program, Evaluation)>,
        recorder: &mut Recorder,
    ) -> Result<(Program, Evaluation), Error> {
        let mut clock = budget.start().with_cancel(self.cancel.clone());
        let derivation = seed.as_ref().map(|(p, _)| p.derivation());
        let branch = derivation.as_ref().zip(seed.as_ref().map(|s| s.1));
        let run = uct_search(self.grammar, &self.config, branch, eval, &mut self.rng, &mut clock, Some(recorder))?;
        self.phase_stats.push(run.stats);
        Ok((run.best, run.best_eval))
    }
}

/// Sketch pipelines driven by UCT.
#[allow(clippy::too_many_arguments)]
pub fn sketch_uct(
    grammar: &Grammar,
    config: &UctConfig,
    pipeline: &PipelineConfig,
    data: &DataSet,
    opponent: &dyn Strategy,
    pool: &MatchPool,
    seed: u64,
    recorder: &mut Recorder,
) -> Result<PipelineOutcome, Error> {
    config.validate()?;
    let mut phase =
        UctPhase { grammar, config: *config, rng: rng::stream(seed), cancel: None, phase_stats: Vec::new() };
    run_pipeline(&mut phase, data, opponent, pool, pipeline, recorder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::toy_grammar;
    use crate::rng;
    use crate::search::Budget;

    #[test]
    fn ucb_selection_formula() {
        assert_eq!(select_child(&[10, 1], &[0.6, 0.4], 10.0).unwrap(), 1);
        let a = 0.6 + 10.0 * (11f64.ln() / 10.0).sqrt();
        let b = 0.4 + 10.0 * 11f64.ln().sqrt();
        assert!((a - 5.50).abs() < 0.01 && (b - 15.89).abs() < 0.01);
        assert_eq!(select_child(&[3, 0, 0], &[0.9, 0.0, 0.0], 10.0).unwrap(), 1);
        assert_eq!(select_child(&[1, 10], &[0.2, 0.3], 0.0).unwrap(), 1);
        assert_eq!(select_child(&[4, 4], &[0.5, 0.5], 1.0).unwrap(), 0);
        assert!(select_child(&[], &[], 1.0).is_err());
    }

    #[test]
    fn branch_initialization_builds_the_derivation() {
        let g = toy_grammar();
        let target = g.parse_sexpr("(I if (B b1) then (C c1))").unwrap();
        let mut s = UctSearch::new(&g, UctConfig::default());
        s.init_branch(&target.derivation(), Evaluation::plain(0.7)).unwrap();
        let shown: Vec<String> = s.nodes().iter().map(|n| g.display(&n.program).to_string()).collect();
        assert_eq!(shown, ["I", "if B then C", "if b1 then C", "if b1 then c1"]);
        for n in &s.nodes()[..3] {
            assert_eq!(n.visits(), 1);
            let j = n.child_visits.iter().position(|&v| v == 1).unwrap();
            assert_eq!(n.child_means[j], 0.7);
        }
        s.check_conservation().unwrap();
    }

    #[test]
    fn complete_program_is_evaluated_once() {
        let g = toy_grammar();
        let mut calls = HashMap::new();
        let mut eval = |p: &Program| {
            *calls.entry(p.clone()).or_insert(0) += 1;
            Evaluation::plain(0.5)
        };
        let mut clock = Budget::Iterations(200).start();
        let run =
            uct_search(&g, &UctConfig::default(), None, &mut eval, &mut rng::stream(4), &mut clock, None).unwrap();
        assert!(calls.values().all(|&c| c == 1));
        assert_eq!(calls.len(), 6);
        assert!(run.stats.cache_hits > 0);
        assert_eq!(run.stats.iterations, 200);
    }
}

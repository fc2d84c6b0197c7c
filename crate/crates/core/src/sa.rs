//! Simulated annealing over programs.

use std::sync::atomic::AtomicBool;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::evaluation::{DataSet, MatchPool};
use crate::grammar::{Grammar, Program, DEFAULT_DEPTH_LIMIT};
use crate::rng::{self, StreamRng};
use crate::search::{Budget, BudgetClock, Evaluation};
use crate::sketch::{run_pipeline, PhaseSearch, PipelineConfig, PipelineOutcome};
use crate::strategy::Strategy;
use crate::trajectory::{Observation, Recorder};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaConfig {
    /// Schedule rate.
    pub alpha: f64,
    /// Greed coefficient.
    pub beta: f64,
    pub t_initial: f64,
    /// A run stops once the temperature drops below this.
    pub epsilon: f64,
    pub depth_limit: u32,
    /// Optional cap on iterations per run.
    pub max_iterations: Option<u64>,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            alpha: 0.9,
            beta: 200.0,
            t_initial: 100.0,
            epsilon: 1.0,
            depth_limit: DEFAULT_DEPTH_LIMIT,
            max_iterations: None,
        }
    }
}

impl SaConfig {
    pub fn validate(&self) -> Result<(), Error> {
        let ok = self.alpha > 0.0
            && self.beta > 0.0
            && self.epsilon > 0.0
            && self.t_initial > self.epsilon
            && self.alpha.is_finite()
            && self.beta.is_finite()
            && self.t_initial.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::contract(format!(
                "annealing needs alpha > 0, beta > 0 and t_initial > epsilon > 0, got {self:?}"
            )))
        }
    }

    /// Iterations in one uncapped run.
    pub fn run_length(&self) -> u64 {
        let mut j = 0;
        while temperature(self.t_initial, self.alpha, j) >= self.epsilon {
            j += 1;
        }
        self.max_iterations.map_or(j, |m| j.min(m))
    }
}

/// `min(1, exp(beta * (candidate - current) / temperature))`.
pub fn accept_probability(current: f64, candidate: f64, temperature: f64, beta: f64) -> Result<f64, Error> {
    if temperature.is_nan() || temperature <= 0.0 {
        return Err(Error::contract(format!("temperature must be positive, got {temperature}")));
    }
    Ok(acceptance(current, candidate, temperature, beta))
}

/// Acceptance with faulted (negative infinite) scores: a faulted candidate
/// is never accepted over a valid one, and anything replaces a fault.
fn acceptance(current: f64, candidate: f64, temperature: f64, beta: f64) -> f64 {
    if candidate >= current {
        1.0
    } else if candidate == f64::NEG_INFINITY {
        0.0
    } else {
        (beta * (candidate - current) / temperature).exp().min(1.0)
    }
}

/// Temperature at iteration `j`, counting from 0.
pub fn temperature(t_initial: f64, alpha: f64, j: u64) -> f64 {
    t_initial / (1.0 + alpha * j as f64)
}

/// Where a run starts.
#[derive(Debug, Clone, Copy, Default)]
pub struct Start<'a> {
    /// Starting program; holes are filled at random. `None` draws a fresh
    /// random program.
    pub program: Option<&'a Program>,
    /// Known value of `program`, which then is not re-evaluated.
    pub evaluation: Option<Evaluation>,
    /// Only regenerate the subtrees at the holes of `program`, keeping its
    /// expanded part fixed.
    pub leaf_restricted: bool,
}

#[derive(Debug, Clone)]
pub struct SaRun {
    pub best: Program,
    pub best_eval: Evaluation,
    /// Candidates evaluated, the starting program included.
    pub evaluations: u64,
    pub accepted: u64,
}

/// One annealing run: starts from `start`, proposes neighbors until the
/// temperature drops below epsilon or the clock runs out, and returns the
/// best program evaluated.
pub fn sa_run<R: Rng + ?Sized>(
    grammar: &Grammar,
    config: &SaConfig,
    start: Start<'_>,
    eval: &mut dyn FnMut(&Program) -> Evaluation,
    rng: &mut R,
    clock: &mut BudgetClock,
    mut recorder: Option<&mut Recorder>,
) -> SaRun {
    let limit = config.depth_limit;
    let holes = match (start.program, start.leaf_restricted) {
        (Some(p), true) => p.holes(),
        _ => Vec::new(),
    };
    let mut current = match start.program {
        Some(p) if p.is_complete() => p.clone(),
        Some(p) => grammar.complete(p, rng, limit),
        None => grammar.random_program(rng, limit),
    };
    let mut evaluations = 0;
    let mut current_eval = match (start.evaluation, start.program.is_some_and(Program::is_complete)) {
        (Some(e), true) => e,
        _ => {
            let e = eval(&current);
            clock.tick();
            evaluations += 1;
            if let Some(r) = recorder.as_deref_mut() {
                r.log(observation(None, &e, &current, false), || grammar.to_sexpr(&current));
            }
            e
        }
    };
    let mut best = current.clone();
    let mut best_eval = current_eval;
    let mut accepted = 0;
    let restricted = start.leaf_restricted;
    if restricted && holes.is_empty() {
        return SaRun { best, best_eval, evaluations, accepted };
    }
    let mut j = 0u64;
    loop {
        let t = temperature(config.t_initial, config.alpha, j);
        if t < config.epsilon || clock.exhausted() || config.max_iterations.is_some_and(|m| j >= m) {
            break;
        }
        let candidate = if restricted {
            let path = &holes[rng.random_range(0..holes.len())];
            grammar.regenerate(&current, path, rng, limit)
        } else {
            grammar.neighbor(&current, rng, false, limit).expect("complete programs have a root to mutate")
        };
        let e = eval(&candidate);
        clock.tick();
        evaluations += 1;
        let p = acceptance(current_eval.score, e.score, t, config.beta);
        let take = p >= 1.0 || rng.random::<f64>() < p;
        if e.score > best_eval.score {
            best = candidate.clone();
            best_eval = e;
        }
        if let Some(r) = recorder.as_deref_mut() {
            r.log(observation(Some(t), &e, &candidate, take), || grammar.to_sexpr(&best));
        }
        if take {
            current = candidate;
            current_eval = e;
            accepted += 1;
        }
        j += 1;
    }
    SaRun { best, best_eval, evaluations, accepted }
}

fn observation(t: Option<f64>, e: &Evaluation, p: &Program, accepted: bool) -> Observation {
    Observation { temperature: t, c_score: e.c_score, psi_score: e.psi, program_len: p.size(), accepted }
}

/// Repeats [`sa_run`] until the clock runs out, seeding each run with the
/// previous run's result. Returns the best program over all runs.
pub fn sa_restarting<R: Rng + ?Sized>(
    grammar: &Grammar,
    config: &SaConfig,
    initial: Option<(Program, Evaluation)>,
    eval: &mut dyn FnMut(&Program) -> Evaluation,
    rng: &mut R,
    clock: &mut BudgetClock,
    mut recorder: Option<&mut Recorder>,
) -> SaRun {
    let mut seed = initial;
    let mut overall: Option<SaRun> = None;
    loop {
        let start = Start {
            program: seed.as_ref().map(|s| &s.0),
            evaluation: seed.as_ref().map(|s| s.1),
            leaf_restricted: false,
        };
        let run = sa_run(grammar, config, start, eval, rng, clock, recorder.as_deref_mut());
        let progressed = run.evaluations > 0;
        seed = Some((run.best.clone(), run.best_eval));
        overall = Some(match overall {
            Some(mut o) => {
                o.evaluations += run.evaluations;
                o.accepted += run.accepted;
                if run.best_eval.score > o.best_eval.score {
                    o.best = run.best;
                    o.best_eval = run.best_eval;
                }
                o
            }
            None => run,
        });
        if clock.exhausted() || !progressed {
            break;
        }
    }
    overall.expect("at least one run")
}

/// Annealing with restarts as one pipeline phase.
pub struct SaPhase<'g> {
    pub grammar: &'g Grammar,
    pub config: SaConfig,
    pub rng: StreamRng,
    pub cancel: Option<Arc<AtomicBool>>,
}

impl PhaseSearch for SaPhase<'_> {
    fn run_phase(
        &mut self,
        eval: &mut dyn FnMut(&Program) -> Evaluation,
        budget: Budget,
        seed: Option<(Program, Evaluation)>,
        recorder: &mut Recorder,
    ) -> Result<(Program, Evaluation), Error> {
        let mut clock = budget.start().with_cancel(self.cancel.clone());
        let run = sa_restarting(self.grammar, &self.config, seed, eval, &mut self.rng, &mut clock, Some(recorder));
        Ok((run.best, run.best_eval))
    }
}

/// Sketch pipelines driven by simulated annealing.
#[allow(clippy::too_many_arguments)]
pub fn sketch_sa(
    grammar: &Grammar,
    config: &SaConfig,
    pipeline: &PipelineConfig,
    data: &DataSet,
    opponent: &dyn Strategy,
    pool: &MatchPool,
    seed: u64,
    recorder: &mut Recorder,
) -> Result<PipelineOutcome, Error> {
    config.validate()?;
    let mut phase = SaPhase { grammar, config: *config, rng: rng::stream(seed), cancel: None };
    run_pipeline(&mut phase, data, opponent, pool, pipeline, recorder)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::toy_grammar;
    use crate::rng;
    use crate::search::Budget;

    #[test]
    fn closed_form_acceptance() {
        assert_eq!(accept_probability(0.5, 0.7, 100.0, 200.0).unwrap(), 1.0);
        assert_eq!(accept_probability(0.5, 0.5, 1.0, 200.0).unwrap(), 1.0);
        let p = accept_probability(0.5, 0.49, 100.0, 200.0).unwrap();
        assert!((p - (-0.02f64).exp()).abs() < 1e-12);
        assert!((p - 0.98020).abs() < 1e-5);
        assert!(accept_probability(1.0, 0.0, 1.0, 200.0).unwrap() < 1e-80);
        assert!(accept_probability(0.0, 1.0, 0.0, 200.0).unwrap_err().is_contract_violation());
        assert!(accept_probability(0.0, 1.0, -1.0, 200.0).is_err());
    }

    #[test]
    fn schedule() {
        assert_eq!(temperature(100.0, 0.9, 0), 100.0);
        assert!((temperature(100.0, 0.9, 10) - 10.0).abs() < 1e-12);
        assert_eq!(SaConfig::default().run_length(), 111);
    }

    #[test]
    fn config_validation() {
        assert!(SaConfig::default().validate().is_ok());
        assert!(SaConfig { alpha: -1.0, ..SaConfig::default() }.validate().is_err());
        assert!(SaConfig { epsilon: 200.0, ..SaConfig::default() }.validate().is_err());
    }

    #[test]
    fn faulted_candidates_never_replace_valid_ones() {
        assert_eq!(acceptance(0.1, f64::NEG_INFINITY, 100.0, 200.0), 0.0);
        assert_eq!(acceptance(f64::NEG_INFINITY, 0.0, 100.0, 200.0), 1.0);
        assert_eq!(acceptance(f64::NEG_INFINITY, f64::NEG_INFINITY, 100.0, 200.0), 1.0);
    }

    #[test]
    fn run_returns_best_evaluated() {
        let g = toy_grammar();
        let mut seen = Vec::new();
        let mut eval = |p: &Program| {
            let s = (p.size() as f64) / 10.0;
            seen.push(s);
            Evaluation::plain(s)
        };
        let mut r = rng::stream(1);
        let mut clock = Budget::Iterations(1000).start();
        let run = sa_run(&g, &SaConfig::default(), Start::default(), &mut eval, &mut r, &mut clock, None);
        let max = seen.iter().cloned().fold(f64::MIN, f64::max);
        assert_eq!(run.best_eval.score, max);
        assert_eq!(run.evaluations, 112);
    }

    #[test]
    fn leaf_restricted_keeps_prefix() {
        let g = toy_grammar();
        let partial = g.expand_leftmost(&g.start_program(), 1).unwrap();
        let mut eval = |p: &Program| {
            assert!(partial.is_prefix_of(p));
            Evaluation::plain(0.0)
        };
        let mut r = rng::stream(2);
        let mut clock = Budget::Iterations(1000).start();
        let start = Start { program: Some(&partial), evaluation: None, leaf_restricted: true };
        let run = sa_run(&g, &SaConfig::default(), start, &mut eval, &mut r, &mut clock, None);
        assert!(partial.is_prefix_of(&run.best));
    }

    #[test]
    fn restarts_respect_iteration_budget() {
        let g = toy_grammar();
        let mut eval = |_: &Program| Evaluation::plain(0.5);
        let mut r = rng::stream(3);
        let mut clock = Budget::Iterations(300).start();
        let run = sa_restarting(&g, &SaConfig::default(), None, &mut eval, &mut r, &mut clock, None);
        assert_eq!(run.evaluations, 300);
        assert_eq!(run.best_eval.score, 0.5);
    }
}

//! Two-phase synthesis: a sketch search on a behavioral-cloning score,
//! followed by a best-response search on win rate seeded with the sketch.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cloning::{clone_score, CloneMetric};
use crate::dsl::{DifficultyRule, ProgramStrategy, StrategyPair};
use crate::error::Error;
use crate::evaluation::{DataSet, MatchPool};
use crate::grammar::Program;
use crate::search::{Budget, Evaluation};
use crate::strategy::Strategy;
use crate::trajectory::Recorder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "metric")]
pub enum Mode {
    /// Search on win rate alone from a random program.
    Baseline,
    /// Cloning phase, then win-rate phase seeded with its result.
    Sketch(CloneMetric),
    /// Cloning phase only.
    BcOnly(CloneMetric),
    /// One phase ordering candidates by win rate, then cloning score.
    Lexicographic(CloneMetric),
}

impl Mode {
    pub fn metric(self) -> Option<CloneMetric> {
        match self {
            Mode::Baseline => None,
            Mode::Sketch(m) | Mode::BcOnly(m) | Mode::Lexicographic(m) => Some(m),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = |m: &CloneMetric| match m {
            CloneMetric::Action => "a",
            CloneMetric::Observation => "o",
        };
        match self {
            Mode::Baseline => f.write_str("baseline"),
            Mode::Sketch(m) => write!(f, "sketch-{}", suffix(m)),
            Mode::BcOnly(m) => write!(f, "bc-only-{}", suffix(m)),
            Mode::Lexicographic(m) => write!(f, "lexi-{}", suffix(m)),
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    /// Accepts `baseline`, `sketch-a`, `sketch-o`, `bc-only[-a|-o]` and
    /// `lexi[-a|-o]`; the metric defaults to observation.
    fn from_str(s: &str) -> Result<Self, String> {
        let (base, metric) = match s.rsplit_once('-') {
            Some((b, "a")) => (b, CloneMetric::Action),
            Some((b, "o")) => (b, CloneMetric::Observation),
            _ => (s, CloneMetric::Observation),
        };
        match base {
            "baseline" if base == s => Ok(Mode::Baseline),
            "sketch" if base != s => Ok(Mode::Sketch(metric)),
            "bc-only" => Ok(Mode::BcOnly(metric)),
            "lexi" => Ok(Mode::Lexicographic(metric)),
            _ => Err(format!("unknown mode `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub sketch_budget: Budget,
    pub br_budget: Budget,
    /// Matches behind each win-rate check of a cloning incumbent.
    pub sketch_psi_matches: u64,
    /// Matches behind each win-rate evaluation in the best-response phase.
    pub psi_matches: u64,
    /// Base seed of the evaluation matches; all candidates face the same
    /// dice.
    pub psi_seed: u64,
    pub difficulty: DifficultyRule,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::Sketch(CloneMetric::Observation),
            sketch_budget: Budget::Seconds(3600.0),
            br_budget: Budget::Seconds(3600.0),
            sketch_psi_matches: 200,
            psi_matches: 1000,
            psi_seed: 0x5EED,
            difficulty: DifficultyRule::default(),
        }
    }
}

/// Runs one search phase: maximize `eval` within `budget`, optionally
/// starting from a seed program with a known value.
pub trait PhaseSearch {
    fn run_phase(
        &mut self,
        eval: &mut dyn FnMut(&Program) -> Evaluation,
        budget: Budget,
        seed: Option<(Program, Evaluation)>,
        recorder: &mut Recorder,
    ) -> Result<(Program, Evaluation), Error>;
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    /// Program returned by the pipeline.
    pub best: Program,
    /// Its win rate over `psi_matches` matches.
    pub best_psi: f64,
    /// Best program of the cloning phase and its cloning score.
    pub sketch: Option<(Program, f64)>,
    /// Program that seeded the best-response phase.
    pub seed: Option<Program>,
}

/// Objective pieces shared by all modes.
struct Scorer<'a> {
    data: &'a DataSet,
    opponent: &'a dyn Strategy,
    pool: &'a MatchPool,
    config: &'a PipelineConfig,
}

impl Scorer<'_> {
    fn strategy(&self, program: &Program) -> Option<ProgramStrategy> {
        let pair = StrategyPair::from_program(program.clone()).ok()?;
        Some(ProgramStrategy::with_difficulty(pair, self.config.difficulty))
    }

    fn psi(&self, program: &Program, matches: u64) -> Option<f64> {
        let s = self.strategy(program)?;
        self.pool.psi(&s, self.opponent, matches, self.config.psi_seed).ok().map(|r| r.rate())
    }

    fn clone_value(&self, metric: CloneMetric, program: &Program) -> Option<f64> {
        let s = self.strategy(program)?;
        clone_score(metric, self.data, &s).ok().map(|c| c.value)
    }

    fn psi_eval(&self, program: &Program) -> Evaluation {
        match self.psi(program, self.config.psi_matches) {
            Some(p) => Evaluation { score: p, c_score: None, psi: Some(p) },
            None => Evaluation::fault(),
        }
    }
}

/// Runs the pipeline selected by `config.mode` on top of a phase search.
pub fn run_pipeline(
    search: &mut dyn PhaseSearch,
    data: &DataSet,
    opponent: &dyn Strategy,
    pool: &MatchPool,
    config: &PipelineConfig,
    recorder: &mut Recorder,
) -> Result<PipelineOutcome, Error> {
    if config.psi_matches == 0 || config.sketch_psi_matches == 0 {
        return Err(Error::contract("win-rate evaluations need at least one match"));
    }
    if config.mode.metric().is_some() && data.pair_count() == 0 {
        return Err(Error::contract("cloning modes need a non-empty dataset"));
    }
    let scorer = Scorer { data, opponent, pool, config };
    let total = config.sketch_budget.combined(config.br_budget);
    match config.mode {
        Mode::Baseline => {
            recorder.set_phase("br");
            let (best, e) = search.run_phase(&mut |p| scorer.psi_eval(p), total, None, recorder)?;
            Ok(PipelineOutcome { best, best_psi: e.score, sketch: None, seed: None })
        }
        Mode::Lexicographic(metric) => {
            recorder.set_phase("lexi");
            let weight = 1.0 / (config.psi_matches as f64 + 1.0);
            let mut eval = |p: &Program| match (scorer.psi(p, config.psi_matches), scorer.clone_value(metric, p)) {
                (Some(psi), Some(c)) => Evaluation { score: psi + c * weight, c_score: Some(c), psi: Some(psi) },
                _ => Evaluation::fault(),
            };
            let (best, e) = search.run_phase(&mut eval, total, None, recorder)?;
            let best_psi = e.psi.unwrap_or(0.0);
            Ok(PipelineOutcome { best, best_psi, sketch: None, seed: None })
        }
        Mode::Sketch(metric) | Mode::BcOnly(metric) => {
            let bc_only = matches!(config.mode, Mode::BcOnly(_));
            recorder.set_phase("sketch");
            let mut best_c = f64::NEG_INFINITY;
            let mut best_psi: Option<(Program, f64)> = None;
            let mut eval = |p: &Program| {
                let Some(c) = scorer.clone_value(metric, p) else {
                    return Evaluation::fault();
                };
                let mut e = Evaluation { score: c, c_score: Some(c), psi: None };
                if c > best_c && !bc_only {
                    best_c = c;
                    e.psi = scorer.psi(p, config.sketch_psi_matches);
                    if let Some(psi) = e.psi {
                        if best_psi.as_ref().is_none_or(|b| psi > b.1) {
                            best_psi = Some((p.clone(), psi));
                        }
                    }
                }
                e
            };
            let budget = if bc_only { total } else { config.sketch_budget };
            let (c_best, c_eval) = search.run_phase(&mut eval, budget, None, recorder)?;
            let sketch = Some((c_best.clone(), c_eval.score));
            if bc_only {
                let best_psi = scorer.psi(&c_best, config.psi_matches).unwrap_or(0.0);
                return Ok(PipelineOutcome { best: c_best, best_psi, sketch, seed: None });
            }
            let seed = match best_psi {
                Some((p, psi)) if psi > 0.0 => p,
                _ => c_best,
            };
            let seed_eval = scorer.psi_eval(&seed);
            recorder.set_phase("br");
            let (best, e) = search.run_phase(
                &mut |p| scorer.psi_eval(p),
                config.br_budget,
                Some((seed.clone(), seed_eval)),
                recorder,
            )?;
            let (best, best_psi) =
                if e.score >= seed_eval.score { (best, e.score) } else { (seed.clone(), seed_eval.score) };
            Ok(PipelineOutcome { best, best_psi, sketch, seed: Some(seed) })
        }
    }
}

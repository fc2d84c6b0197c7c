//! Seeded matches, the win-rate utility, and demonstration datasets.

mod files;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cantstop::{Action, GameState, Player};
use crate::error::Error;
use crate::rng;
use crate::strategy::Strategy;

pub use files::{read_dataset, read_traces, write_dataset, write_traces, DATASET_FORMAT, TRACE_FORMAT};

/// Decisions after which a match is abandoned as a loss for the player to move.
pub const MAX_DECISIONS: usize = 10_000;

/// One decision of a match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    pub mover: Player,
    pub state: GameState,
    pub action: Action,
}

/// Why a match ended without a regular win.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Forfeit {
    /// The strategy failed to produce a legal action.
    Fault { player: Player, reason: String },
    /// The decision cap was reached.
    Capped { player: Player },
}

/// A complete match between strategy `players[0]` (first seat) and
/// `players[1]` (second seat).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchTrace {
    pub seed: u64,
    pub starter: Player,
    pub players: [String; 2],
    pub steps: Vec<Step>,
    pub end: GameState,
    pub winner: Player,
    pub forfeit: Option<Forfeit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Outcome {
    winner: Player,
    faulted: bool,
}

fn dice_seed(seed: u64) -> u64 {
    rng::derive(seed, 0)
}

fn strategy_seed(seed: u64, seat: Player) -> u64 {
    rng::derive(seed, 1 + seat.index() as u64)
}

fn run_match(
    seats: [&dyn Strategy; 2],
    seed: u64,
    starter: Player,
    mut record: Option<&mut Vec<Step>>,
) -> (Outcome, GameState, Option<Forfeit>) {
    let mut dice = rng::stream(dice_seed(seed));
    let mut rngs = [rng::stream(strategy_seed(seed, Player::First)), rng::stream(strategy_seed(seed, Player::Second))];
    let mut state = GameState::new(starter, &mut dice);
    let mut decisions = 0;
    while state.winner().is_none() {
        let mover = state.to_move();
        if decisions >= MAX_DECISIONS {
            let outcome = Outcome { winner: mover.other(), faulted: false };
            return (outcome, state, Some(Forfeit::Capped { player: mover }));
        }
        let actions = state.actions_unchecked();
        let choice = seats[mover.index()].choose(&state, &actions, &mut rngs[mover.index()] as &mut dyn RngCore);
        let action = match choice {
            Ok(i) if i < actions.len() => actions[i],
            Ok(i) => {
                let reason = format!("action index {i} out of {} choices", actions.len());
                let outcome = Outcome { winner: mover.other(), faulted: true };
                return (outcome, state, Some(Forfeit::Fault { player: mover, reason }));
            }
            Err(e) => {
                let outcome = Outcome { winner: mover.other(), faulted: true };
                return (outcome, state, Some(Forfeit::Fault { player: mover, reason: e.to_string() }));
            }
        };
        if let Some(steps) = record.as_deref_mut() {
            steps.push(Step { mover, state, action });
        }
        state = state.apply_unchecked(&action, &mut dice);
        decisions += 1;
    }
    let winner = state.winner().expect("loop ends on a winner");
    (Outcome { winner, faulted: false }, state, None)
}

/// Plays one match; `first` occupies the first seat. Faults and the
/// decision cap are folded into the winner.
pub fn play_match(first: &dyn Strategy, second: &dyn Strategy, seed: u64, starter: Player) -> MatchTrace {
    let mut steps = Vec::new();
    let (outcome, end, forfeit) = run_match([first, second], seed, starter, Some(&mut steps));
    MatchTrace { seed, starter, players: [first.name(), second.name()], steps, end, winner: outcome.winner, forfeit }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("step {step}: recorded state differs from the replayed one")]
    StateMismatch { step: usize },
    #[error("step {step}: action {action} is not legal")]
    IllegalAction { step: usize, action: Action },
    #[error("step {step}: mover does not match the state")]
    WrongMover { step: usize },
    #[error("final state or winner differs from the replay")]
    EndMismatch,
}

/// Re-plays the recorded actions from the match seed and checks every state,
/// the final state and the winner.
pub fn replay(trace: &MatchTrace) -> Result<(), ReplayError> {
    let mut dice = rng::stream(dice_seed(trace.seed));
    let mut state = GameState::new(trace.starter, &mut dice);
    for (i, step) in trace.steps.iter().enumerate() {
        if step.state != state {
            return Err(ReplayError::StateMismatch { step: i });
        }
        if step.mover != state.to_move() {
            return Err(ReplayError::WrongMover { step: i });
        }
        state = state
            .apply_action(&step.action, &mut dice)
            .map_err(|_| ReplayError::IllegalAction { step: i, action: step.action })?;
    }
    let winner_ok = match &trace.forfeit {
        None => state.winner() == Some(trace.winner),
        Some(Forfeit::Fault { player, .. }) | Some(Forfeit::Capped { player }) => trace.winner == player.other(),
    };
    if state != trace.end || !winner_ok {
        return Err(ReplayError::EndMismatch);
    }
    Ok(())
}

/// Result of a batch of matches between a candidate and an opponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiResult {
    pub wins: u64,
    pub matches: u64,
    /// Matches the candidate lost through a fault of its own.
    pub candidate_faults: u64,
    pub opponent_faults: u64,
}

impl PsiResult {
    pub fn rate(&self) -> f64 {
        self.wins as f64 / self.matches as f64
    }
}

/// Starting player of match `index`: the candidate opens on even indices.
pub fn starter_for(index: u64) -> Player {
    if index.is_multiple_of(2) {
        Player::First
    } else {
        Player::Second
    }
}

/// Seed of match `index` under `base_seed`.
pub fn match_seed(base_seed: u64, index: u64) -> u64 {
    rng::derive(base_seed, index)
}

/// Runs batches of matches, optionally on a dedicated thread pool. Results
/// never depend on the number of workers.
#[derive(Debug)]
pub struct MatchPool {
    pool: Option<rayon::ThreadPool>,
}

impl MatchPool {
    pub fn serial() -> Self {
        MatchPool { pool: None }
    }

    /// `workers <= 1` runs serially on the calling thread.
    pub fn new(workers: usize) -> Result<Self, Error> {
        if workers <= 1 {
            return Ok(MatchPool::serial());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::contract(format!("cannot start {workers} workers: {e}")))?;
        Ok(MatchPool { pool: Some(pool) })
    }

    pub fn workers(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    fn map<T: Send>(&self, n: u64, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
        match &self.pool {
            None => (0..n).map(f).collect(),
            Some(pool) => pool.install(|| (0..n).into_par_iter().map(f).collect()),
        }
    }

    /// Win rate of `candidate` (first seat) against `opponent` over
    /// `n_matches` seeded matches with alternating starters.
    pub fn psi(
        &self,
        candidate: &dyn Strategy,
        opponent: &dyn Strategy,
        n_matches: u64,
        base_seed: u64,
    ) -> Result<PsiResult, Error> {
        if n_matches == 0 {
            return Err(Error::contract("psi needs at least one match"));
        }
        let outcomes =
            self.map(n_matches, |i| run_match([candidate, opponent], match_seed(base_seed, i), starter_for(i), None).0);
        let mut r = PsiResult { wins: 0, matches: n_matches, candidate_faults: 0, opponent_faults: 0 };
        for o in outcomes {
            match (o.winner, o.faulted) {
                (Player::First, false) => r.wins += 1,
                (Player::First, true) => {
                    r.wins += 1;
                    r.opponent_faults += 1;
                }
                (Player::Second, true) => r.candidate_faults += 1,
                (Player::Second, false) => {}
            }
        }
        Ok(r)
    }

    /// Full traces of `n_matches` seeded matches.
    pub fn traces(
        &self,
        first: &dyn Strategy,
        second: &dyn Strategy,
        n_matches: u64,
        base_seed: u64,
    ) -> Vec<MatchTrace> {
        self.map(n_matches, |i| play_match(first, second, match_seed(base_seed, i), starter_for(i)))
    }

    pub fn generate_dataset(
        &self,
        demonstrator: &dyn Strategy,
        mode: DatasetMode<'_>,
        n_matches: u64,
        base_seed: u64,
    ) -> DataSet {
        let (second, label) = match mode {
            DatasetMode::SelfPlayWinnerOnly => (demonstrator, format!("{} self-play", demonstrator.name())),
            DatasetMode::VersusKeepFirst(opponent) => {
                (opponent, format!("{} versus {}", demonstrator.name(), opponent.name()))
            }
        };
        let matches = self
            .traces(demonstrator, second, n_matches, base_seed)
            .into_iter()
            .map(|t| {
                let kept = match mode {
                    DatasetMode::SelfPlayWinnerOnly => t.winner,
                    DatasetMode::VersusKeepFirst(_) => Player::First,
                };
                Demonstration::from_trace(&t, kept)
            })
            .collect();
        DataSet { label, matches }
    }
}

/// Plain serial [`MatchPool::psi`].
pub fn psi(candidate: &dyn Strategy, opponent: &dyn Strategy, n_matches: u64, base_seed: u64) -> Result<f64, Error> {
    MatchPool::serial().psi(candidate, opponent, n_matches, base_seed).map(|r| r.rate())
}

/// Which matches and which side's decisions go into a dataset.
#[derive(Clone, Copy)]
pub enum DatasetMode<'a> {
    /// The demonstrator plays itself; only the winner's decisions are kept.
    SelfPlayWinnerOnly,
    /// The demonstrator plays the given opponent and all of its own
    /// decisions are kept.
    VersusKeepFirst(&'a dyn Strategy),
}

/// Demonstrator decisions of one match and the match's final state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Demonstration {
    pub seed: u64,
    pub starter: Player,
    pub demonstrator: Player,
    pub winner: Player,
    pub pairs: Vec<(GameState, Action)>,
    pub end: GameState,
}

impl Demonstration {
    pub fn from_trace(trace: &MatchTrace, demonstrator: Player) -> Self {
        Demonstration {
            seed: trace.seed,
            starter: trace.starter,
            demonstrator,
            winner: trace.winner,
            pairs: trace.steps.iter().filter(|s| s.mover == demonstrator).map(|s| (s.state, s.action)).collect(),
            end: trace.end,
        }
    }
}

/// Demonstration matches plus a free-form provenance label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DataSet {
    pub label: String,
    pub matches: Vec<Demonstration>,
}

impl DataSet {
    pub fn pair_count(&self) -> usize {
        self.matches.iter().map(|m| m.pairs.len()).sum()
    }

    /// Checks that every kept action is legal at its state and was taken by
    /// the demonstrator.
    pub fn validate(&self) -> Result<(), Error> {
        for (mi, m) in self.matches.iter().enumerate() {
            for (si, (state, action)) in m.pairs.iter().enumerate() {
                let where_ = || format!("match {mi}, decision {si}");
                if state.to_move() != m.demonstrator {
                    return Err(Error::contract(format!("{}: not the demonstrator's turn", where_())));
                }
                let legal = state.legal_actions().map_err(|e| Error::contract(format!("{}: {e}", where_())))?;
                if !legal.contains(action) {
                    return Err(Error::contract(format!("{}: illegal action {action}", where_())));
                }
            }
        }
        Ok(())
    }
}

/// Serial dataset generation.
pub fn generate_dataset(demonstrator: &dyn Strategy, mode: DatasetMode<'_>, n_matches: u64, base_seed: u64) -> DataSet {
    MatchPool::serial().generate_dataset(demonstrator, mode, n_matches, base_seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{GaStrategy, RandomStrategy};
    use crate::strategy::StrategyFault;

    struct Broken;

    impl Strategy for Broken {
        fn name(&self) -> String {
            "broken".into()
        }

        fn choose(&self, _: &GameState, _: &[Action], _: &mut dyn RngCore) -> Result<usize, StrategyFault> {
            Err(StrategyFault::NoActions)
        }
    }

    struct Overflow;

    impl Strategy for Overflow {
        fn name(&self) -> String {
            "overflow".into()
        }

        fn choose(&self, _: &GameState, actions: &[Action], _: &mut dyn RngCore) -> Result<usize, StrategyFault> {
            Ok(actions.len())
        }
    }

    #[test]
    fn matches_are_deterministic_and_replay() {
        let ga = GaStrategy::default();
        let a = play_match(&RandomStrategy, &ga, 11, Player::Second);
        let b = play_match(&RandomStrategy, &ga, 11, Player::Second);
        assert_eq!(a, b);
        assert_eq!(a.starter, Player::Second);
        assert_eq!(a.steps[0].mover, Player::Second);
        replay(&a).unwrap();
        let mut bad = a.clone();
        bad.winner = bad.winner.other();
        assert_eq!(replay(&bad), Err(ReplayError::EndMismatch));
    }

    #[test]
    fn faults_lose_the_match() {
        let t = play_match(&Broken, &RandomStrategy, 3, Player::First);
        assert_eq!(t.winner, Player::Second);
        assert!(matches!(t.forfeit, Some(Forfeit::Fault { player: Player::First, .. })));
        replay(&t).unwrap();
        let t = play_match(&RandomStrategy, &Overflow, 3, Player::Second);
        assert_eq!(t.winner, Player::First);
        let r = MatchPool::serial().psi(&Broken, &Broken, 10, 1).unwrap();
        assert_eq!(r.wins + r.candidate_faults, 10);
    }

    #[test]
    fn psi_rejects_zero_matches() {
        assert!(psi(&RandomStrategy, &RandomStrategy, 0, 1).unwrap_err().is_contract_violation());
    }

    #[test]
    fn candidate_opens_half_the_matches() {
        let pool = MatchPool::serial();
        for n in [1u64, 2, 7, 10] {
            let traces = pool.traces(&RandomStrategy, &RandomStrategy, n, 5);
            let first = traces.iter().filter(|t| t.starter == Player::First).count() as u64;
            assert_eq!(first, n.div_ceil(2));
        }
    }

    #[test]
    fn parallel_psi_equals_serial() {
        let ga = GaStrategy::default();
        let serial = MatchPool::serial().psi(&RandomStrategy, &ga, 200, 42).unwrap();
        let parallel = MatchPool::new(4).unwrap().psi(&RandomStrategy, &ga, 200, 42).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn self_play_keeps_winner_decisions() {
        let ga = GaStrategy::default();
        let ds = generate_dataset(&ga, DatasetMode::SelfPlayWinnerOnly, 4, 9);
        assert_eq!(ds.matches.len(), 4);
        for m in &ds.matches {
            assert_eq!(m.demonstrator, m.winner);
            assert!(m.pairs.iter().all(|(s, _)| s.to_move() == m.winner));
            assert!(!m.pairs.is_empty());
        }
        ds.validate().unwrap();
        let vs = generate_dataset(&RandomStrategy, DatasetMode::VersusKeepFirst(&ga), 3, 9);
        assert!(vs.matches.iter().all(|m| m.demonstrator == Player::First));
        vs.validate().unwrap();
    }
}

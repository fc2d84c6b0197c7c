//! Behavioral-cloning scores of a strategy against a demonstration dataset.

use serde::{Deserialize, Serialize};

use crate::cantstop::{column_height, columns, Action, GameState, Phase, Player, MAX_NEUTRALS, NUM_COLUMNS};
use crate::error::Error;
use crate::evaluation::{DataSet, Demonstration};
use crate::rng;
use crate::strategy::Strategy;

/// Which cloning score to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloneMetric {
    /// Fraction of recorded actions reproduced.
    Action,
    /// Overlap of secured cells at the end of each match.
    Observation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloneScore {
    pub value: f64,
    pub per_match: Vec<f64>,
    /// Decisions on which the strategy faulted.
    pub faults: u64,
}

pub fn clone_score(metric: CloneMetric, data: &DataSet, strategy: &dyn Strategy) -> Result<CloneScore, Error> {
    match metric {
        CloneMetric::Action => action_score(data, strategy),
        CloneMetric::Observation => observation_score(data, strategy),
    }
}

fn choose(strategy: &dyn Strategy, m: &Demonstration, j: usize, state: &GameState) -> Option<Action> {
    let actions = state.legal_actions().ok()?;
    let mut r = rng::stream(rng::derive(m.seed ^ 0xC10E, j as u64));
    match strategy.choose(state, &actions, &mut r) {
        Ok(i) => actions.get(i).copied(),
        Err(_) => None,
    }
}

/// Share of recorded decisions on which `strategy` picks the recorded
/// action, pooled over all matches.
pub fn action_score(data: &DataSet, strategy: &dyn Strategy) -> Result<CloneScore, Error> {
    let total = data.pair_count();
    if total == 0 {
        return Err(Error::contract("action score needs at least one recorded decision"));
    }
    let mut matched = 0u64;
    let mut faults = 0u64;
    let mut per_match = Vec::with_capacity(data.matches.len());
    for m in &data.matches {
        let mut hits = 0u64;
        for (j, (state, recorded)) in m.pairs.iter().enumerate() {
            match choose(strategy, m, j, state) {
                Some(a) if a == *recorded => hits += 1,
                Some(_) => {}
                None => faults += 1,
            }
        }
        matched += hits;
        per_match.push(if m.pairs.is_empty() { 0.0 } else { hits as f64 / m.pairs.len() as f64 });
    }
    Ok(CloneScore { value: matched as f64 / total as f64, per_match, faults })
}

/// Secured cells per column of one player.
pub type Cells = [u8; NUM_COLUMNS];

/// `|A ∩ B| / |A ∪ B|` over secured cells; columns fill bottom-up, so per
/// column the intersection is the shorter run and the union the longer.
/// Two empty boards overlap fully.
pub fn cell_overlap(a: &Cells, b: &Cells) -> f64 {
    let inter: u32 = a.iter().zip(b).map(|(&x, &y)| u32::from(x.min(y))).sum();
    let union: u32 = a.iter().zip(b).map(|(&x, &y)| u32::from(x.max(y))).sum();
    if union == 0 {
        1.0
    } else {
        f64::from(inter) / f64::from(union)
    }
}

/// Board of one player's markers, driven only by that player's actions.
#[derive(Debug, Clone, Default)]
struct Shadow {
    secured: Cells,
    neutrals: Vec<(u8, u8)>,
}

impl Shadow {
    fn advance(&mut self, column: u8) {
        let top = column_height(column).expect("legal actions name valid columns");
        let slot = (column - 2) as usize;
        if let Some(n) = self.neutrals.iter_mut().find(|n| n.0 == column) {
            n.1 = (n.1 + 1).min(top);
        } else if self.neutrals.len() < MAX_NEUTRALS && self.secured[slot] < top {
            self.neutrals.push((column, self.secured[slot] + 1));
        }
    }

    fn commit(&mut self) {
        for (c, row) in self.neutrals.drain(..) {
            let slot = (c - 2) as usize;
            self.secured[slot] = self.secured[slot].max(row);
        }
    }
}

fn end_cells(state: &GameState, player: Player) -> Cells {
    let mut out = [0; NUM_COLUMNS];
    for c in columns() {
        out[(c - 2) as usize] = state.secured(player, c);
    }
    out
}

fn observation_match(m: &Demonstration, strategy: &dyn Strategy, faults: &mut u64) -> f64 {
    let mut shadow = Shadow::default();
    for (j, (state, _)) in m.pairs.iter().enumerate() {
        // A column decision with no neutral markers opens a new turn; shadow
        // progress left over from a turn that ended without stopping is lost.
        if state.phase() == Phase::Column && state.neutrals().is_empty() {
            shadow.neutrals.clear();
        }
        match choose(strategy, m, j, state) {
            Some(Action::Columns(mv)) => mv.columns().iter().for_each(|&c| shadow.advance(c)),
            Some(Action::No) => shadow.commit(),
            Some(Action::Yes) => {}
            None => *faults += 1,
        }
    }
    cell_overlap(&shadow.secured, &end_cells(&m.end, m.demonstrator))
}

/// Mean over matches of the overlap between the demonstrator's secured
/// cells at the end of the match and those the strategy would have secured
/// by acting on the recorded states.
pub fn observation_score(data: &DataSet, strategy: &dyn Strategy) -> Result<CloneScore, Error> {
    if data.matches.is_empty() {
        return Err(Error::contract("observation score needs at least one match"));
    }
    let mut faults = 0;
    let per_match: Vec<f64> = data.matches.iter().map(|m| observation_match(m, strategy, &mut faults)).collect();
    let value = per_match.iter().sum::<f64>() / per_match.len() as f64;
    Ok(CloneScore { value, per_match, faults })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cantstop::StateRecord;
    use crate::dsl::{GaStrategy, RandomStrategy};
    use crate::evaluation::{generate_dataset, DatasetMode};

    fn cells(entries: &[(u8, u8)]) -> Cells {
        let mut out = [0; NUM_COLUMNS];
        for &(c, n) in entries {
            out[(c - 2) as usize] = n;
        }
        out
    }

    #[test]
    fn overlap_of_worked_example() {
        let recorded = cells(&[(2, 3), (3, 5), (7, 13), (12, 1)]);
        let shadow = cells(&[(2, 3), (3, 5), (8, 1)]);
        assert!((cell_overlap(&shadow, &recorded) - 8.0 / 23.0).abs() < 1e-12);
        assert_eq!(cell_overlap(&[0; NUM_COLUMNS], &[0; NUM_COLUMNS]), 1.0);
    }

    #[test]
    fn shadow_respects_marker_limit_and_height() {
        let mut s = Shadow::default();
        for c in [2, 3, 4, 5] {
            s.advance(c);
        }
        assert_eq!(s.neutrals.len(), 3);
        for _ in 0..5 {
            s.advance(2);
        }
        s.commit();
        assert_eq!(s.secured[0], 3);
        assert_eq!(s.secured[3], 0);
    }

    #[test]
    fn demonstrator_scores_one_on_its_own_data() {
        let ga = GaStrategy::default();
        let ds = generate_dataset(&ga, DatasetMode::SelfPlayWinnerOnly, 5, 17);
        let a = action_score(&ds, &ga).unwrap();
        assert_eq!(a.value, 1.0);
        let o = observation_score(&ds, &ga).unwrap();
        assert_eq!(o.value, 1.0, "{:?}", o.per_match);
        let r = action_score(&ds, &RandomStrategy).unwrap();
        assert!(r.value < 1.0);
    }

    #[test]
    fn scores_need_data() {
        let empty = DataSet::default();
        assert!(action_score(&empty, &RandomStrategy).unwrap_err().is_contract_violation());
        assert!(observation_score(&empty, &RandomStrategy).unwrap_err().is_contract_violation());
    }

    #[test]
    fn observation_score_averages_matches() {
        let mut r = StateRecord::empty(Player::First);
        r.phase = Phase::YesNo;
        let empty = GameState::try_from(r.clone()).unwrap();
        r.set_permanent(Player::First, 2, 3);
        let end = GameState::try_from(r).unwrap();
        let m = Demonstration {
            seed: 0,
            starter: Player::First,
            demonstrator: Player::First,
            winner: Player::First,
            pairs: Vec::new(),
            end,
        };
        let empty_end = Demonstration { end: empty, ..m.clone() };
        let ds = DataSet { label: String::new(), matches: vec![m, empty_end] };
        let s = observation_score(&ds, &RandomStrategy).unwrap();
        assert_eq!(s.per_match, vec![0.0, 1.0]);
        assert_eq!(s.value, 0.5);
    }
}

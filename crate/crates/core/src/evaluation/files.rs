//! JSON-lines storage for datasets and match traces.
//!
//! A file starts with a header line carrying the format tag, then for each
//! match one `match` line followed by its `step` lines.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{DataSet, Demonstration, Forfeit, MatchTrace, Step};
use crate::cantstop::{Action, GameState, Player};
use crate::error::Error;

pub const DATASET_FORMAT: &str = "sketchsynth/dataset-v1";
pub const TRACE_FORMAT: &str = "sketchsynth/trace-v1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header {
        format: String,
        #[serde(default)]
        label: String,
        matches: usize,
    },
    Match {
        index: usize,
        seed: u64,
        starter: Player,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        players: Option<[String; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        demonstrator: Option<Player>,
        winner: Player,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        forfeit: Option<Forfeit>,
        end_state: GameState,
    },
    Step {
        #[serde(rename = "match")]
        match_index: usize,
        mover: Player,
        state: GameState,
        action: Action,
    },
}

fn put(w: &mut impl Write, line: &Line) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, line)?;
    w.write_all(b"\n")
}

pub fn write_dataset(mut w: impl Write, ds: &DataSet) -> std::io::Result<()> {
    put(&mut w, &Line::Header { format: DATASET_FORMAT.into(), label: ds.label.clone(), matches: ds.matches.len() })?;
    for (index, m) in ds.matches.iter().enumerate() {
        put(
            &mut w,
            &Line::Match {
                index,
                seed: m.seed,
                starter: m.starter,
                players: None,
                demonstrator: Some(m.demonstrator),
                winner: m.winner,
                forfeit: None,
                end_state: m.end,
            },
        )?;
        for (state, action) in &m.pairs {
            put(&mut w, &Line::Step { match_index: index, mover: m.demonstrator, state: *state, action: *action })?;
        }
    }
    w.flush()
}

pub fn write_traces(mut w: impl Write, traces: &[MatchTrace]) -> std::io::Result<()> {
    put(&mut w, &Line::Header { format: TRACE_FORMAT.into(), label: String::new(), matches: traces.len() })?;
    for (index, t) in traces.iter().enumerate() {
        put(
            &mut w,
            &Line::Match {
                index,
                seed: t.seed,
                starter: t.starter,
                players: Some(t.players.clone()),
                demonstrator: None,
                winner: t.winner,
                forfeit: t.forfeit.clone(),
                end_state: t.end,
            },
        )?;
        for s in &t.steps {
            put(&mut w, &Line::Step { match_index: index, mover: s.mover, state: s.state, action: s.action })?;
        }
    }
    w.flush()
}

struct RawMatch {
    seed: u64,
    starter: Player,
    players: Option<[String; 2]>,
    demonstrator: Option<Player>,
    winner: Player,
    forfeit: Option<Forfeit>,
    end: GameState,
    steps: Vec<Step>,
}

fn read_lines(r: impl BufRead, format: &str) -> Result<(String, Vec<RawMatch>), Error> {
    let fail = |line: usize, message: String| Error::Format { line, message };
    let mut label = None;
    let mut expected = 0;
    let mut matches: Vec<RawMatch> = Vec::new();
    for (i, text) in r.lines().enumerate() {
        let n = i + 1;
        let text = text.map_err(|e| fail(n, e.to_string()))?;
        if text.trim().is_empty() {
            continue;
        }
        let line: Line = serde_json::from_str(&text).map_err(|e| fail(n, e.to_string()))?;
        match (line, &label) {
            (Line::Header { format: f, label: l, matches: m }, None) => {
                if f != format {
                    return Err(fail(n, format!("expected format `{format}`, found `{f}`")));
                }
                label = Some(l);
                expected = m;
            }
            (Line::Header { .. }, Some(_)) => return Err(fail(n, "repeated header".into())),
            (_, None) => return Err(fail(n, "missing header".into())),
            (Line::Match { index, seed, starter, players, demonstrator, winner, forfeit, end_state }, _) => {
                if index != matches.len() {
                    return Err(fail(n, format!("match index {index}, expected {}", matches.len())));
                }
                matches.push(RawMatch {
                    seed,
                    starter,
                    players,
                    demonstrator,
                    winner,
                    forfeit,
                    end: end_state,
                    steps: Vec::new(),
                });
            }
            (Line::Step { match_index, mover, state, action }, _) => {
                let current = matches.len().checked_sub(1);
                if current != Some(match_index) {
                    return Err(fail(n, format!("step for match {match_index} outside its match")));
                }
                matches[match_index].steps.push(Step { mover, state, action });
            }
        }
    }
    let label = label.ok_or_else(|| fail(0, "empty file".into()))?;
    if matches.len() != expected {
        return Err(fail(0, format!("header announces {expected} matches, found {}", matches.len())));
    }
    Ok((label, matches))
}

pub fn read_dataset(r: impl BufRead) -> Result<DataSet, Error> {
    let (label, raw) = read_lines(r, DATASET_FORMAT)?;
    let matches = raw
        .into_iter()
        .enumerate()
        .map(|(i, m)| {
            let demonstrator = m
                .demonstrator
                .ok_or_else(|| Error::Format { line: 0, message: format!("match {i} has no demonstrator") })?;
            Ok(Demonstration {
                seed: m.seed,
                starter: m.starter,
                demonstrator,
                winner: m.winner,
                pairs: m.steps.into_iter().map(|s| (s.state, s.action)).collect(),
                end: m.end,
            })
        })
        .collect::<Result<_, Error>>()?;
    Ok(DataSet { label, matches })
}

pub fn read_traces(r: impl BufRead) -> Result<Vec<MatchTrace>, Error> {
    let (_, raw) = read_lines(r, TRACE_FORMAT)?;
    Ok(raw
        .into_iter()
        .map(|m| MatchTrace {
            seed: m.seed,
            starter: m.starter,
            players: m.players.unwrap_or_default(),
            steps: m.steps,
            end: m.end,
            winner: m.winner,
            forfeit: m.forfeit,
        })
        .collect())
}

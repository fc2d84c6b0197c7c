//! Terminal play: a human takes the first seat and every decision is kept.

use std::io::{self, BufRead, Write};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Mutex;

use rand::RngCore;
use sketchsynth::cantstop::{column_height, columns};
use sketchsynth::evaluation::{match_seed, play_match, starter_for, write_dataset, DataSet, Demonstration};
use sketchsynth::strategy::StrategyFault;
use sketchsynth::{Action, GameState, Phase, Player, Strategy};

use crate::args::RecordArgs;
use crate::commands::{create, io_err, load_strategy, manifest_path};
use crate::settings::{parse_difficulty, RunManifest};
use crate::CliError;

struct HumanStrategy {
    input: Mutex<Box<dyn BufRead + Send>>,
    eof: AtomicBool,
}

pub fn render(state: &GameState) -> String {
    let mut out = String::new();
    let you = Player::First;
    for c in columns() {
        let height = column_height(c).expect("board column");
        let owner = match state.conquered_by(c) {
            Some(p) if p == you => " won",
            Some(_) => " lost",
            None => "",
        };
        let marker = state.neutral_on(c).map_or(String::new(), |n| format!(" marker {}", n.row));
        out.push_str(&format!(
            "{c:>2} [{height:>2}] you {:>2} them {:>2}{marker}{owner}\n",
            state.secured(you, c),
            state.secured(you.other(), c)
        ));
    }
    if let Some(d) = state.dice() {
        out.push_str(&format!("dice {} {} {} {}\n", d[0], d[1], d[2], d[3]));
    }
    out
}

impl HumanStrategy {
    fn ask(&self, state: &GameState, actions: &[Action]) -> Option<usize> {
        let mut input = self.input.lock().expect("input lock");
        let mut err = io::stderr().lock();
        let _ = write!(err, "\n{}", render(state));
        let question = match state.phase() {
            Phase::YesNo => "roll again?",
            Phase::Column => "advance which columns?",
        };
        loop {
            let _ = writeln!(err, "{question}");
            for (i, a) in actions.iter().enumerate() {
                let _ = writeln!(err, "  {i}) {a}");
            }
            let _ = write!(err, "> ");
            let _ = err.flush();
            let mut line = String::new();
            match input.read_line(&mut line) {
                Ok(0) | Err(_) => return None,
                Ok(_) => {}
            }
            let line = line.trim();
            let picked = line
                .parse::<usize>()
                .ok()
                .filter(|&i| i < actions.len())
                .or_else(|| actions.iter().position(|a| a.to_string() == line));
            match picked {
                Some(i) => return Some(i),
                None => {
                    let _ = writeln!(err, "`{line}` is not one of the listed choices");
                }
            }
        }
    }
}

impl Strategy for HumanStrategy {
    fn name(&self) -> String {
        "human".into()
    }

    fn choose(&self, state: &GameState, actions: &[Action], _rng: &mut dyn RngCore) -> Result<usize, StrategyFault> {
        if self.eof.load(Ordering::SeqCst) {
            return Err(StrategyFault::NoActions);
        }
        match self.ask(state, actions) {
            Some(i) => Ok(i),
            None => {
                self.eof.store(true, Ordering::SeqCst);
                Err(StrategyFault::NoActions)
            }
        }
    }
}

pub fn record(args: &RecordArgs) -> Result<ExitCode, CliError> {
    let difficulty = parse_difficulty(&args.difficulty)?;
    let opponent = load_strategy(&args.opponent, difficulty)?;
    let human =
        HumanStrategy { input: Mutex::new(Box::new(io::BufReader::new(io::stdin()))), eof: AtomicBool::new(false) };
    let mut matches = Vec::new();
    for i in 0..args.matches {
        let trace = play_match(&human, opponent.as_ref(), match_seed(args.seed, i), starter_for(i));
        if human.eof.load(Ordering::SeqCst) {
            return Err(CliError::Io(format!("input ended during match {}", i + 1)));
        }
        let verdict = if trace.winner == Player::First { "you win" } else { "you lose" };
        eprintln!("\nmatch {}: {verdict}", i + 1);
        matches.push(Demonstration::from_trace(&trace, Player::First));
    }
    let ds = DataSet { label: format!("human versus {}", opponent.name()), matches };
    let mut w = create(&args.out)?;
    write_dataset(&mut w, &ds).and_then(|_| w.flush()).map_err(|e| io_err(&args.out, e))?;
    let mut manifest = RunManifest::new(
        "record",
        serde_json::json!({
            "opponent": args.opponent,
            "matches": args.matches,
            "seed": args.seed,
            "difficulty": args.difficulty,
        }),
    );
    manifest.outputs.push(args.out.clone());
    manifest.write(&manifest_path(&args.out))?;
    println!("{} matches, {} decisions -> {}", ds.matches.len(), ds.pair_count(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

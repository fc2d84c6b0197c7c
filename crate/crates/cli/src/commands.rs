use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::Serialize;
use sketchsynth::dsl::{cantstop_grammar, DifficultyRule, GaStrategy, ProgramStrategy, RandomStrategy, StrategyPair};
use sketchsynth::evaluation::{
    read_dataset, read_traces, replay as replay_trace, write_dataset, write_traces, DataSet, DatasetMode, MatchPool,
    DATASET_FORMAT, TRACE_FORMAT,
};
use sketchsynth::rng;
use sketchsynth::sa::SaPhase;
use sketchsynth::search::Budget;
use sketchsynth::sketch::{run_pipeline, PhaseSearch, PipelineOutcome};
use sketchsynth::trajectory::Recorder;
use sketchsynth::uct::UctPhase;
use sketchsynth::Strategy;

use crate::args::{DatasetArgs, EvalArgs, Method, ReplayArgs, SynthArgs};
use crate::settings::{default_workers, parse_difficulty, resolve, RunManifest};
use crate::CliError;

pub fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

pub fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

/// `ga`, `random`, or the path of a program file.
pub fn load_strategy(name: &str, difficulty: DifficultyRule) -> Result<Box<dyn Strategy>, CliError> {
    match name {
        "ga" => Ok(Box::new(GaStrategy::new(difficulty))),
        "random" => Ok(Box::new(RandomStrategy)),
        path => {
            let text = fs::read_to_string(path).map_err(|e| io_err(Path::new(path), e))?;
            let pair = StrategyPair::parse(&text).map_err(|e| io_err(Path::new(path), e))?;
            Ok(Box::new(ProgramStrategy::with_difficulty(pair, difficulty).named(path)))
        }
    }
}

fn pool(workers: Option<usize>) -> Result<MatchPool, CliError> {
    match workers.unwrap_or_else(default_workers) {
        0 => Err(CliError::Usage("--workers must be positive".into())),
        1 => Ok(MatchPool::serial()),
        n => Ok(MatchPool::new(n)?),
    }
}

fn load_dataset(path: &Path) -> Result<DataSet, CliError> {
    let ds = read_dataset(open(path)?).map_err(|e| io_err(path, e))?;
    ds.validate().map_err(|e| io_err(path, e))?;
    Ok(ds)
}

fn interrupt_flag() -> Arc<AtomicBool> {
    let flag = Arc::new(AtomicBool::new(false));
    let handler_flag = flag.clone();
    if let Err(e) = ctrlc::set_handler(move || handler_flag.store(true, Ordering::SeqCst)) {
        eprintln!("sketchsynth: interrupts will not flush outputs: {e}");
    }
    flag
}

#[derive(Serialize)]
struct SynthSummary<'a> {
    best_psi: f64,
    sketch_clone_score: Option<f64>,
    interrupted: bool,
    tree_stats: &'a [sketchsynth::uct::TreeStats],
}

pub fn synth(args: &SynthArgs) -> Result<ExitCode, CliError> {
    let settings = resolve(args)?;
    let out = &settings.out_dir;
    fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let files = |name: &str| out.join(name);
    let mut manifest = RunManifest::new("synth", &settings);
    manifest.inputs.extend(settings.dataset.iter().cloned());
    if !matches!(settings.opponent.as_str(), "ga" | "random") {
        manifest.inputs.push(PathBuf::from(&settings.opponent));
    }
    manifest.outputs = ["trajectory.csv", "best.sexpr", "checkpoint.sexpr", "summary.json"].map(files).to_vec();
    manifest.write(&files("manifest.json"))?;
    if args.dry_run {
        println!("{}", files("manifest.json").display());
        return Ok(ExitCode::SUCCESS);
    }

    let difficulty = settings.pipeline.difficulty;
    let pool = pool(Some(settings.workers))?;
    let data = match &settings.dataset {
        Some(p) => load_dataset(p)?,
        None => pool.generate_dataset(
            &GaStrategy::new(difficulty),
            DatasetMode::SelfPlayWinnerOnly,
            3,
            rng::derive(settings.seed, 1),
        ),
    };
    let opponent = load_strategy(&settings.opponent, difficulty)?;

    let csv = File::create(files("trajectory.csv")).map_err(|e| io_err(&files("trajectory.csv"), e))?;
    let mut recorder = Recorder::new();
    if matches!(settings.pipeline.br_budget, Budget::Iterations(_)) {
        recorder = recorder.untimed();
    }
    let mut recorder = recorder
        .with_csv(Box::new(BufWriter::new(csv)))
        .map_err(|e| io_err(&files("trajectory.csv"), e))?
        .with_checkpoint(files("checkpoint.sexpr"), settings.checkpoint_every);

    let cancel = interrupt_flag();
    let grammar = cantstop_grammar();
    let stream = rng::stream(settings.seed);
    let mut tree_stats = Vec::new();
    let outcome: PipelineOutcome = match settings.method {
        Method::Sa => {
            let mut phase = SaPhase { grammar, config: settings.sa, rng: stream, cancel: Some(cancel.clone()) };
            run(&mut phase, &data, opponent.as_ref(), &pool, &settings, &mut recorder)?
        }
        Method::Uct => {
            let mut phase = UctPhase {
                grammar,
                config: settings.uct,
                rng: stream,
                cancel: Some(cancel.clone()),
                phase_stats: Vec::new(),
            };
            let o = run(&mut phase, &data, opponent.as_ref(), &pool, &settings, &mut recorder)?;
            tree_stats = phase.phase_stats;
            o
        }
    };

    let sexpr = grammar.to_sexpr(&outcome.best);
    let pair = StrategyPair::from_program(outcome.best.clone()).map_err(|e| CliError::Contract(e.to_string()))?;
    let mut text = format!(
        "# manifest: manifest.json\n# win rate vs {} over {} matches: {}\n",
        settings.opponent, settings.pipeline.psi_matches, outcome.best_psi
    );
    for line in pair.to_string().lines() {
        text.push_str(&format!("# {line}\n"));
    }
    text.push_str(&sexpr);
    text.push('\n');
    fs::write(files("best.sexpr"), text).map_err(|e| io_err(&files("best.sexpr"), e))?;
    recorder.write_checkpoint(&sexpr).map_err(|e| io_err(&files("checkpoint.sexpr"), e))?;
    recorder.finish().map_err(|e| io_err(&files("trajectory.csv"), e))?;

    let interrupted = cancel.load(Ordering::SeqCst);
    let summary = SynthSummary {
        best_psi: outcome.best_psi,
        sketch_clone_score: outcome.sketch.as_ref().map(|s| s.1),
        interrupted,
        tree_stats: &tree_stats,
    };
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(files("summary.json"), json + "\n").map_err(|e| io_err(&files("summary.json"), e))?;

    println!("best win rate {:.4} after {} iterations", outcome.best_psi, recorder.iterations());
    println!("{pair}");
    if interrupted {
        eprintln!("sketchsynth: interrupted; incumbent written to {}", files("best.sexpr").display());
        return Ok(ExitCode::from(130));
    }
    Ok(ExitCode::SUCCESS)
}

fn run(
    phase: &mut dyn PhaseSearch,
    data: &DataSet,
    opponent: &dyn Strategy,
    pool: &MatchPool,
    settings: &crate::settings::SynthSettings,
    recorder: &mut Recorder,
) -> Result<PipelineOutcome, CliError> {
    Ok(run_pipeline(phase, data, opponent, pool, &settings.pipeline, recorder)?)
}

pub fn eval(args: &EvalArgs) -> Result<ExitCode, CliError> {
    let difficulty = parse_difficulty(&args.difficulty)?;
    let a = load_strategy(&args.a, difficulty)?;
    let b = load_strategy(&args.b, difficulty)?;
    let r = pool(args.workers)?.psi(a.as_ref(), b.as_ref(), args.n, args.seed)?;
    println!("{:.4}", r.rate());
    eprintln!(
        "{} vs {}: {} wins in {} matches ({} candidate faults, {} opponent faults)",
        args.a, args.b, r.wins, r.matches, r.candidate_faults, r.opponent_faults
    );
    Ok(ExitCode::SUCCESS)
}

pub fn dataset(args: &DatasetArgs) -> Result<ExitCode, CliError> {
    let difficulty = parse_difficulty(&args.difficulty)?;
    let demonstrator = load_strategy(&args.demonstrator, difficulty)?;
    let versus = args.versus.as_deref().map(|v| load_strategy(v, difficulty)).transpose()?;
    let pool = pool(args.workers)?;
    let mode = match &versus {
        Some(v) => DatasetMode::VersusKeepFirst(v.as_ref()),
        None => DatasetMode::SelfPlayWinnerOnly,
    };
    let ds = pool.generate_dataset(demonstrator.as_ref(), mode, args.matches, args.seed);
    let mut manifest = RunManifest::new(
        "dataset",
        serde_json::json!({
            "demonstrator": args.demonstrator,
            "versus": args.versus,
            "matches": args.matches,
            "seed": args.seed,
            "difficulty": args.difficulty,
        }),
    );
    manifest.outputs.push(args.out.clone());
    let mut w = create(&args.out)?;
    write_dataset(&mut w, &ds).and_then(|_| w.flush()).map_err(|e| io_err(&args.out, e))?;
    if let Some(path) = &args.traces {
        let second = versus.as_deref().unwrap_or(demonstrator.as_ref());
        let traces = pool.traces(demonstrator.as_ref(), second, args.matches, args.seed);
        let mut w = create(path)?;
        write_traces(&mut w, &traces).and_then(|_| w.flush()).map_err(|e| io_err(path, e))?;
        manifest.outputs.push(path.clone());
    }
    manifest.write(&manifest_path(&args.out))?;
    println!("{} matches, {} decisions -> {}", ds.matches.len(), ds.pair_count(), args.out.display());
    Ok(ExitCode::SUCCESS)
}

/// `data.jsonl` -> `data.jsonl.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

pub fn replay(args: &ReplayArgs) -> Result<ExitCode, CliError> {
    let path = &args.file;
    let mut first = String::new();
    open(path)?.read_line(&mut first).map_err(|e| io_err(path, e))?;
    let header: serde_json::Value = serde_json::from_str(&first).map_err(|e| io_err(path, format!("line 1: {e}")))?;
    match header.get("format").and_then(|f| f.as_str()) {
        Some(f) if f == TRACE_FORMAT => {
            let traces = read_traces(open(path)?).map_err(|e| io_err(path, e))?;
            for (i, t) in traces.iter().enumerate() {
                replay_trace(t).map_err(|e| io_err(path, format!("match {i}: {e}")))?;
            }
            println!("ok: {} traces replay", traces.len());
        }
        Some(f) if f == DATASET_FORMAT => {
            let ds = load_dataset(path)?;
            println!("ok: {} matches, {} decisions, all legal", ds.matches.len(), ds.pair_count());
        }
        _ => return Err(io_err(path, "not a trace or dataset file")),
    }
    Ok(ExitCode::SUCCESS)
}

//! Resolution of synthesis options (flags over config file over defaults)
//! and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sketchsynth::dsl::DifficultyRule;
use sketchsynth::sa::SaConfig;
use sketchsynth::search::Budget;
use sketchsynth::sketch::{Mode, PipelineConfig};
use sketchsynth::uct::UctConfig;

use crate::args::{Method, SynthArgs};
use crate::CliError;

pub const MANIFEST_FORMAT: &str = "sketchsynth/manifest-v1";

/// Two days, the length of a full-scale run.
const DEFAULT_SECONDS: f64 = 172_800.0;
const SA_SKETCH_SECONDS: f64 = 3600.0;
const UCT_SKETCH_SECONDS: f64 = 36_000.0;

#[derive(Debug, Clone, Serialize)]
pub struct SynthSettings {
    pub method: Method,
    pub mode: Mode,
    pub dataset: Option<PathBuf>,
    pub opponent: String,
    pub seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub checkpoint_every: u64,
    pub sa: SaConfig,
    pub uct: UctConfig,
    pub pipeline: PipelineConfig,
}

pub fn parse_difficulty(name: &str) -> Result<DifficultyRule, CliError> {
    match name {
        "evolved" => Ok(DifficultyRule::EVOLVED),
        "standard" => Ok(DifficultyRule::STANDARD),
        other => Err(CliError::Usage(format!("unknown difficulty rule `{other}` (expected evolved or standard)"))),
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn read_config(path: &Path) -> Result<SynthArgs, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

macro_rules! merge {
    ($flags:expr, $file:expr, $($field:ident),*) => {
        SynthArgs { config: None, dry_run: $flags.dry_run, $($field: $flags.$field.clone().or($file.$field),)* }
    };
}

fn usage(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(msg()))
    }
}

pub fn resolve(flags: &SynthArgs) -> Result<SynthSettings, CliError> {
    let file = match &flags.config {
        Some(p) => read_config(p)?,
        None => SynthArgs::default(),
    };
    let a = merge!(
        flags,
        file,
        method,
        mode,
        dataset,
        opponent,
        matches,
        sketch_matches,
        seed,
        psi_seed,
        budget_seconds,
        budget_iterations,
        sketch_budget,
        workers,
        out_dir,
        checkpoint_every,
        alpha,
        beta,
        t_initial,
        epsilon,
        depth_limit,
        k,
        rollout_iterations,
        difficulty
    );
    // A budget flag replaces whichever budget the file names.
    let a = SynthArgs {
        budget_seconds: if flags.budget_iterations.is_some() { None } else { a.budget_seconds },
        budget_iterations: if flags.budget_seconds.is_some() { None } else { a.budget_iterations },
        ..a
    };

    let method = a.method.unwrap_or(Method::Sa);
    let mode: Mode = a.mode.as_deref().unwrap_or("sketch-o").parse().map_err(CliError::Usage)?;
    let sa_default = SaConfig::default();
    let sa = SaConfig {
        alpha: a.alpha.unwrap_or(sa_default.alpha),
        beta: a.beta.unwrap_or(sa_default.beta),
        t_initial: a.t_initial.unwrap_or(sa_default.t_initial),
        epsilon: a.epsilon.unwrap_or(sa_default.epsilon),
        depth_limit: a.depth_limit.unwrap_or(sa_default.depth_limit),
        max_iterations: None,
    };
    sa.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let uct_default = UctConfig::default();
    let uct = UctConfig {
        k: a.k.unwrap_or(uct_default.k),
        rollout: SaConfig { max_iterations: Some(a.rollout_iterations.unwrap_or(200)), ..sa },
    };
    uct.validate().map_err(|e| CliError::Usage(e.to_string()))?;

    let (total, sketch) = match (a.budget_seconds, a.budget_iterations) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either a seconds or an iterations budget".into())),
        (_, Some(n)) => {
            usage(n > 0, || "--budget-iterations must be positive".into())?;
            let sketch = a.sketch_budget.map_or(n / 4, |s| s as u64);
            usage(a.sketch_budget.is_none_or(|s| s >= 0.0 && s.fract() == 0.0), || {
                "--sketch-budget must be a whole number of iterations".into()
            })?;
            (Budget::Iterations(n), Budget::Iterations(sketch.min(n)))
        }
        (s, None) => {
            let s = s.unwrap_or(DEFAULT_SECONDS);
            usage(s > 0.0 && s.is_finite(), || "--budget-seconds must be positive".into())?;
            let default_sketch = match method {
                Method::Sa => SA_SKETCH_SECONDS,
                Method::Uct => UCT_SKETCH_SECONDS,
            };
            let sketch = a.sketch_budget.unwrap_or(default_sketch.min(s / 2.0));
            usage(sketch >= 0.0, || "--sketch-budget must be >= 0".into())?;
            (Budget::Seconds(s), Budget::Seconds(sketch.min(s)))
        }
    };
    let br = match (total, sketch) {
        (Budget::Seconds(t), Budget::Seconds(s)) => Budget::Seconds(t - s),
        (Budget::Iterations(t), Budget::Iterations(s)) => Budget::Iterations(t - s),
        _ => unreachable!("both budgets share a unit"),
    };
    let psi_matches = a.matches.unwrap_or(1000);
    let sketch_psi_matches = a.sketch_matches.unwrap_or(200);
    usage(psi_matches > 0 && sketch_psi_matches > 0, || "match counts must be positive".into())?;
    let workers = a.workers.unwrap_or_else(default_workers);
    usage(workers > 0, || "--workers must be positive".into())?;

    let pipeline = PipelineConfig {
        mode,
        sketch_budget: sketch,
        br_budget: br,
        sketch_psi_matches,
        psi_matches,
        psi_seed: a.psi_seed.unwrap_or(PipelineConfig::default().psi_seed),
        difficulty: parse_difficulty(a.difficulty.as_deref().unwrap_or("evolved"))?,
    };
    Ok(SynthSettings {
        method,
        mode,
        dataset: a.dataset,
        opponent: a.opponent.unwrap_or_else(|| "ga".into()),
        seed: a.seed.unwrap_or(0),
        workers,
        out_dir: a.out_dir.unwrap_or_else(|| PathBuf::from("run")),
        checkpoint_every: a.checkpoint_every.unwrap_or(100).max(1),
        sa,
        uct,
        pipeline,
    })
}

/// Everything needed to rerun a command.
#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub format: &'static str,
    pub command: String,
    pub argv: Vec<String>,
    pub config: C,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Wall-clock start, seconds since the Unix epoch.
    pub started_unix_s: u64,
}

impl<C: Serialize> RunManifest<C> {
    pub fn new(command: &str, config: C) -> Self {
        RunManifest {
            format: MANIFEST_FORMAT,
            command: command.into(),
            argv: std::env::args().collect(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

//! Search trajectories: one record per search iteration, optionally
//! streamed to CSV, plus periodic incumbent checkpoints.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Instant;

/// CSV columns, in order.
pub const CSV_HEADER: &str = "elapsed_s,iteration,phase,temperature,c_score,psi_score,best_psi,program_len";

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    /// Seconds since the recorder started; absent when timing is disabled.
    pub elapsed_s: Option<f64>,
    pub iteration: u64,
    pub phase: String,
    pub temperature: Option<f64>,
    pub c_score: Option<f64>,
    pub psi_score: Option<f64>,
    /// Running maximum of `psi_score` within the phase.
    pub best_psi: Option<f64>,
    pub program_len: usize,
    /// Moves accepted so far in the phase.
    pub accepted: u64,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl Record {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            opt(self.elapsed_s.map(|t| (t * 1000.0).round() / 1000.0)),
            self.iteration,
            self.phase,
            opt(self.temperature),
            opt(self.c_score),
            opt(self.psi_score),
            opt(self.best_psi),
            self.program_len
        )
    }
}

/// What one iteration contributes to the trajectory.
#[derive(Debug, Clone, Copy, Default)]
pub struct Observation {
    pub temperature: Option<f64>,
    pub c_score: Option<f64>,
    pub psi_score: Option<f64>,
    pub program_len: usize,
    pub accepted: bool,
}

/// Collects trajectory records. All sinks are optional.
pub struct Recorder {
    started: Instant,
    timed: bool,
    records: Vec<Record>,
    csv: Option<Box<dyn Write + Send>>,
    checkpoint: Option<(PathBuf, u64)>,
    phase: String,
    best_psi: Option<f64>,
    accepted: u64,
    iteration: u64,
    error: Option<io::Error>,
}

impl Default for Recorder {
    fn default() -> Self {
        Recorder::new()
    }
}

impl std::fmt::Debug for Recorder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Recorder").field("phase", &self.phase).field("records", &self.records.len()).finish()
    }
}

impl Recorder {
    pub fn new() -> Self {
        Recorder {
            started: Instant::now(),
            timed: true,
            records: Vec::new(),
            csv: None,
            checkpoint: None,
            phase: "search".into(),
            best_psi: None,
            accepted: 0,
            iteration: 0,
            error: None,
        }
    }

    /// Leaves `elapsed_s` empty so output depends only on the inputs.
    pub fn untimed(mut self) -> Self {
        self.timed = false;
        self
    }

    pub fn with_csv(mut self, mut sink: Box<dyn Write + Send>) -> io::Result<Self> {
        writeln!(sink, "{CSV_HEADER}")?;
        self.csv = Some(sink);
        Ok(self)
    }

    /// Writes the incumbent to `path` every `every` iterations.
    pub fn with_checkpoint(mut self, path: impl Into<PathBuf>, every: u64) -> Self {
        self.checkpoint = Some((path.into(), every.max(1)));
        self
    }

    /// Starts a new phase; the running best and accepted count restart.
    pub fn set_phase(&mut self, phase: &str) {
        self.phase = phase.to_string();
        self.best_psi = None;
        self.accepted = 0;
    }

    pub fn phase(&self) -> &str {
        &self.phase
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn iterations(&self) -> u64 {
        self.iteration
    }

    /// Appends one record. `incumbent` renders the current best program and
    /// is only called when a checkpoint is due.
    pub fn log(&mut self, obs: Observation, incumbent: impl FnOnce() -> String) {
        if let Some(p) = obs.psi_score.filter(|p| p.is_finite()) {
            self.best_psi = Some(self.best_psi.map_or(p, |b| b.max(p)));
        }
        self.accepted += u64::from(obs.accepted);
        let rec = Record {
            elapsed_s: self.timed.then(|| self.started.elapsed().as_secs_f64()),
            iteration: self.iteration,
            phase: self.phase.clone(),
            temperature: obs.temperature,
            c_score: obs.c_score.filter(|c| c.is_finite()),
            psi_score: obs.psi_score.filter(|p| p.is_finite()),
            best_psi: self.best_psi,
            program_len: obs.program_len,
            accepted: self.accepted,
        };
        if let Some(w) = self.csv.as_mut() {
            if let Err(e) = writeln!(w, "{}", rec.csv_line()) {
                self.error.get_or_insert(e);
            }
        }
        self.records.push(rec);
        self.iteration += 1;
        if let Some((path, every)) = &self.checkpoint {
            if self.iteration.is_multiple_of(*every) {
                if let Err(e) = fs::write(path, incumbent() + "\n") {
                    self.error.get_or_insert(e);
                }
            }
        }
    }

    /// Writes `text` to the checkpoint file, if one is configured.
    pub fn write_checkpoint(&mut self, text: &str) -> io::Result<()> {
        if let Some((path, _)) = &self.checkpoint {
            fs::write(path, format!("{text}\n"))?;
        }
        Ok(())
    }

    /// Flushes sinks and reports the first write error, if any.
    pub fn finish(&mut self) -> io::Result<()> {
        if let Some(w) = self.csv.as_mut() {
            w.flush()?;
        }
        match self.error.take() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }
}

//! Best win rate over time, one run per trajectory file.

use std::io::{self, Write};
use std::process::ExitCode;

use serde::{Deserialize, Serialize};

use crate::args::ReportArgs;
use crate::commands::io_err;
use crate::CliError;

#[derive(Debug, Deserialize)]
struct TrajectoryRow {
    elapsed_s: Option<f64>,
    iteration: u64,
    phase: String,
    psi_score: Option<f64>,
}

#[derive(Debug, Serialize)]
struct ReportRow<'a> {
    run: &'a str,
    iteration: u64,
    elapsed_s: Option<f64>,
    phase: &'a str,
    psi_score: Option<f64>,
    best_psi: Option<f64>,
}

pub fn report(args: &ReportArgs) -> Result<ExitCode, CliError> {
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(crate::commands::create(p)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = csv::Writer::from_writer(sink);
    let out_err = |e: csv::Error| CliError::Io(format!("report output: {e}"));
    for path in &args.trajectories {
        let run = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        let run = match path.parent().and_then(|p| p.file_name()) {
            Some(dir) if run == "trajectory" => dir.to_string_lossy().into_owned(),
            _ => run,
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
        let mut best: Option<f64> = None;
        for row in reader.deserialize() {
            let row: TrajectoryRow = row.map_err(|e| io_err(path, e))?;
            if let Some(p) = row.psi_score {
                best = Some(best.map_or(p, |b| b.max(p)));
            }
            out.serialize(ReportRow {
                run: &run,
                iteration: row.iteration,
                elapsed_s: row.elapsed_s,
                phase: &row.phase,
                psi_score: row.psi_score,
                best_psi: best,
            })
            .map_err(out_err)?;
        }
    }
    out.flush().map_err(|e| CliError::Io(format!("report output: {e}")))?;
    Ok(ExitCode::SUCCESS)
}
